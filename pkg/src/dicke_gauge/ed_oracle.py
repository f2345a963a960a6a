"""
Exact diagonalization of the three-level Dicke Hamiltonian on the collective-spin
(symmetric) sector times a truncated Fock space.

Basis ordering is field-major: |n, m> maps to index n * (2N + 1) + (m + N), which
is what scipy.sparse.kron(boson_op, spin_op) produces. Within the spin factor m
runs from -s to s, so S_z = diag(-s, ..., s) and S_+ sits on the first subdiagonal.
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.io
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh
from scipy.sparse.linalg import norm as sparse_norm

from .config import ED_CONFIG, limit_setting
from .errors import ContractViolation, DomainError, EigensolverError, ResourceError, ValidationError
from .model import GaugeKind, ModelParams, spin_value
from .variational import solve_ground_state

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EDLimits:
    """Dimension limits applied to one ED run."""

    max_dimension: int
    dense_limit: int

    @classmethod
    def from_settings(cls) -> "EDLimits":
        return cls(limit_setting("max_dimension"), limit_setting("dense_limit"))


@dataclass(frozen=True)
class SpinOperatorSet:
    """S_z, S_+, S_- for spin s in the |s, m> basis, m ascending; dense unless built sparse."""

    s: float
    Sz: np.ndarray | sparse.csr_matrix
    Sp: np.ndarray | sparse.csr_matrix
    Sm: np.ndarray | sparse.csr_matrix

    @property
    def dimension(self) -> int:
        return self.Sz.shape[0]


@dataclass(frozen=True)
class BosonOperatorSet:
    """a, a^dagger, a^dagger a truncated at Fock cutoff n_max; dense unless built sparse."""

    n_max: int
    a: np.ndarray | sparse.csr_matrix
    adag: np.ndarray | sparse.csr_matrix
    number: np.ndarray | sparse.csr_matrix

    @property
    def dimension(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class EDResult:
    """
    Outcome of an exact-diagonalization run.

    Attributes:
        gauge: Gauge the Hamiltonian was built in
        N: Atom count
        n_max_used: Fock cutoff of the reported numbers
        dimension: Hilbert space dimension (2N+1)(n_max_used+1)
        ground_energy_per_atom: E0 / N (Hermitian gauges)
        n_p_ed: <a^dagger a> / N in the ground state
        delta_na_ed: <S_z> / N in the ground state
        spectrum: Sorted complex eigenvalues (non-Hermitian gauge)
        tail_population: Ground-state weight in the top Fock levels
        converged: Whether cutoff_converge met its tolerance
        achieved_tolerance: Last |E0(n_max) - E0(2 n_max)|, when measured
        doublings: Number of cutoff doublings performed
    """

    gauge: GaugeKind
    N: int
    n_max_used: int
    dimension: int
    ground_energy_per_atom: float | None = None
    n_p_ed: float | None = None
    delta_na_ed: float | None = None
    spectrum: tuple[complex, ...] | None = None
    tail_population: float = math.nan
    converged: bool = False
    achieved_tolerance: float | None = None
    doublings: int = 0


def check_dimension(N: int, n_max: int, limit: int | None = None) -> int:
    """
    Resource guard shared by every allocation path.

    Args:
        N: Atom count
        n_max: Fock cutoff
        limit: Maximum dimension; defaults to the configured DICKE_ED_MAX_DIM

    Returns:
        The dimension (2N+1)(n_max+1)

    Raises:
        ResourceError: If the dimension exceeds the limit
    """
    limit = limit_setting("max_dimension") if limit is None else limit
    dimension = (2 * N + 1) * (n_max + 1)
    if dimension > limit:
        raise ResourceError(
            f"Hilbert space dimension {dimension} = (2N+1)(n_max+1) for N={N}, n_max={n_max} "
            f"exceeds the limit {limit}. Use fewer atoms or raise DICKE_ED_MAX_DIM.",
            dimension=dimension,
            limit=limit,
        )
    return dimension


def _spin_ladder(s: float) -> tuple[np.ndarray, np.ndarray]:
    """m values (ascending) and the S_+ matrix elements <m+1|S_+|m>."""
    twice = 2 * s
    if not math.isfinite(twice) or twice < 0 or abs(twice - round(twice)) > 1e-12:
        raise ValidationError({"s": f"2s must be a non-negative integer, got s={s!r}"})
    dimension = int(round(twice)) + 1
    m = -s + np.arange(dimension, dtype=float)
    raising = np.sqrt(s * (s + 1) - m[:-1] * (m[:-1] + 1))
    return m, raising


def _dense_guard(what: str, dimension: int) -> None:
    """Cap dense operator matrices at the dense limit."""
    limit = limit_setting("dense_limit")
    if dimension > limit:
        raise ResourceError(
            f"dense {what} matrices of size {dimension}x{dimension} exceed the dense limit {limit}. "
            "Use sparse_format=True or raise DICKE_ED_DENSE_LIMIT.",
            dimension=dimension,
            limit=limit,
        )


def spin_matrices(s: float, sparse_format: bool = False) -> SpinOperatorSet:
    """
    Standard angular-momentum matrices for spin s.

    S_+|s, m> = sqrt(s(s+1) - m(m+1)) |s, m+1>; with m ascending the nonzero
    entries of S_+ sit at (row m+1, column m).

    Args:
        s: Spin value (integer or half-integer)
        sparse_format: Return CSR matrices instead of dense arrays

    Raises:
        ValidationError: If 2s is not a non-negative integer
        ResourceError: If 2s+1 exceeds the dense limit (dense) or the dimension limit (sparse)
    """
    m, raising = _spin_ladder(s)
    if sparse_format:
        limit = limit_setting("max_dimension")
        if len(m) > limit:
            raise ResourceError(
                f"spin dimension {len(m)} exceeds the limit {limit}. Raise DICKE_ED_MAX_DIM.",
                dimension=len(m),
                limit=limit,
            )
        Sp = sparse.diags(raising, -1, format="csr")
        return SpinOperatorSet(s=s, Sz=sparse.diags(m, format="csr"), Sp=Sp, Sm=Sp.T.tocsr())

    _dense_guard("spin", len(m))
    Sp = np.diag(raising, k=-1)
    return SpinOperatorSet(s=s, Sz=np.diag(m), Sp=Sp, Sm=Sp.T.copy())


def boson_matrices(n_max: int, sparse_format: bool = False) -> BosonOperatorSet:
    """Truncated ladder operators; [a, a^dagger] = 1 except in the top Fock state."""
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise ValidationError({"n_max": f"Fock cutoff must be an integer >= 1, got {n_max!r}"})
    ladder = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    occupation = np.arange(n_max + 1, dtype=float)
    if sparse_format:
        a = sparse.diags(ladder, 1, format="csr")
        return BosonOperatorSet(n_max=n_max, a=a, adag=a.T.tocsr(), number=sparse.diags(occupation, format="csr"))

    _dense_guard("boson", n_max + 1)
    a = np.diag(ladder, k=1)
    return BosonOperatorSet(n_max=n_max, a=a, adag=a.T.copy(), number=np.diag(occupation))


def build_hamiltonian(
    gauge: GaugeKind, p: ModelParams, n_max: int, limits: EDLimits | None = None
) -> sparse.csr_matrix:
    """
    Assemble the collective Hamiltonian

        H = omega a^dag a + Omega S_z
            + (G Omega / sqrt(2N)) (a + a^dag)(S_+ + S_-)      [Coulomb term]
            + (G omega / sqrt(2N)) (a - a^dag)(S_+ - S_-)      [dipole term]

    Coulomb keeps only the first coupling term, Dipole only the second, Unified
    both; the non-Hermitian gauge multiplies the full coupling by i. The field
    phase does not enter.

    Args:
        gauge: Gauge of the interaction
        p: Model parameters
        n_max: Fock cutoff (>= 1)
        limits: Dimension limits; defaults to EDLimits.from_settings()

    Returns:
        CSR matrix, real for Hermitian gauges and complex for the non-Hermitian one

    Raises:
        ValidationError: If n_max < 1
        ResourceError: If the dimension exceeds the configured limit
    """
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise ValidationError({"n_max": f"Fock cutoff must be an integer >= 1, got {n_max!r}"})
    limits = limits or EDLimits.from_settings()
    dimension = check_dimension(p.N, n_max, limits.max_dimension)

    spin = spin_matrices(float(spin_value(p.N)), sparse_format=True)
    boson = boson_matrices(n_max, sparse_format=True)
    Sz, Sp, Sm = spin.Sz, spin.Sp, spin.Sm
    a, adag, number = boson.a, boson.adag, boson.number
    spin_eye = sparse.identity(spin.dimension, format="csr")
    boson_eye = sparse.identity(n_max + 1, format="csr")

    H = p.omega * sparse.kron(number, spin_eye, format="csr")
    H = H + p.Omega * sparse.kron(boson_eye, Sz, format="csr")

    scale = p.G / math.sqrt(2.0 * p.N)
    coupling = sparse.csr_matrix((dimension, dimension))
    if gauge is not GaugeKind.DIPOLE:
        coupling = coupling + scale * p.Omega * sparse.kron(a + adag, Sp + Sm, format="csr")
    if gauge is not GaugeKind.COULOMB:
        coupling = coupling + scale * p.omega * sparse.kron(a - adag, Sp - Sm, format="csr")

    if gauge.is_hermitian:
        H = H + coupling
    else:
        H = H.astype(complex) + 1j * coupling

    logger.debug(f"Built {gauge.value} Hamiltonian: N={p.N}, n_max={n_max}, dim={dimension}, nnz={H.nnz}")
    return H.tocsr()


def parity_operator(N: int, n_max: int) -> sparse.dia_matrix:
    """Diagonal parity exp(i pi (a^dag a + S_z + N)) = (-1)^(n + m + N)."""
    n = np.arange(n_max + 1)
    shifted_m = np.arange(2 * spin_value(N) + 1)  # m + N
    signs = np.where((n[:, None] + shifted_m[None, :]) % 2 == 0, 1.0, -1.0).ravel()
    return sparse.diags(signs)


def _max_abs(matrix) -> float:
    if sparse.issparse(matrix):
        return float(abs(matrix).max()) if matrix.nnz else 0.0
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


def _diagnostics(H) -> str:
    if sparse.issparse(H):
        norm = sparse_norm(H)
    else:
        norm = np.linalg.norm(H)
    return f"shape={H.shape}, dtype={H.dtype}, frobenius_norm={norm:.6g}"


def ground_state(H, dense_limit: int | None = None) -> tuple[float, np.ndarray]:
    """
    Lowest eigenpair of a Hermitian matrix.

    Dense LAPACK eigh is used up to `dense_limit`; above it ARPACK eigsh with
    which='SA' and a fixed starting vector.

    Args:
        H: Hermitian matrix, dense or sparse
        dense_limit: Dimension threshold; defaults to DICKE_ED_DENSE_LIMIT

    Returns:
        Tuple of (E0, normalized eigenvector)

    Raises:
        ContractViolation: If H is not Hermitian to 1e-10
        EigensolverError: If the eigensolver fails
    """
    asymmetry = _max_abs(H - H.conj().T)
    if asymmetry > ED_CONFIG["hermitian_tolerance"]:
        raise ContractViolation(
            f"Matrix is not Hermitian (max |H - H^dagger| = {asymmetry:.3g}). "
            "Use complex_spectrum for non-Hermitian matrices."
        )

    dense_limit = limit_setting("dense_limit") if dense_limit is None else dense_limit
    dimension = H.shape[0]
    try:
        if dimension <= dense_limit:
            dense = H.toarray() if sparse.issparse(H) else np.asarray(H)
            values, vectors = scipy.linalg.eigh(dense, subset_by_index=[0, 0])
        else:
            start = np.random.default_rng(0).standard_normal(dimension)
            values, vectors = eigsh(H, k=1, which="SA", v0=start)
    except (np.linalg.LinAlgError, ArpackNoConvergence, ArpackError) as e:
        raise EigensolverError(f"Ground-state eigensolver failed ({_diagnostics(H)}): {e}") from e

    vector = vectors[:, 0]
    vector = vector / np.linalg.norm(vector)
    pivot = np.argmax(np.abs(vector))
    if vector[pivot].real < 0:
        vector = -vector
    return float(values[0]), vector


def complex_spectrum(H, dense_limit: int | None = None) -> list[complex]:
    """
    Full eigenvalue list of a general square matrix, sorted by real then imaginary part.

    Raises:
        ResourceError: If the matrix is larger than the dense limit
        EigensolverError: If LAPACK fails
    """
    dimension = H.shape[0]
    dense_limit = limit_setting("dense_limit") if dense_limit is None else dense_limit
    if dimension > dense_limit:
        raise ResourceError(
            f"complex_spectrum needs a dense {dimension}x{dimension} matrix, above the dense limit "
            f"{dense_limit}. Lower n_max or raise DICKE_ED_DENSE_LIMIT.",
            dimension=dimension,
            limit=dense_limit,
        )
    dense = H.toarray() if sparse.issparse(H) else np.asarray(H)
    try:
        values = scipy.linalg.eigvals(dense)
    except np.linalg.LinAlgError as e:
        raise EigensolverError(f"General eigensolver failed ({_diagnostics(H)}): {e}") from e
    return sorted((complex(v) for v in values), key=lambda z: (z.real, z.imag))


def _probabilities(vector: np.ndarray, N: int, n_max: int) -> np.ndarray:
    vector = np.asarray(vector)
    expected = (2 * N + 1) * (n_max + 1)
    if vector.shape != (expected,):
        raise ContractViolation(
            f"Vector has shape {vector.shape} but N={N}, n_max={n_max} needs ({expected},)"
        )
    norm = float(np.linalg.norm(vector))
    if abs(norm - 1.0) > ED_CONFIG["norm_tolerance"]:
        raise ContractViolation(f"Vector is not normalized (norm = {norm!r}). Normalize before measuring.")
    return (np.abs(vector) ** 2).reshape(n_max + 1, 2 * N + 1)


def ed_observables(vector: np.ndarray, N: int, n_max: int) -> tuple[float, float]:
    """
    Per-atom photon number and population imbalance of a state.

    Returns:
        Tuple of (<a^dag a>/N, <S_z>/N)

    Raises:
        ContractViolation: If the vector is not normalized to 1e-8 or has the wrong length
    """
    probs = _probabilities(vector, N, n_max)
    n = np.arange(n_max + 1, dtype=float)
    m = np.arange(-N, N + 1, dtype=float)
    n_p = float(probs.sum(axis=1) @ n) / N
    delta_na = float(probs.sum(axis=0) @ m) / N
    return n_p, delta_na


def tail_population(vector: np.ndarray, N: int, n_max: int, levels: int | None = None) -> float:
    """Weight of a state in the top `levels` Fock states (default 5)."""
    levels = ED_CONFIG["tail_levels"] if levels is None else levels
    probs = _probabilities(vector, N, n_max)
    return float(probs[-min(levels, n_max + 1):].sum())


def solve_point(
    gauge: GaugeKind, p: ModelParams, n_max: int, limits: EDLimits | None = None
) -> EDResult:
    """
    Build and diagonalize at a fixed cutoff.

    Hermitian gauges report the ground energy and observables; the
    non-Hermitian gauge reports its sorted complex spectrum.
    """
    limits = limits or EDLimits.from_settings()
    H = build_hamiltonian(gauge, p, n_max, limits)
    dimension = H.shape[0]
    if not gauge.is_hermitian:
        return EDResult(
            gauge=gauge,
            N=p.N,
            n_max_used=n_max,
            dimension=dimension,
            spectrum=tuple(complex_spectrum(H, limits.dense_limit)),
        )

    E0, vector = ground_state(H, limits.dense_limit)
    n_p_ed, delta_na_ed = ed_observables(vector, p.N, n_max)
    return EDResult(
        gauge=gauge,
        N=p.N,
        n_max_used=n_max,
        dimension=dimension,
        ground_energy_per_atom=E0 / p.N,
        n_p_ed=n_p_ed,
        delta_na_ed=delta_na_ed,
        tail_population=tail_population(vector, p.N, n_max),
    )


def initial_cutoff(gauge: GaugeKind, p: ModelParams) -> int:
    """Starting cutoff ceil(4 N max(n_p, 1)) + 20 from the variational photon number."""
    n_p = solve_ground_state(gauge, p).n_p
    return math.ceil(4 * p.N * max(n_p, 1.0)) + ED_CONFIG["cutoff_margin"]


def cutoff_converge(
    gauge: GaugeKind,
    p: ModelParams,
    target_tol: float,
    n_max_start: int | None = None,
    limits: EDLimits | None = None,
) -> EDResult:
    """
    Double the Fock cutoff until the ground energy is stable.

    Converged means |E0(n_max) - E0(2 n_max)| / N < target_tol and the tail
    population at n_max is below 1e-10; the result at the smaller cutoff is reported.

    Args:
        gauge: Hermitian gauge
        p: Model parameters
        target_tol: Per-atom energy tolerance (> 0)
        n_max_start: Starting cutoff; defaults to initial_cutoff(gauge, p)
        limits: Dimension limits; defaults to EDLimits.from_settings()

    Returns:
        EDResult; converged is False if max_doublings ran out

    Raises:
        ValidationError: If target_tol is not a positive number
        DomainError: For the non-Hermitian gauge
        ResourceError: If the dimension guard is hit before convergence,
            carrying the best tolerance achieved
    """
    if not isinstance(target_tol, (int, float)) or not math.isfinite(target_tol) or target_tol <= 0:
        raise ValidationError({"tol": f"target tolerance must be > 0, got {target_tol!r}"})
    if not gauge.is_hermitian:
        raise DomainError(
            "cutoff_converge tracks a Hermitian ground state. Use solve_point for non-Hermitian spectra."
        )

    limits = limits or EDLimits.from_settings()
    n_max = initial_cutoff(gauge, p) if n_max_start is None else n_max_start
    check_dimension(p.N, n_max, limits.max_dimension)
    current = solve_point(gauge, p, n_max, limits)
    best = math.inf

    for doubling in range(ED_CONFIG["max_doublings"]):
        bigger = 2 * n_max
        try:
            check_dimension(p.N, bigger, limits.max_dimension)
        except ResourceError as e:
            raise ResourceError(
                f"{e} Best tolerance reached before the guard: {best:.3g} (target {target_tol:.3g}).",
                dimension=e.dimension,
                limit=e.limit,
                best_tolerance=best,
            ) from e

        following = solve_point(gauge, p, bigger, limits)
        difference = abs(current.ground_energy_per_atom - following.ground_energy_per_atom)
        best = min(best, difference)
        logger.debug(
            f"{gauge.value} N={p.N}: n_max {n_max} -> {bigger}, dE={difference:.3e}, "
            f"tail={current.tail_population:.3e}"
        )
        if difference < target_tol and current.tail_population < ED_CONFIG["tail_tolerance"]:
            return replace(current, converged=True, achieved_tolerance=difference, doublings=doubling + 1)
        current, n_max = following, bigger

    logger.warning(
        f"{gauge.value} N={p.N}: cutoff did not converge after {ED_CONFIG['max_doublings']} doublings "
        f"(best dE={best:.3e}, target {target_tol:.3e})"
    )
    return replace(current, converged=False, achieved_tolerance=best, doublings=ED_CONFIG["max_doublings"])


def dump_matrix_market(H, path: str | Path, comment: str = "") -> Path:
    """
    Write a matrix in Matrix Market coordinate format with 17 significant digits.

    Returns:
        Path of the written file (".mtx" appended when missing)
    """
    path = Path(path)
    if path.suffix != ".mtx":
        path = path.with_name(path.name + ".mtx")
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), sparse.coo_matrix(H), comment=comment, precision=17)
    logger.info(f"Wrote {H.shape[0]}x{H.shape[1]} matrix to {path}")
    return path

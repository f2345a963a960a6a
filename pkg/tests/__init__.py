"""Tests for Dicke Gauge."""

"""Adaptive multi-hole spectrum sensing: detectors, theory and Monte Carlo harness."""

__version__ = "0.1.0"

"""Geodesic distance, curvature measures and convergence diagnostics for
singular conformal metrics ``exp(2u) g0``."""

__version__ = "0.1.0"

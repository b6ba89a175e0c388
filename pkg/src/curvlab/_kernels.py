"""Radial kernels and quadrature rules shared across modules."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

TWO_PI = 2.0 * np.pi
BUMP_NORM = 4.0 / np.pi  # unit mass for c * (1 - s^2)^3 on the unit disk


def bump(r, eps):
    """Radial C^2 bump of unit mass supported in the disk of radius ``eps``."""
    s2 = (np.asarray(r, dtype=float) / eps) ** 2
    out = np.where(s2 < 1.0, BUMP_NORM * (1.0 - np.minimum(s2, 1.0)) ** 3, 0.0)
    return out / eps**2


def bump_mass_within(r, eps):
    """Mass of ``bump(., eps)`` inside the disk of radius ``r``."""
    s2 = np.minimum((np.asarray(r, dtype=float) / eps) ** 2, 1.0)
    return 1.0 - (1.0 - s2) ** 4


def mollified_log(r, eps):
    """``(log|.| * bump_eps)(x)`` as a function of ``r = |x|``.

    Equals ``log r`` for ``r >= eps`` and stays finite at the origin,
    where it takes the value ``log eps - 25/24``.
    """
    r = np.asarray(r, dtype=float)
    if eps <= 0:
        return np.log(r)
    s2 = np.minimum((r / eps) ** 2, 1.0)
    inner = (1.0 - s2) ** 4
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(np.where(r > 0, r, 1.0))
        f = (1.0 - inner) / 4.0
        f_log = np.where(s2 > 0, f * np.log(np.where(s2 > 0, s2, 1.0)), 0.0)
    poly = s2 - 0.75 * s2**2 + s2**3 / 3.0 - s2**4 / 16.0
    j = 2.0 * (-25.0 / 48.0 - f_log + poly)
    inside = logr * (1.0 - inner) + np.log(eps) * inner + j
    return np.where(r >= eps, np.log(np.where(r > 0, r, 1.0)), inside)


def mollified_log_dr(r, eps):
    """Radial derivative of :func:`mollified_log` (Newton's flux form)."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if eps <= 0:
            return 1.0 / r
        out = bump_mass_within(r, eps) / r
    return np.where(r > 0, out, 0.0)


def log_core_correction(r, eps):
    """``log r - mollified_log(r, eps)``; compactly supported in ``[0, eps)``."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(r < eps, np.log(r) - mollified_log(r, eps), 0.0)


def smoothstep(p):
    """Quintic C^2 step: 0 for p <= 0, 1 for p >= 1, slope at most 15/8."""
    p = np.clip(p, 0.0, 1.0)
    return p**3 * (10.0 - 15.0 * p + 6.0 * p**2)


def smoothstep_d(p):
    inside = (p > 0) & (p < 1)
    p = np.clip(p, 0.0, 1.0)
    return np.where(inside, 30.0 * p**2 * (1.0 - p) ** 2, 0.0)


def smoothstep_dd(p):
    inside = (p > 0) & (p < 1)
    p = np.clip(p, 0.0, 1.0)
    return np.where(inside, 60.0 * p * (1.0 - p) * (1.0 - 2.0 * p), 0.0)


@lru_cache(maxsize=None)
def gauss_legendre01(n):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_jacobi01(n, beta):
    """Nodes/weights on [0, 1] for the weight ``s**beta`` (beta > -1)."""
    x, w = roots_jacobi(n, 0.0, beta)
    # (1 + x)^beta on [-1, 1] maps to (2 s)^beta with s = (1 + x) / 2
    return 0.5 * (x + 1.0), w / 2.0 ** (1.0 + beta)


def square_log_integral(half_width):
    """Exact integral of ``log|x|`` over the square ``[-a, a]^2``."""
    a = half_width
    return 2.0 * a * a * (2.0 * np.log(a) + np.log(2.0) - 3.0 + np.pi / 2.0)

"""Builtin metrics used by the scenarios and the demos."""

from __future__ import annotations

import numpy as np

from .measure import SignedMeasure
from .metric import AbsLine, Background, ConformalMetric, LogLog
from .potential import torus_potential


def _cone(beta=0.3, x=0.0, y=0.0):
    return ConformalMetric(atoms=(((x, y), beta),), name=f"cone(beta={beta:g})")


def _cone_probe(beta=-1.0, x=0.0, y=0.0):
    return ConformalMetric.probe(atoms=(((x, y), beta),), name=f"cone-probe(beta={beta:g})")


def _flat():
    return ConformalMetric(name="flat")


def _multicone(b1=0.3, b2=-0.4, b3=0.2):
    atoms = (((-0.5, 0.0), b1), ((0.5, 0.0), b2), ((0.0, 0.5), b3))
    return ConformalMetric(atoms=atoms, name="multicone")


def _hulin_troyanov(a=1.5):
    # 180 cells of 1/256 each way: every point stays inside |z| < 1
    bg = Background("plane", (-0.703125, -0.703125, 0.703125, 0.703125))
    return ConformalMetric.probe(background=bg, atoms=(((0.0, 0.0), -1.0),), terms=(LogLog(a),),
                                 name=f"hulin-troyanov(a={a:g})")


def _abs_line(coef=1.0, x0=0.0):
    return ConformalMetric(terms=(AbsLine(coef, x0),), name="abs-line")


def _torus_dipole(mass=0.8 * np.pi, n=256):
    mu = SignedMeasure.from_atoms({(0.25, 0.5): mass, (0.75, 0.5): -mass})
    tp = torus_potential(mu, n)
    return ConformalMetric(background=Background.torus(), atoms=tp.atoms, smooth_part=tp.field,
                           core=tp.core, name=f"torus-dipole(mass={mass:.6g})")


BUILTINS = {
    "cone": (_cone, "beta=0.3, x=0, y=0",
             "single cone point u = beta log|x - z|, curvature -2 pi beta at z"),
    "cone-probe": (_cone_probe, "beta=-1, x=0, y=0",
                   "cone point without the beta > -1 check (masses >= 2 pi, probes only)"),
    "flat": (_flat, "", "u = 0 on [-1, 1]^2"),
    "multicone": (_multicone, "b1=0.3, b2=-0.4, b3=0.2",
                  "three cone points"),
    "hulin-troyanov": (_hulin_troyanov, "a=1.5",
                       "|dz|^2 / (|z|^2 |log|z||^(2a)) on [-0.703, 0.703]^2"),
    "abs-line": (_abs_line, "coef=1, x0=0",
                 "u = coef |x^1 - x0|, curvature -2 coef H^1 on the line"),
    "torus-dipole": (_torus_dipole, "mass=0.8 pi, n=256",
                     "flat torus with cone points of masses +mass at (0.25, 0.5), -mass at (0.75, 0.5)"),
}


def list_builtins():
    """Catalog text: name, parameters and a description of each metric."""
    lines = []
    for name, (_, params, desc) in BUILTINS.items():
        lines.append(f"{name:<16} [{params}]  {desc}" if params else f"{name:<16} []  {desc}")
    return "\n".join(lines)


def build(name, **params):
    if name not in BUILTINS:
        raise KeyError(name)
    return BUILTINS[name][0](**params)

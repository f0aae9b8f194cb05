"""The two reference experiments: three spherical Poisson kernels on the
2-sphere and four heat kernels on the upper half space over R^2."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import CurveSpec
from .engine import SelectionConfig
from .kernels import Atom, KernelFamily, ParamPoint
from .signals import KernelCombination


@dataclass(frozen=True)
class Experiment:
    name: str
    family: KernelFamily
    signal: KernelCombination
    iterations: int
    selection: SelectionConfig
    curve: CurveSpec
    # iteration -> relative error reported for the original runs
    published: dict[int, float]
    # iteration -> acceptance ceiling
    bands: dict[int, float]


def _sphere_dir(phi: float, theta: float) -> list[float]:
    return [math.sin(phi) * math.cos(theta), math.sin(phi) * math.sin(theta), math.cos(phi)]


def example1() -> Experiment:
    fam = KernelFamily.sphere(3)
    coeffs = (0.8463, 1.4105, 0.0470)
    rhos = (0.4, 0.6, 0.8)
    phis = (math.pi / 5, math.pi / 2, 4 * math.pi / 5)
    thetas = (math.pi / 5, 4 * math.pi / 5, 7 * math.pi / 5)
    terms = [
        (c, Atom(ParamPoint.in_ball(r, _sphere_dir(ph, th))))
        for c, r, ph, th in zip(coeffs, rhos, phis, thetas)
    ]
    return Experiment(
        "example1",
        fam,
        KernelCombination(terms),
        8,
        SelectionConfig(rho_max=0.99, grid_steps=(50, 50, 50)),
        CurveSpec(n=512, theta=3.02),
        {2: 0.4310, 4: 0.0237, 6: 0.0022, 8: 0.3e-5},
        {2: 0.6, 4: 0.06, 6: 0.01, 8: 1e-3},
    )


def example2() -> Experiment:
    fam = KernelFamily.heat(2)
    coeffs = (0.05, 0.5, 0.01, 1.0)
    ts = (3.0, 1.0, 5.0, 7.0)
    ys = ((-1.0, 1.0), (1.0, -5.0), (2.0, 6.0), (-5.0, 2.0))
    terms = [(c, Atom(ParamPoint.half(t, y))) for c, t, y in zip(coeffs, ts, ys)]
    return Experiment(
        "example2",
        fam,
        KernelCombination(terms),
        7,
        SelectionConfig(t_min=0.05, t_max=20.0, x_max=10.0, grid_steps=(50, 50, 50)),
        CurveSpec(n=512, start=(-20.0, -10.0), stop=(20.0, -10.0)),
        {3: 0.0190, 5: 0.0087, 7: 0.0002},
        {3: 0.06, 5: 0.03, 7: 2e-3},
    )


EXPERIMENTS = {"example1": example1, "example2": example2}


def boundary_truth(exp: Experiment, points: np.ndarray) -> np.ndarray:
    from .signals import signal_boundary_values

    return signal_boundary_values(exp.family, exp.signal, points)

"""Verification suites behind ``poafd verify`` and the acceptance tests.

Each suite returns ``CheckRow`` records: a computed value, the reference it
is compared with, the residual and the tolerance it must meet.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import (
    BoxBoundaryWarning,
    Decomposition,
    SelectionConfig,
    candidate_score,
    is_consecutive,
    maximal_select,
    multiple_candidates,
    poafd_run,
    relative_error,
)
from .kernels import Atom, ConvolutionProfile, KernelFamily, ParamPoint, QuadratureBox, eval_K, eval_K_derivative
from .oracles import (
    QuadratureGrid,
    brute_force_argmax,
    fd_kernel_derivative,
    grid_points,
    quadrature_inner_halfspace,
    quadrature_inner_sphere,
)
from .signals import KernelCombination, signal_norm

SCOPES = ("semigroup", "bvc", "derivatives", "greedy", "rate", "invariants")


@dataclass(frozen=True)
class CheckRow:
    suite: str
    name: str
    value: float
    reference: float
    residual: float
    tolerance: float
    passed: bool

    @classmethod
    def make(cls, suite, name, value, reference, residual, tolerance) -> "CheckRow":
        return cls(suite, name, float(value), float(reference), float(residual), float(tolerance),
                   bool(residual <= tolerance))


def _unit(rng: np.random.Generator, m: int) -> np.ndarray:
    u = rng.standard_normal(m)
    return u / np.linalg.norm(u)


def random_param(fam: KernelFamily, rng: np.random.Generator, t=(0.5, 2.0), x=1.0,
                 rho=(0.0, 0.7)) -> ParamPoint:
    if fam.half_space:
        return ParamPoint.half(rng.uniform(*t), rng.uniform(-x, x, fam.d))
    return ParamPoint.in_ball(rng.uniform(*rho), _unit(rng, fam.d))


def random_signal(fam: KernelFamily, rng: np.random.Generator, n_atoms: int, mass: float = 1.0,
                  multiples: bool = False, **box) -> KernelCombination:
    """``sum d_k E_{q_k}`` with ``sum |d_k| = mass``; optionally one order-2 atom."""
    params = [random_param(fam, rng, **box) for _ in range(n_atoms)]
    atoms = [Atom(p) for p in params]
    if multiples and fam.closed_form:
        atoms[-1] = Atom(params[0], 2, tuple(_unit(rng, fam.param_dim)))
    c = rng.uniform(0.2, 1.0, n_atoms) * rng.choice([-1.0, 1.0], n_atoms)
    c *= mass / np.sum(np.abs(c))
    return KernelCombination(list(zip(c, atoms)))


def _fam_label(fam: KernelFamily) -> str:
    return f"{fam.kind.value}/d={fam.d}"


# -- semigroup identities ----------------------------------------------------

_HALF_GRIDS = {
    ("poisson", 1): QuadratureGrid("box", (300_000,), 150.0),
    ("poisson", 2): QuadratureGrid("box", (1600,), 80.0),
    ("heat", 1): QuadratureGrid("box", (4000,), 30.0),
    ("heat", 2): QuadratureGrid("box", (600,), 30.0),
}
SPHERE_GRID = QuadratureGrid("sphere", (800, 1600))


def check_semigroup(rng: np.random.Generator, pairs: int = 6, tol: float = 1e-4) -> list[CheckRow]:
    rows = []
    for (name, d), grid in _HALF_GRIDS.items():
        fam = KernelFamily.poisson(d) if name == "poisson" else KernelFamily.heat(d)
        for i in range(pairs):
            q, p = random_param(fam, rng), random_param(fam, rng)
            ref = eval_K(fam, q, p)
            val = quadrature_inner_halfspace(fam, q, p, grid).value
            rows.append(CheckRow.make("semigroup", f"{_fam_label(fam)}#{i}", val, ref,
                                      abs(val - ref) / abs(ref), tol))
    fam = KernelFamily.sphere(3)
    for i in range(pairs):
        q, p = random_param(fam, rng), random_param(fam, rng)
        ref = eval_K(fam, q, p)
        val = quadrature_inner_sphere(q, p, SPHERE_GRID).value
        rows.append(CheckRow.make("semigroup", f"{_fam_label(fam)}#{i}", val, ref,
                                  abs(val - ref) / abs(ref), tol))
    return rows


# -- boundary vanishing ------------------------------------------------------


def bvc_signal(fam: KernelFamily) -> KernelCombination:
    """A fixed three-atom signal; its dominant atom sits at the origin (or the north pole)."""
    if fam.half_space:
        d = fam.d
        e1 = [1.0] + [0.0] * (d - 1)
        return KernelCombination([
            (1.0, Atom(ParamPoint.half(0.5, [0.0] * d))),
            (0.7, Atom(ParamPoint.half(1.5, e1))),
            (-0.4, Atom(ParamPoint.half(3.0, [-2.0] * d))),
        ])
    north = [0.0] * (fam.d - 1) + [1.0]
    east = [1.0] + [0.0] * (fam.d - 1)
    return KernelCombination([
        (1.0, Atom(ParamPoint.in_ball(0.6, north))),
        (0.5, Atom(ParamPoint.in_ball(0.3, east))),
        (-0.3, Atom(ParamPoint.in_ball(0.8, [-v for v in north]))),
    ])


def bvc_sequences(fam: KernelFamily, k_max: int = 20) -> dict[str, list[ParamPoint]]:
    ks = range(k_max + 1)
    if fam.half_space:
        d = fam.d
        ray = np.ones(d) / math.sqrt(d)
        return {
            "t=2^-k": [ParamPoint.half(2.0**-k, [0.0] * d) for k in ks],
            "|x|=2^k": [ParamPoint.half(1.0, 2.0**k * ray) for k in ks],
        }
    north = [0.0] * (fam.d - 1) + [1.0]
    return {"rho=1-2^-k": [ParamPoint.in_ball(1 - 2.0**-k, north) for k in ks]}


def check_bvc(k_max: int = 20, tol: float = 1e-3) -> list[CheckRow]:
    """Scores ``|<f, E_q>|`` at the end of each boundary-bound sequence.

    The ``t`` sequence sits on the dominant atom's centre, where the decay is
    slowest (``t^(d/2)`` for Poisson, ``t^(d/4)`` for heat).
    """
    rows = []
    fams = [KernelFamily.poisson(1), KernelFamily.poisson(2), KernelFamily.heat(1),
            KernelFamily.heat(2), KernelFamily.sphere(3)]
    for fam in fams:
        sig = bvc_signal(fam)
        state = Decomposition(fam, signal_norm=signal_norm(sig, fam))
        for label, seq in bvc_sequences(fam, k_max).items():
            scores = [candidate_score(fam, sig, state, Atom(q)) for q in seq]
            rows.append(CheckRow.make("bvc", f"{_fam_label(fam)} {label} k={k_max}",
                                      scores[-1], tol, scores[-1], tol))
    return rows


# -- derivatives -------------------------------------------------------------

DERIVATIVE_FAMILIES = (
    KernelFamily.poisson(1), KernelFamily.poisson(2), KernelFamily.heat(1),
    KernelFamily.heat(2), KernelFamily.sphere(3),
)


def check_derivatives(rng: np.random.Generator, pairs: int = 10, tol: float = 1e-6) -> list[CheckRow]:
    """Every order pair with total derivative order <= 4 against the extended-precision oracle.

    The residual is relative to ``max(|ref|, 1e-3 sqrt(D(a,a) D(b,b)))`` so that
    accidental zeros of a derivative do not blow up the comparison.
    """
    rows = []
    for fam in DERIVATIVE_FAMILIES:
        for i in range(pairs):
            q, p = random_param(fam, rng), random_param(fam, rng)
            for oa in (1, 2, 3):
                for ob in (1, 2, 3):
                    a = Atom(q, oa, tuple(_unit(rng, fam.param_dim)) if oa > 1 else None)
                    b = Atom(p, ob, tuple(_unit(rng, fam.param_dim)) if ob > 1 else None)
                    val = eval_K_derivative(fam, a, b)
                    ref = fd_kernel_derivative(fam, a, b)
                    scale = math.sqrt(abs(eval_K_derivative(fam, a, a) * eval_K_derivative(fam, b, b)))
                    res = abs(val - ref) / max(abs(ref), 1e-3 * scale)
                    rows.append(CheckRow.make("derivatives", f"{_fam_label(fam)}#{i} orders={oa},{ob}",
                                              val, ref, res, tol))
    return rows


# -- greediness --------------------------------------------------------------


def greedy_cases() -> list[tuple[KernelFamily, SelectionConfig]]:
    conv = KernelFamily.convolution(ConvolutionProfile.poisson(1), 1, QuadratureBox(40.0, 800))
    return [
        (KernelFamily.poisson(1), SelectionConfig(refine=False, t_max=5.0, x_max=3.0, grid_steps=(24, 24))),
        (KernelFamily.heat(2), SelectionConfig(refine=False, t_max=5.0, x_max=3.0, grid_steps=(8, 9, 9))),
        (KernelFamily.sphere(3), SelectionConfig(refine=False, grid_steps=(8, 9, 10))),
        (conv, SelectionConfig(refine=False, t_max=5.0, x_max=3.0, grid_steps=(16, 16))),
    ]


def check_greedy(rng: np.random.Generator, instances: int = 10) -> list[CheckRow]:
    """``maximal_select`` without refinement against the exhaustive scalar scan.

    Odd-numbered instances start from two committed atoms, so repeated
    parameters and multiple kernels enter the comparison.
    """
    rows = []
    for fam, cfg in greedy_cases():
        grid = grid_points(fam, cfg)
        for i in range(instances):
            sig = random_signal(fam, rng, 3, multiples=True, t=(0.3, 4.0), x=2.5)
            if i % 2:
                state = poafd_run(fam, sig, 2, cfg)
            else:
                state = Decomposition(fam, signal_norm=signal_norm(sig, fam))
            atom, score = maximal_select(fam, sig, state, cfg)
            ref_atom, ref_score = brute_force_argmax(fam, sig, state, grid,
                                                     multiple_candidates(fam, sig, state, cfg))
            same = atom == ref_atom
            rows.append(CheckRow.make("greedy", f"{_fam_label(fam)}#{i} state={len(state)}",
                                      score, ref_score, 0.0 if same else 1.0, 0.0))
    return rows


# -- rate bound --------------------------------------------------------------


def rate_cases() -> list[tuple[KernelFamily, SelectionConfig]]:
    return [
        (KernelFamily.poisson(1), SelectionConfig(grid_steps=(60, 60), starts=1)),
        (KernelFamily.heat(1), SelectionConfig(grid_steps=(60, 60), starts=1)),
        (KernelFamily.sphere(3), SelectionConfig(grid_steps=(16, 16, 16), starts=1)),
    ]


def check_rate(seeds=(0, 1, 2), n_max: int = 50) -> list[CheckRow]:
    """``||g_n|| <= M / sqrt(n)`` for ``n <= n_max`` on 20-atom signals with ``sum |d_k| = M``."""
    rows = []
    M = 1.0
    for fam, cfg in rate_cases():
        for seed in seeds:
            rng = np.random.default_rng([seed, 7])
            sig = random_signal(fam, rng, 20, mass=M, t=(0.3, 8.0), x=6.0, rho=(0.0, 0.9))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BoxBoundaryWarning)
                dec = poafd_run(fam, sig, n_max, cfg)
            n_run = len(dec)
            ratio = max(relative_error(dec, n) * dec.signal_norm * math.sqrt(n) / M
                        for n in range(1, n_run + 1))
            rows.append(CheckRow.make("rate", f"{_fam_label(fam)} seed={seed} n<={n_run}",
                                      ratio, 1.0, ratio, 1.0))
    return rows


# -- decomposition invariants ------------------------------------------------


def invariant_cases() -> list[tuple[KernelFamily, SelectionConfig]]:
    conv = KernelFamily.convolution(ConvolutionProfile.poisson(1), 1, QuadratureBox(40.0, 800))
    return [
        (KernelFamily.poisson(1), SelectionConfig(t_max=5.0, x_max=4.0, grid_steps=(40, 40), starts=1)),
        (KernelFamily.heat(2), SelectionConfig(t_max=5.0, x_max=4.0, grid_steps=(10, 14, 14), starts=1)),
        (KernelFamily.sphere(3), SelectionConfig(grid_steps=(10, 12, 14), starts=1)),
        (conv, SelectionConfig(t_max=5.0, x_max=4.0, grid_steps=(20, 20), starts=1)),
    ]


def invariant_decompositions(rng: np.random.Generator, per_family: int = 5,
                             iterations: int = 6) -> list[tuple[KernelFamily, KernelCombination, Decomposition]]:
    out = []
    for fam, cfg in invariant_cases():
        for _ in range(per_family):
            sig = random_signal(fam, rng, 4, multiples=True, t=(0.3, 4.0), x=3.0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BoxBoundaryWarning)
                out.append((fam, sig, poafd_run(fam, sig, iterations, cfg)))
    return out


def check_invariants(rng: np.random.Generator, tol: float = 1e-8) -> list[CheckRow]:
    rows = []
    for i, (fam, sig, dec) in enumerate(invariant_decompositions(rng)):
        orders = "".join(str(a.order) for a in dec.atoms)
        label = f"{_fam_label(fam)}#{i} orders={orders}"
        rows.append(CheckRow.make("invariants", f"orthonormality {label}",
                                  dec.orthonormality_error(), 0.0, dec.orthonormality_error(), tol))
        defect = dec.energy_defect(sig)
        rows.append(CheckRow.make("invariants", f"energy {label}", defect, 0.0, defect, tol))
        ok = is_consecutive(dec.atoms)
        rows.append(CheckRow.make("invariants", f"consecutive {label}", float(ok), 1.0,
                                  0.0 if ok else 1.0, 0.0))
    return rows


def run_scope(scope: str, seed: int = 0) -> list[CheckRow]:
    rng = np.random.default_rng([seed, SCOPES.index(scope)])
    suites: dict[str, Callable[[], list[CheckRow]]] = {
        "semigroup": lambda: check_semigroup(rng),
        "bvc": lambda: check_bvc(),
        "derivatives": lambda: check_derivatives(rng),
        "greedy": lambda: check_greedy(rng),
        "rate": lambda: check_rate(seeds=(seed, seed + 1, seed + 2)),
        "invariants": lambda: check_invariants(rng),
    }
    if scope not in suites:
        raise ValueError(f"unknown scope {scope!r}; choose from {list(SCOPES)}")
    return suites[scope]()

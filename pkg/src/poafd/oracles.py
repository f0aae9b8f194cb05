"""Brute-force reference computations used to certify the fast paths.

Inner products are integrated directly from boundary kernels written out
here, derivatives come from central differences of the closed forms, and the
greedy argmax is a scalar loop over every grid candidate. Every quadrature
value carries an error estimate from a second, coarser resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb
from typing import Callable, NamedTuple, Sequence

import mpmath
import numpy as np
from scipy import integrate
from scipy.special import gamma

from .engine import DegenerateCandidate, Decomposition, SearchSpace, SelectionConfig, candidate_score
from .kernels import Atom, KernelFamily, Kind, ParamPoint, eval_K
from .signals import Signal

__all__ = [
    "OracleError",
    "OracleValue",
    "QuadratureGrid",
    "quadrature_inner_halfspace",
    "quadrature_inner_sphere",
    "fd_directional",
    "fd_kernel_derivative",
    "grid_points",
    "brute_force_argmax",
]


class OracleError(ValueError):
    """The oracle cannot certify a value at the requested accuracy."""


class OracleValue(NamedTuple):
    value: float
    error: float  # |fine - coarse|

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class QuadratureGrid:
    """Product grid for the oracles.

    ``domain="box"`` covers ``[-half_width, half_width]^d`` with ``steps``
    intervals per axis. ``domain="sphere"`` covers polar angle in ``[0, pi]``
    and azimuth in ``[0, 2 pi)`` with ``steps = (n_phi, n_theta)``; the weight
    is ``sin(phi) dphi dtheta / (4 pi)``.
    """

    domain: str = "box"
    steps: tuple[int, ...] = (4096,)
    half_width: float = 50.0
    rule: str = "trapezoid"
    tail_tol: float = 1e-4

    def __post_init__(self):
        if self.domain not in ("box", "sphere"):
            raise OracleError(f"unknown quadrature domain {self.domain!r}")
        if self.rule not in ("trapezoid", "midpoint"):
            raise OracleError(f"unknown quadrature rule {self.rule!r}")
        object.__setattr__(self, "steps", tuple(int(n) for n in self.steps))
        if min(self.steps) < 16:
            raise OracleError("quadrature grids need at least 16 steps per axis")
        if self.domain == "sphere" and len(self.steps) != 2:
            raise OracleError("sphere grids take (n_phi, n_theta)")

    def coarse(self) -> "QuadratureGrid":
        return QuadratureGrid(self.domain, tuple(n // 2 for n in self.steps), self.half_width,
                              self.rule, self.tail_tol)


def _axis(lo: float, hi: float, n: int, rule: str) -> tuple[np.ndarray, np.ndarray]:
    h = (hi - lo) / n
    if rule == "midpoint":
        return lo + h * (np.arange(n) + 0.5), np.full(n, h)
    x = np.linspace(lo, hi, n + 1)
    w = np.full(n + 1, h)
    w[[0, -1]] *= 0.5
    return x, w


# boundary kernels, written independently of the kernels module


def _h_halfspace(fam: KernelFamily, p: ParamPoint, Y: np.ndarray) -> np.ndarray:
    d, t = fam.d, p.t
    r2 = np.sum((Y - p.x) ** 2, axis=-1)
    if fam.kind is Kind.POISSON:
        cd = gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2)
        return cd * t / (t * t + r2) ** ((d + 1) / 2)
    if fam.kind is Kind.HEAT:
        return np.exp(-r2 / (4 * t)) / (4 * math.pi * t) ** (d / 2)
    return fam.profile.phi((p.x - Y) / t) / t**d


def _majorant(fam: KernelFamily, p: ParamPoint, r: float) -> float:
    """Upper bound of ``|h_p(y)|`` for ``|y - x_p| >= r``."""
    d, t = fam.d, p.t
    if fam.kind is Kind.POISSON:
        cd = gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2)
        return cd * t / (t * t + r * r) ** ((d + 1) / 2)
    if fam.kind is Kind.HEAT:
        return math.exp(-r * r / (4 * t)) / (4 * math.pi * t) ** (d / 2)
    prof = fam.profile
    return prof.majorant_constant * (1 + (r / t) ** 2) ** (-(d + prof.delta) / 2) / t**d


def _tail_bound(fam: KernelFamily, q: ParamPoint, p: ParamPoint, half_width: float) -> float:
    """Bound on the integral of ``|h_q h_p|`` outside the box."""
    d = fam.d
    R = half_width - max(np.max(np.abs(q.x)), np.max(np.abs(p.x)))
    if R <= 0:
        return math.inf
    area = 2 * math.pi ** (d / 2) / gamma(d / 2)
    f = lambda r: area * r ** (d - 1) * _majorant(fam, q, r) * _majorant(fam, p, r)
    return integrate.quad(f, R, np.inf, epsabs=0, epsrel=1e-8, limit=200)[0]


def _box_integral(fam, q, p, grid: QuadratureGrid) -> float:
    d = fam.d
    steps = grid.steps if len(grid.steps) == d else grid.steps[:1] * d
    axes = [_axis(-grid.half_width, grid.half_width, n, grid.rule) for n in steps]
    if d == 1:
        Y = axes[0][0][:, None]
        return float(np.sum(axes[0][1] * _h_halfspace(fam, q, Y) * _h_halfspace(fam, p, Y)))
    # integrate slab by slab along the first axis to bound memory
    rest = np.stack(np.meshgrid(*[a[0] for a in axes[1:]], indexing="ij"), -1).reshape(-1, d - 1)
    wrest = np.prod(np.stack(np.meshgrid(*[a[1] for a in axes[1:]], indexing="ij"), -1), -1).ravel()
    total = 0.0
    for y0, w0 in zip(*axes[0]):
        Y = np.concatenate([np.full((rest.shape[0], 1), y0), rest], axis=1)
        total += w0 * float(wrest @ (_h_halfspace(fam, q, Y) * _h_halfspace(fam, p, Y)))
    return float(total)


def quadrature_inner_halfspace(fam: KernelFamily, q: ParamPoint, p: ParamPoint,
                               grid: QuadratureGrid) -> OracleValue:
    """``<h_q, h_p>`` in ``L^2(R^d)`` by product quadrature on a truncated box."""
    if not fam.half_space:
        raise OracleError("half-space quadrature needs a half-space family")
    if grid.domain != "box":
        raise OracleError("half-space quadrature needs a box grid")
    fine = _box_integral(fam, q, p, grid)
    tail = _tail_bound(fam, q, p, grid.half_width)
    if not tail <= 0.1 * grid.tail_tol * abs(fine):
        raise OracleError(
            f"box half-width {grid.half_width} leaves tail mass {tail:.3g} "
            f"(value {fine:.3g}); enlarge the grid"
        )
    coarse = _box_integral(fam, q, p, grid.coarse())
    return OracleValue(fine, abs(fine - coarse) + tail)


def _sphere_integral(q: ParamPoint, p: ParamPoint, grid: QuadratureGrid) -> float:
    n_phi, n_th = grid.steps
    phi, wphi = _axis(0.0, math.pi, n_phi, grid.rule)
    # the azimuth is periodic, so equal weights are exact for trigonometric polynomials
    th = 2 * math.pi * np.arange(n_th) / n_th
    S = np.stack(
        [np.outer(np.sin(phi), np.cos(th)), np.outer(np.sin(phi), np.sin(th)),
         np.repeat(np.cos(phi)[:, None], n_th, axis=1)], -1
    )
    W = (wphi * np.sin(phi))[:, None] * (2 * math.pi / n_th) / (4 * math.pi)

    def P(w):
        r2 = w @ w
        return (1 - r2) / np.sum((w - S) ** 2, axis=-1) ** 1.5

    return float(np.sum(W * P(q.vec) * P(p.vec)))


def quadrature_inner_sphere(q: ParamPoint, p: ParamPoint, grid: QuadratureGrid) -> OracleValue:
    """``<h_q, h_p>`` on the 2-sphere under the normalized surface measure (c_d = 1)."""
    if grid.domain != "sphere":
        raise OracleError("sphere quadrature needs a sphere grid")
    for w in (q, p):
        if not w.ball or len(w.coords) != 3:
            raise OracleError("sphere quadrature needs ball points in R^3")
    # the kernel varies on the scale 1 - rho; ask for several nodes across it
    h = max(math.pi / grid.steps[0], 2 * math.pi / grid.steps[1])
    worst = max(q.rho, p.rho)
    if h > (1 - worst) / 4:
        raise OracleError(
            f"rho = {worst:.4g} is too close to the sphere for steps {grid.steps}; refine the grid"
        )
    fine = _sphere_integral(q, p, grid)
    coarse = _sphere_integral(q, p, grid.coarse())
    return OracleValue(fine, abs(fine - coarse))


def fd_directional(fn: Callable[[ParamPoint], float], q: ParamPoint, direction, order: int,
                   h: float) -> float:
    """Central difference of ``fn`` at ``q`` of the given order along ``direction``."""
    if not 0 <= order <= 4:
        raise OracleError("finite differences support orders 0..4")
    if order == 0:
        return float(fn(q))
    u = np.asarray(direction, dtype=float)
    base = q.vec
    if not h > 0 or h <= 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(base)))):
        raise OracleError(f"step {h!r} underflows at this parameter")
    total = 0.0
    for j in range(order + 1):
        shift = (order / 2 - j) * h
        total += (-1) ** j * comb(order, j) * fn(ParamPoint(tuple(base + shift * u), ball=q.ball))
    return total / h**order


def _mp_kernel(fam: KernelFamily, q, p):
    mp = mpmath.mp
    d = fam.d
    if fam.kind is Kind.SPHERE:
        w2 = mp.fsum(v * v for v in q)
        v2 = mp.fsum(v * v for v in p)
        wv = mp.fsum(a * b for a, b in zip(q, p))
        return fam.c_d * (1 - w2 * v2) / (1 - 2 * wv + w2 * v2) ** (mp.mpf(d) / 2)
    s = q[0] + p[0]
    r2 = mp.fsum((a - b) ** 2 for a, b in zip(q[1:], p[1:]))
    if fam.kind is Kind.POISSON:
        cd = mp.gamma(mp.mpf(d + 1) / 2) / mp.pi ** (mp.mpf(d + 1) / 2)
        return cd * s / (s * s + r2) ** (mp.mpf(d + 1) / 2)
    if fam.kind is Kind.HEAT:
        return (4 * mp.pi * s) ** (-mp.mpf(d) / 2) * mp.exp(-r2 / (4 * s))
    raise OracleError("high-precision derivatives need a closed-form family")


def fd_kernel_derivative(fam: KernelFamily, a: Atom, b: Atom, h: float = 1e-12,
                         dps: int = 60) -> float:
    """``<K~_a, K~_b>`` by mixed central differences of the closed form in extended precision.

    The stencil runs in ``dps``-digit arithmetic, so rounding stays far below
    the ``O(h^2)`` truncation error.
    """
    ja, jb = a.order - 1, b.order - 1
    if ja + jb > 4:
        raise OracleError("finite differences support total order up to 4")
    with mpmath.workdps(dps):
        mp = mpmath.mp
        step = mp.mpf(h)
        q0 = [mp.mpf(v) for v in a.param.coords]
        p0 = [mp.mpf(v) for v in b.param.coords]
        u = [mp.mpf(v) for v in a.dir_vec()] if ja else [0] * len(q0)
        v = [mp.mpf(x) for x in b.dir_vec()] if jb else [0] * len(p0)
        total = mp.mpf(0)
        for i in range(ja + 1):
            si = (mp.mpf(ja) / 2 - i) * step
            q = [c + si * e for c, e in zip(q0, u)]
            for j in range(jb + 1):
                sj = (mp.mpf(jb) / 2 - j) * step
                p = [c + sj * e for c, e in zip(p0, v)]
                total += (-1) ** (i + j) * comb(ja, i) * comb(jb, j) * _mp_kernel(fam, q, p)
        return float(total / step ** (ja + jb))


def grid_points(fam: KernelFamily, config: SelectionConfig) -> list[ParamPoint]:
    """The selection grid of ``config`` as parameters, in lexicographic scan order."""
    space = SearchSpace(fam, config)
    P = space.to_params(space.grid_coords())
    return [ParamPoint(tuple(row), ball=not fam.half_space) for row in P]


def brute_force_argmax(fam: KernelFamily, sig: Signal, state: Decomposition,
                       grid: Sequence[ParamPoint], extra: Sequence[Atom] = (),
                       tol: float = 1e-8) -> tuple[Atom, float]:
    """Exhaustive maximum of ``candidate_score`` over plain atoms on ``grid``, then ``extra``.

    Ties go to the first candidate met. Degenerate candidates, and plain atoms at
    parameters already in ``state``, are skipped.
    """
    if len(grid) == 0:
        raise OracleError("empty grid")
    # a chosen parameter may only come back as a multiple kernel
    chosen = {a.param for a in state.atoms}
    plain = [Atom(p) for p in grid if p not in chosen]
    best: tuple[Atom, float] | None = None
    for cand in plain + list(extra):
        try:
            s = candidate_score(fam, sig, state, cand, tol)
        except DegenerateCandidate:
            continue
        if best is None or s > best[1]:
            best = (cand, s)
    if best is None:
        raise OracleError("every candidate is degenerate")
    return best

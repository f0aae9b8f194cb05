"""Reproducing kernels of the half-space Poisson, heat, spherical Poisson and
general convolution dictionaries.

Two layers live here. The array layer (``kernel_values``,
``kernel_derivative_values``, ``boundary_values``) broadcasts over leading
axes and is what the greedy search uses. The object layer (``eval_K``,
``kernel_norm``, ``eval_E``, ``eval_h``, ``eval_K_derivative``) takes
``ParamPoint``/``Atom`` values and returns plain floats.

Parameters are stored as flat vectors. A half-space point is ``(t, x_1..x_d)``
with ``t`` first; a ball point is its Cartesian position ``w = rho * s``.
Directional derivatives of multiple kernels act on these vectors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gamma

__all__ = [
    "Kind",
    "ConvolutionProfile",
    "QuadratureBox",
    "KernelFamily",
    "ParamPoint",
    "Atom",
    "KernelError",
    "MAX_TOTAL_ORDER",
    "poisson_profile",
    "kernel_values",
    "kernel_derivative_values",
    "atom_column_values",
    "kernel_norm_values",
    "boundary_values",
    "boundary_derivative_values",
    "eval_K",
    "kernel_norm",
    "eval_E",
    "eval_h",
    "eval_K_derivative",
]

# a.order + b.order; total derivative order is this minus 2
MAX_TOTAL_ORDER = 6
_ANALYTIC_DERIVATIVE_ORDER = 2
_FD_RELATIVE_STEP = 1e-3
_CHUNK = 1 << 22


class KernelError(ValueError):
    """Invalid kernel arguments: wrong point kind, dimension, or order."""


class Kind(str, enum.Enum):
    POISSON = "poisson_half_space"
    HEAT = "heat_half_space"
    SPHERE = "spherical_poisson"
    CONVOLUTION = "convolution"


def poisson_profile(d: int) -> Callable[[np.ndarray], np.ndarray]:
    """Unit-mass Poisson profile ``c_d (1 + |x|^2)^(-(d+1)/2)``."""
    c = _poisson_constant(d)

    def phi(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return c * (1.0 + np.sum(x * x, axis=-1)) ** (-(d + 1) / 2)

    return phi


def _poisson_constant(d: int) -> float:
    return float(gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2))


@dataclass(frozen=True)
class QuadratureBox:
    """Uniform trapezoid grid on ``[-half_width, half_width]^d``."""

    half_width: float
    steps: int

    def nodes(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        if self.steps < 16:
            raise KernelError("quadrature grid needs at least 16 steps per axis")
        axis = np.linspace(-self.half_width, self.half_width, self.steps + 1)
        w1 = np.full(axis.size, axis[1] - axis[0])
        w1[0] *= 0.5
        w1[-1] *= 0.5
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        wmesh = np.meshgrid(*([w1] * d), indexing="ij")
        weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
        return pts, weights


@dataclass(frozen=True)
class ConvolutionProfile:
    """A unit-mass profile ``phi`` with radial majorant ``C (1+|x|^2)^(-(d+delta)/2)``.

    ``phi`` maps an array of shape ``(..., d)`` to shape ``(...)``.
    """

    phi: Callable[[np.ndarray], np.ndarray]
    delta: float
    majorant_constant: float
    name: str = "custom"

    @classmethod
    def poisson(cls, d: int) -> "ConvolutionProfile":
        return cls(poisson_profile(d), 1.0, _poisson_constant(d), "poisson")

    @classmethod
    def gaussian(cls, d: int) -> "ConvolutionProfile":
        """Standard normal density; majorant taken with delta = 2."""
        k = (d + 2) / 2
        c = (2 * np.pi) ** (-d / 2) * (d + 2) ** k * np.exp(-(d + 1) / 2)

        def phi(x):
            x = np.asarray(x, dtype=float)
            return (2 * np.pi) ** (-d / 2) * np.exp(-0.5 * np.sum(x * x, axis=-1))

        return cls(phi, 2.0, float(c), "gaussian")

    def validate(self, d: int, tol: float = 1e-6) -> None:
        if self.delta <= 0:
            raise KernelError("decay exponent delta must be positive")
        if self.majorant_constant <= 0:
            raise KernelError("majorant constant must be positive")
        mass = _profile_mass(self.phi, d)
        if abs(mass - 1.0) > tol:
            raise KernelError(f"profile integrates to {mass:.9g}, expected 1")
        # sup over |y| >= r, sampled along random rays
        rng = np.random.default_rng(0)
        dirs = rng.standard_normal((32, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 200)])
        vals = np.abs(self.phi(radii[:, None, None] * dirs[None, :, :])).max(axis=1)
        psi = np.maximum.accumulate(vals[::-1])[::-1]
        bound = self.majorant_constant * (1 + radii**2) ** (-(d + self.delta) / 2)
        if np.any(psi > bound * (1 + 1e-9)):
            raise KernelError("profile violates its stated decay majorant")


def _profile_mass(phi, d: int) -> float:
    if d == 1:
        f = lambda u: float(phi(np.array([u])))
        return integrate.quad(f, -np.inf, 0)[0] + integrate.quad(f, 0, np.inf)[0]
    f = lambda *u: float(phi(np.array(u)))
    return integrate.nquad(f, [[-np.inf, np.inf]] * d, opts={"epsabs": 1e-10})[0]


@dataclass(frozen=True)
class KernelFamily:
    kind: Kind
    d: int
    c_d: float
    profile: ConvolutionProfile | None = None
    grid: QuadratureBox | None = None
    _nodes: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind is Kind.SPHERE:
            if self.d < 2:
                raise KernelError("spherical Poisson kernel needs d >= 2")
        elif self.d < 1:
            raise KernelError("half-space kernels need d >= 1")
        if self.c_d <= 0:
            raise KernelError("c_d must be positive")
        if self.kind is Kind.CONVOLUTION:
            if self.profile is None or self.grid is None:
                raise KernelError("convolution family needs a profile and a quadrature grid")
            pts, w = self.grid.nodes(self.d)
            pts.setflags(write=False)
            w.setflags(write=False)
            object.__setattr__(self, "_nodes", (pts, w))

    @classmethod
    def poisson(cls, d: int) -> "KernelFamily":
        return cls(Kind.POISSON, d, _poisson_constant(d))

    @classmethod
    def heat(cls, d: int) -> "KernelFamily":
        return cls(Kind.HEAT, d, 1.0)

    @classmethod
    def sphere(cls, d: int = 3, c_d: float = 1.0) -> "KernelFamily":
        return cls(Kind.SPHERE, d, c_d)

    @classmethod
    def convolution(
        cls,
        profile: ConvolutionProfile,
        d: int,
        grid: QuadratureBox,
        validate: bool = True,
    ) -> "KernelFamily":
        if validate:
            profile.validate(d)
        return cls(Kind.CONVOLUTION, d, 1.0, profile, grid)

    @property
    def half_space(self) -> bool:
        return self.kind is not Kind.SPHERE

    @property
    def param_dim(self) -> int:
        return self.d + 1 if self.half_space else self.d

    @property
    def closed_form(self) -> bool:
        return self.kind is not Kind.CONVOLUTION

    def describe(self) -> dict:
        out = {"kind": self.kind.value, "d": self.d, "c_d": self.c_d}
        if self.kind is Kind.CONVOLUTION:
            out["profile"] = self.profile.name
            out["delta"] = self.profile.delta
            out["majorant_constant"] = self.profile.majorant_constant
            out["grid"] = {"half_width": self.grid.half_width, "steps": self.grid.steps}
        return out

    def check_params(self, arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr, dtype=float)
        if arr.shape[-1] != self.param_dim:
            raise KernelError(
                f"parameter length {arr.shape[-1]} does not match {self.kind.value} d={self.d}"
            )
        return arr


@dataclass(frozen=True)
class ParamPoint:
    """A dictionary parameter. ``coords`` is ``(t, x...)`` or ``w = rho * s``."""

    coords: tuple[float, ...]
    ball: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if self.ball:
            if not np.linalg.norm(self.coords) < 1.0:
                raise KernelError("ball parameter must satisfy |w| < 1")
        elif not self.coords[0] > 0:
            raise KernelError("half-space parameter needs t > 0")

    @classmethod
    def half(cls, t: float, x: Sequence[float] | float) -> "ParamPoint":
        return cls((t, *np.atleast_1d(np.asarray(x, dtype=float))))

    @classmethod
    def in_ball(cls, rho: float, s: Sequence[float]) -> "ParamPoint":
        s = np.asarray(s, dtype=float)
        if abs(np.linalg.norm(s) - 1.0) > 1e-12:
            raise KernelError("ball direction s must be a unit vector")
        if not 0.0 <= rho < 1.0:
            raise KernelError("ball radius must lie in [0, 1)")
        return cls(tuple(rho * s), ball=True)

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.coords)

    @property
    def t(self) -> float:
        return self.coords[0]

    @property
    def x(self) -> np.ndarray:
        return np.array(self.coords[1:])

    @property
    def rho(self) -> float:
        return float(np.linalg.norm(self.coords))

    @property
    def s(self) -> np.ndarray:
        r = self.rho
        if r == 0.0:
            e = np.zeros(len(self.coords))
            e[-1] = 1.0
            return e
        return self.vec / r


@dataclass(frozen=True)
class Atom:
    """Plain kernel (order 1) or the (order-1)-th directional derivative in its parameter."""

    param: ParamPoint
    order: int = 1
    direction: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.order < 1:
            raise KernelError("atom order must be >= 1")
        if self.order >= 2:
            if self.direction is None:
                raise KernelError("multiple kernels need a direction")
            u = np.asarray(self.direction, dtype=float)
            if u.shape != (len(self.param.coords),):
                raise KernelError("direction length must match the parameter length")
            if abs(np.linalg.norm(u) - 1.0) > 1e-9:
                raise KernelError("direction must be a unit vector")
            object.__setattr__(self, "direction", tuple(float(v) for v in u))
        elif self.direction is not None:
            object.__setattr__(self, "direction", tuple(float(v) for v in self.direction))

    def dir_vec(self) -> np.ndarray:
        if self.direction is None:
            return np.zeros(len(self.param.coords))
        return np.array(self.direction)


# ---------------------------------------------------------------------------
# closed-form log-jets: value, gradient and Hessian of log K in jet coordinates
#
# Half-space kernels depend on (t_q + t_p, x_q - x_p) only, so the jet lives in
# R^{d+1}; derivatives in p pick up the reflection J = diag(1, -1, ..., -1).
# The spherical kernel is jetted in the stacked coordinates (w, v) in R^{2d}.


def _jet_point(fam: KernelFamily, Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    Q, P = np.broadcast_arrays(Q, P)
    if fam.half_space:
        return np.concatenate([Q[..., :1] + P[..., :1], Q[..., 1:] - P[..., 1:]], axis=-1)
    return np.concatenate([Q, P], axis=-1)


def _embed_q(fam: KernelFamily, u: np.ndarray) -> np.ndarray:
    if fam.half_space:
        return u
    return np.concatenate([u, np.zeros_like(u)], axis=-1)


def _embed_p(fam: KernelFamily, u: np.ndarray) -> np.ndarray:
    if fam.half_space:
        return np.concatenate([u[..., :1], -u[..., 1:]], axis=-1)
    return np.concatenate([np.zeros_like(u), u], axis=-1)


def _value(fam: KernelFamily, Z: np.ndarray) -> np.ndarray:
    d, c = fam.d, fam.c_d
    if fam.kind is Kind.POISSON:
        T = Z[..., 0]
        R = T * T + np.sum(Z[..., 1:] ** 2, axis=-1)
        return c * T * R ** (-(d + 1) / 2)
    if fam.kind is Kind.HEAT:
        T = Z[..., 0]
        S = np.sum(Z[..., 1:] ** 2, axis=-1)
        return (4 * np.pi * T) ** (-d / 2) * np.exp(-S / (4 * T))
    w, v = Z[..., :d], Z[..., d:]
    A = np.sum(w * w, axis=-1) * np.sum(v * v, axis=-1)
    D = 1.0 - 2.0 * np.sum(w * v, axis=-1) + A
    return c * (1.0 - A) * D ** (-d / 2)


def _log_jet(fam: KernelFamily, Z: np.ndarray, need_hess: bool):
    """Return ``(F, grad log F, Hess log F)`` at jet points ``Z`` of shape (..., m)."""
    d = fam.d
    F = _value(fam, Z)
    m = Z.shape[-1]
    eye = np.eye(m if fam.half_space else d)
    if fam.kind is Kind.POISSON:
        k = (d + 1) / 2
        T = Z[..., 0]
        X = Z[..., 1:]
        R = T * T + np.sum(X * X, axis=-1)
        g = np.concatenate([(1 / T - 2 * k * T / R)[..., None], -2 * k * X / R[..., None]], -1)
        if not need_hess:
            return F, g, None
        H = np.empty(Z.shape + (m,))
        H[..., 0, 0] = -1 / T**2 - 2 * k / R + 4 * k * T**2 / R**2
        tx = 4 * k * (T / R**2)[..., None] * X
        H[..., 0, 1:] = tx
        H[..., 1:, 0] = tx
        H[..., 1:, 1:] = (-2 * k / R)[..., None, None] * eye[1:, 1:] + 4 * k * (
            X[..., :, None] * X[..., None, :]
        ) / (R**2)[..., None, None]
        return F, g, H
    if fam.kind is Kind.HEAT:
        T = Z[..., 0]
        X = Z[..., 1:]
        S = np.sum(X * X, axis=-1)
        g = np.concatenate(
            [(-d / (2 * T) + S / (4 * T**2))[..., None], -X / (2 * T)[..., None]], -1
        )
        if not need_hess:
            return F, g, None
        H = np.zeros(Z.shape + (m,))
        H[..., 0, 0] = d / (2 * T**2) - S / (2 * T**3)
        tx = X / (2 * T**2)[..., None]
        H[..., 0, 1:] = tx
        H[..., 1:, 0] = tx
        H[..., 1:, 1:] = (-1 / (2 * T))[..., None, None] * eye[1:, 1:]
        return F, g, H
    w, v = Z[..., :d], Z[..., d:]
    ww = np.sum(w * w, axis=-1)
    vv = np.sum(v * v, axis=-1)
    A = ww * vv
    N = 1.0 - A
    D = 1.0 - 2.0 * np.sum(w * v, axis=-1) + A
    gA = np.concatenate([2 * vv[..., None] * w, 2 * ww[..., None] * v], -1)
    gB = np.concatenate([v, w], -1)
    gN = -gA
    gD = gA - 2 * gB
    g = gN / N[..., None] - (d / 2) * gD / D[..., None]
    if not need_hess:
        return F, g, None
    HA = np.zeros(Z.shape + (m,))
    HA[..., :d, :d] = 2 * vv[..., None, None] * eye
    HA[..., d:, d:] = 2 * ww[..., None, None] * eye
    wv = 4 * w[..., :, None] * v[..., None, :]
    HA[..., :d, d:] = wv
    HA[..., d:, :d] = np.swapaxes(wv, -1, -2)
    HB = np.zeros((m, m))
    HB[:d, d:] = eye
    HB[d:, :d] = eye
    outer = lambda a: a[..., :, None] * a[..., None, :]
    H = (
        -HA / N[..., None, None]
        - outer(gN) / (N**2)[..., None, None]
        - (d / 2) * ((HA - 2 * HB) / D[..., None, None] - outer(gD) / (D**2)[..., None, None])
    )
    return F, g, H


def _fd_step(fam: KernelFamily, Z: np.ndarray) -> np.ndarray:
    # keeps every shifted point inside the parameter domain
    if fam.half_space:
        scale = np.minimum(1.0, Z[..., 0])
    else:
        d = fam.d
        r = np.maximum(np.linalg.norm(Z[..., :d], axis=-1), np.linalg.norm(Z[..., d:], axis=-1))
        scale = np.minimum(1.0, 1.0 - r)
    return _FD_RELATIVE_STEP * scale


def _directional(fam: KernelFamily, Z: np.ndarray, dirs: list[np.ndarray]) -> np.ndarray:
    """Mixed directional derivative of K in jet coordinates along every vector in ``dirs``."""
    k = len(dirs)
    if k > _ANALYTIC_DERIVATIVE_ORDER:
        lead, rest = dirs[0], dirs[1:]
        h = _fd_step(fam, Z)[..., None]
        # five-point stencil, fourth order in h
        f = [_directional(fam, Z + m * h * lead, rest) for m in (2, 1, -1, -2)]
        return (-f[0] + 8 * f[1] - 8 * f[2] + f[3]) / (12 * h[..., 0])
    F, g, H = _log_jet(fam, Z, need_hess=k == 2)
    if k == 0:
        return F
    if k == 1:
        return F * np.sum(g * dirs[0], axis=-1)
    a, b = dirs
    ab = np.einsum("...i,...ij,...j->...", a, H, b)
    return F * (ab + np.sum(g * a, axis=-1) * np.sum(g * b, axis=-1))


# ---------------------------------------------------------------------------
# convolution kernels by quadrature


def _conv_boundary(fam: KernelFamily, P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    t = P[..., 0]
    return t ** (-fam.d) * fam.profile.phi((P[..., 1:] - Y) / t[..., None])


def _conv_kernel(fam: KernelFamily, Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    Q, P = np.broadcast_arrays(Q, P)
    shape = Q.shape[:-1]
    Qf = Q.reshape(-1, Q.shape[-1])
    Pf = P.reshape(-1, P.shape[-1])
    nodes, w = fam._nodes
    out = np.empty(Qf.shape[0])
    step = max(1, _CHUNK // nodes.shape[0])
    for lo in range(0, Qf.shape[0], step):
        q = Qf[lo : lo + step, None, :]
        p = Pf[lo : lo + step, None, :]
        hq = _conv_boundary(fam, q, nodes[None])
        hp = _conv_boundary(fam, p, nodes[None])
        out[lo : lo + step] = (hq * hp) @ w
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# array layer


def kernel_values(fam: KernelFamily, Q, P) -> np.ndarray:
    """``K(q, p)`` broadcast over leading axes of ``Q`` and ``P``."""
    Q = fam.check_params(Q)
    P = fam.check_params(P)
    if fam.kind is Kind.CONVOLUTION:
        return _conv_kernel(fam, Q, P)
    return _value(fam, _jet_point(fam, Q, P))


def kernel_norm_values(fam: KernelFamily, Q) -> np.ndarray:
    """``||K_q||`` from the closed-form diagonal (quadrature for convolution)."""
    Q = fam.check_params(Q)
    d, c = fam.d, fam.c_d
    if fam.kind is Kind.POISSON:
        sq = c / (2 * Q[..., 0]) ** d
    elif fam.kind is Kind.HEAT:
        sq = (8 * np.pi * Q[..., 0]) ** (-d / 2)
    elif fam.kind is Kind.SPHERE:
        r2 = np.sum(Q * Q, axis=-1)
        sq = c * (1 + r2) / (1 - r2) ** (d - 1)
    else:
        sq = _conv_kernel(fam, Q, Q)
    return np.sqrt(sq)


def kernel_derivative_values(
    fam: KernelFamily,
    Q,
    order_q: int,
    dir_q,
    P,
    order_p: int,
    dir_p,
) -> np.ndarray:
    """``(dir_q . grad_q)^(order_q-1) (dir_p . grad_p)^(order_p-1) K(q, p)``, broadcast."""
    if order_q < 1 or order_p < 1:
        raise KernelError("atom orders start at 1")
    if order_q + order_p > MAX_TOTAL_ORDER:
        raise KernelError(f"unsupported order pair ({order_q}, {order_p})")
    Q = fam.check_params(Q)
    P = fam.check_params(P)
    if order_q == 1 and order_p == 1:
        return kernel_values(fam, Q, P)
    if not fam.closed_form:
        raise KernelError("convolution kernels support order-1 atoms only")
    Z = _jet_point(fam, Q, P)
    zero = np.zeros(fam.param_dim)
    a = _embed_q(fam, zero if order_q == 1 or dir_q is None else np.asarray(dir_q, dtype=float))
    b = _embed_p(fam, zero if order_p == 1 or dir_p is None else np.asarray(dir_p, dtype=float))
    Z, a, b = np.broadcast_arrays(Z, a, b)
    return _directional(fam, Z, [a] * (order_q - 1) + [b] * (order_p - 1))


def atom_column_values(fam: KernelFamily, Q, order: int, direction, atoms: Sequence["Atom"]) -> np.ndarray:
    """``<K~_cand, K~_i>`` for candidates at ``Q`` (..., m) against every atom, shape (..., n).

    Atoms of equal order share one broadcast evaluation.
    """
    Q = fam.check_params(Q)
    out = np.empty(Q.shape[:-1] + (len(atoms),))
    if not atoms:
        return out
    Qe = Q[..., None, :]
    if direction is not None:
        direction = np.asarray(direction, dtype=float)
        if direction.ndim >= 2:
            direction = direction[..., None, :]
    orders = np.array([a.order for a in atoms])
    for o in np.unique(orders):
        idx = np.flatnonzero(orders == o)
        P = np.stack([atoms[i].param.vec for i in idx])
        D = np.stack([atoms[i].dir_vec() for i in idx])
        out[..., idx] = kernel_derivative_values(fam, Qe, order, direction, P, int(o), D)
    return out


def boundary_values(fam: KernelFamily, P, Y) -> np.ndarray:
    """Boundary-side kernel ``h_p(y)`` broadcast over ``P`` (..., m) and ``Y`` (..., d)."""
    P = fam.check_params(P)
    Y = np.asarray(Y, dtype=float)
    if Y.shape[-1] != fam.d:
        raise KernelError(f"boundary point length {Y.shape[-1]} does not match d={fam.d}")
    d, c = fam.d, fam.c_d
    if fam.kind is Kind.CONVOLUTION:
        return _conv_boundary(fam, P, Y)
    if fam.kind is Kind.SPHERE:
        r2 = np.sum(P * P, axis=-1)
        dist2 = np.sum((P - Y) ** 2, axis=-1)
        return c * (1 - r2) * dist2 ** (-d / 2)
    t = P[..., 0]
    S = np.sum((P[..., 1:] - Y) ** 2, axis=-1)
    if fam.kind is Kind.POISSON:
        return c * t * (t * t + S) ** (-(d + 1) / 2)
    return (4 * np.pi * t) ** (-d / 2) * np.exp(-S / (4 * t))


def boundary_derivative_values(fam: KernelFamily, P, order: int, direction, Y) -> np.ndarray:
    """Directional derivative of ``h_p(y)`` in ``p`` by nested central differences."""
    P = fam.check_params(P)
    if order == 1:
        return boundary_values(fam, P, Y)
    u = np.asarray(direction, dtype=float)
    if fam.half_space:
        scale = np.minimum(1.0, P[..., 0])
    else:
        scale = np.minimum(1.0, 1.0 - np.linalg.norm(P, axis=-1))
    h = (1e-3 * scale)[..., None]
    hi = boundary_derivative_values(fam, P + h * u, order - 1, u, Y)
    lo = boundary_derivative_values(fam, P - h * u, order - 1, u, Y)
    return (hi - lo) / (2 * h[..., 0])


# ---------------------------------------------------------------------------
# object layer


def _check_point(fam: KernelFamily, q: ParamPoint) -> None:
    if q.ball == fam.half_space:
        want = "half-space" if fam.half_space else "ball"
        raise KernelError(f"{fam.kind.value} needs {want} parameters")
    if len(q.coords) != fam.param_dim:
        raise KernelError(
            f"parameter length {len(q.coords)} does not match {fam.kind.value} d={fam.d}"
        )


def eval_K(fam: KernelFamily, q: ParamPoint, p: ParamPoint) -> float:
    _check_point(fam, q)
    _check_point(fam, p)
    return float(kernel_values(fam, q.vec, p.vec))


def kernel_norm(fam: KernelFamily, q: ParamPoint) -> float:
    _check_point(fam, q)
    return float(kernel_norm_values(fam, q.vec))


def eval_E(fam: KernelFamily, q: ParamPoint, p: ParamPoint) -> float:
    """Normalized kernel ``E_q(p) = K(q, p) / ||K_q||``."""
    return eval_K(fam, q, p) / kernel_norm(fam, q)


def eval_h(fam: KernelFamily, p: ParamPoint, y) -> float:
    _check_point(fam, p)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if not fam.half_space and abs(np.linalg.norm(y) - 1.0) > 1e-9:
        raise KernelError("sphere boundary points must be unit vectors")
    return float(boundary_values(fam, p.vec, y))


def eval_K_derivative(fam: KernelFamily, a: Atom, b: Atom) -> float:
    """``<K~_a, K~_b>`` for (possibly multiple) kernels ``a`` and ``b``."""
    _check_point(fam, a.param)
    _check_point(fam, b.param)
    return float(
        kernel_derivative_values(
            fam, a.param.vec, a.order, a.dir_vec(), b.param.vec, b.order, b.dir_vec()
        )
    )

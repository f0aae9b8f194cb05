"""Target elements: finite combinations of normalized kernels, or sampled boundary data."""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .kernels import (
    Atom,
    KernelError,
    KernelFamily,
    atom_column_values,
    boundary_derivative_values,
    boundary_values,
    kernel_derivative_values,
    kernel_values,
)

if TYPE_CHECKING:
    from .engine import Decomposition

__all__ = [
    "KernelCombination",
    "SampledBoundary",
    "Signal",
    "atom_norm",
    "signal_inner",
    "signal_inner_values",
    "signal_norm",
    "signal_boundary_values",
    "reconstruct_boundary",
    "normalized_to_raw",
    "raw_to_normalized",
    "load_sampled_csv",
]

SAMPLED_FD_STEP = 1e-4


def atom_norm(fam: KernelFamily, atom: Atom) -> float:
    """``||K~_atom||``."""
    v = atom.param.vec
    return float(
        np.sqrt(kernel_derivative_values(fam, v, atom.order, atom.dir_vec(), v, atom.order, atom.dir_vec()))
    )


@dataclass(frozen=True)
class KernelCombination:
    """``f = sum_j c_j K~_j / ||K~_j||``: coefficients multiply normalized kernels."""

    terms: tuple[tuple[float, Atom], ...]

    def __init__(self, terms: Sequence[tuple[float, Atom]] = ()):
        object.__setattr__(self, "terms", tuple((float(c), a) for c, a in terms))

    def scaled(self, alpha: float) -> "KernelCombination":
        return KernelCombination([(alpha * c, a) for c, a in self.terms])

    def __add__(self, other: "KernelCombination") -> "KernelCombination":
        return KernelCombination(self.terms + other.terms)


@dataclass(frozen=True)
class SampledBoundary:
    """Boundary data ``f(y_i)`` with quadrature weights ``w_i``."""

    points: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        vals = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if not (pts.shape[0] == vals.size == w.size):
            raise ValueError("points, values and weights must have equal length")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        for name, arr in (("points", pts), ("values", vals), ("weights", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def scaled(self, alpha: float) -> "SampledBoundary":
        return SampledBoundary(self.points, alpha * self.values, self.weights)


Signal = KernelCombination | SampledBoundary


def normalized_to_raw(fam: KernelFamily, coeff: float, atom: Atom) -> float:
    """Coefficient against ``K~`` for a coefficient given against ``K~/||K~||``."""
    return coeff / atom_norm(fam, atom)


def raw_to_normalized(fam: KernelFamily, coeff: float, atom: Atom) -> float:
    return coeff * atom_norm(fam, atom)


def _check_family(fam: KernelFamily, sig: Signal) -> None:
    if isinstance(sig, KernelCombination):
        for _, a in sig.terms:
            if a.param.ball == fam.half_space or len(a.param.coords) != fam.param_dim:
                raise KernelError("signal term does not belong to this kernel family")
    elif sig.points.shape[1] != fam.d:
        raise KernelError("sampled boundary points do not match the family dimension")


@functools.lru_cache(maxsize=64)
def _term_weights(fam: KernelFamily, sig: KernelCombination) -> tuple[float, ...]:
    """Raw kernel weights ``c_j / ||K~_j||`` of a combination."""
    return tuple(c / atom_norm(fam, a) for c, a in sig.terms)


def signal_inner_values(
    fam: KernelFamily, sig: Signal, Q: np.ndarray, order: int = 1, direction=None
) -> np.ndarray:
    """``<f, K~_a>`` for atoms of one order/direction at the parameters ``Q`` (..., m)."""
    Q = fam.check_params(Q)
    _check_family(fam, sig)
    if direction is None:
        direction = np.zeros(fam.param_dim)
    if isinstance(sig, KernelCombination):
        atoms = [a for _, a in sig.terms]
        return atom_column_values(fam, Q, order, direction, atoms) @ np.array(_term_weights(fam, sig))
    if order == 1:
        return _sampled_inner(fam, sig, Q)
    u = np.asarray(direction, dtype=float)
    if fam.half_space:
        h = SAMPLED_FD_STEP * np.minimum(1.0, Q[..., 0])
    else:
        h = SAMPLED_FD_STEP * np.minimum(1.0, 1.0 - np.linalg.norm(Q, axis=-1))
    hi = signal_inner_values(fam, sig, Q + h[..., None] * u, order - 1, u)
    lo = signal_inner_values(fam, sig, Q - h[..., None] * u, order - 1, u)
    return (hi - lo) / (2 * h)


def _sampled_inner(fam: KernelFamily, sig: SampledBoundary, Q: np.ndarray) -> np.ndarray:
    shape = Q.shape[:-1]
    Qf = Q.reshape(-1, Q.shape[-1])
    wv = sig.weights * sig.values
    out = np.empty(Qf.shape[0])
    step = max(1, (1 << 22) // sig.points.shape[0])
    for lo in range(0, Qf.shape[0], step):
        h = boundary_values(fam, Qf[lo : lo + step, None, :], sig.points[None])
        out[lo : lo + step] = h @ wv
    return out.reshape(shape)


def signal_inner(sig: Signal, a: Atom, fam: KernelFamily) -> float:
    """``<f, K~_a>``."""
    return float(signal_inner_values(fam, sig, a.param.vec, a.order, a.dir_vec()))


def signal_norm(sig: Signal, fam: KernelFamily) -> float:
    _check_family(fam, sig)
    if isinstance(sig, SampledBoundary):
        return float(np.sqrt(np.sum(sig.weights * sig.values**2)))
    if not sig.terms:
        return 0.0
    coeffs = np.array([c / atom_norm(fam, a) for c, a in sig.terms])
    atoms = [a for _, a in sig.terms]
    from .engine import gram_matrix

    G = gram_matrix(fam, atoms)
    return float(np.sqrt(max(coeffs @ G @ coeffs, 0.0)))


def signal_boundary_values(fam: KernelFamily, sig: Signal, points) -> np.ndarray:
    """Boundary function of ``sig`` at ``points``; sampled signals only at their own nodes."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(sig, SampledBoundary):
        if pts.shape == sig.points.shape and np.array_equal(pts, sig.points):
            return sig.values.copy()
        raise ValueError("sampled signals can only be read back at their sample points")
    out = np.zeros(pts.shape[0])
    for c, a in sig.terms:
        h = boundary_derivative_values(fam, a.param.vec, a.order, a.dir_vec(), pts)
        out += c / atom_norm(fam, a) * h
    return out


def reconstruct_boundary(fam: KernelFamily, decomposition: "Decomposition", points) -> np.ndarray:
    """Boundary values of ``sum_k <f, B_k> B_k`` at ``points`` (shape (n, d))."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != fam.d:
        raise KernelError("boundary points do not match the family dimension")
    n = len(decomposition.atoms)
    if n == 0:
        return np.zeros(pts.shape[0])
    raw = decomposition.raw_coefficients()
    out = np.zeros(pts.shape[0])
    for coef, a in zip(raw, decomposition.atoms):
        out += coef * boundary_derivative_values(fam, a.param.vec, a.order, a.dir_vec(), pts)
    return out


def load_sampled_csv(path: str | Path, d: int) -> SampledBoundary:
    """Read ``y_1..y_d, value, weight`` rows; ``#`` lines and a header row are skipped."""
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                vals = [float(v) for v in row]
            except ValueError:
                if not rows:
                    continue  # header
                raise ValueError(f"{path}:{lineno}: non-numeric field") from None
            if len(vals) != d + 2:
                raise ValueError(f"{path}:{lineno}: expected {d + 2} columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no sample rows")
    arr = np.array(rows)
    return SampledBoundary(arr[:, :d], arr[:, d], arr[:, d + 1])

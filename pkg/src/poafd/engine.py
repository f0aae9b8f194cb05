"""Pre-orthogonal greedy decomposition over a parameterized kernel dictionary.

Each step orthonormalizes every candidate kernel against the atoms chosen so
far and keeps the one whose orthonormalized version carries the most energy
of the signal. A parameter chosen again is entered as a directional
derivative of its kernel (a multiple kernel) of the next order.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import (
    MAX_TOTAL_ORDER,
    Atom,
    KernelError,
    KernelFamily,
    Kind,
    ParamPoint,
    atom_column_values,
    kernel_derivative_values,
)
from .signals import Signal, signal_inner, signal_inner_values, signal_norm

log = logging.getLogger(__name__)

__all__ = [
    "SelectionConfig",
    "Decomposition",
    "DegenerateCandidate",
    "DictionaryExhausted",
    "BoxBoundaryWarning",
    "SearchSpace",
    "gram_matrix",
    "gs_step",
    "candidate_score",
    "candidate_pool",
    "multiple_candidates",
    "maximal_select",
    "commit_atom",
    "poafd_run",
    "relative_error",
    "is_consecutive",
]

SCHEMA_VERSION = 1


class DegenerateCandidate(ArithmeticError):
    """Gram-Schmidt denominator below tolerance; the caller should escalate the order."""

    def __init__(self, denominator: float):
        super().__init__(f"degenerate candidate (denominator {denominator:.3e})")
        self.denominator = denominator


class DictionaryExhausted(RuntimeError):
    pass


class BoxBoundaryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SelectionConfig:
    """Search box, grid and tolerances for the maximal selection.

    ``grid_steps`` lists points per search coordinate; ``None`` means 50 per
    axis (100 when the boundary is one-dimensional). Search coordinates are
    ``(t, x_1..x_d)`` on the half space and ``(rho, angles...)`` in the ball.
    """

    t_min: float = 0.05
    t_max: float = 20.0
    x_max: float = 10.0
    rho_max: float = 0.99
    grid_steps: tuple[int, ...] | None = None
    refine: bool = True
    max_refine_rounds: int = 400
    refine_tol: float = 1e-6
    duplicate_tol: float = 1e-6
    gs_degeneracy_tol: float = 1e-8
    weak_rho: float = 1.0
    directions: tuple[tuple[float, ...], ...] = ()
    revisit: bool = True
    starts: int = 10
    stop_tol: float = 1e-14

    def __post_init__(self):
        if not self.t_min > 0:
            raise ValueError("t_min must be positive")
        if not self.t_max > self.t_min:
            raise ValueError("t_max must exceed t_min")
        if not self.x_max > 0:
            raise ValueError("x_max must be positive")
        if not 0 < self.rho_max < 1:
            raise ValueError("rho_max must lie in (0, 1)")
        if not 0 < self.weak_rho <= 1:
            raise ValueError("weak_rho must lie in (0, 1]")
        if not self.duplicate_tol > 0:
            raise ValueError("duplicate_tol must be positive")
        if not self.gs_degeneracy_tol > 0:
            raise ValueError("gs_degeneracy_tol must be positive")
        if self.grid_steps is not None:
            object.__setattr__(self, "grid_steps", tuple(int(n) for n in self.grid_steps))
        object.__setattr__(
            self, "directions", tuple(tuple(float(v) for v in u) for u in self.directions)
        )


class SearchSpace:
    """Maps box coordinates of the configured search region to parameter vectors."""

    def __init__(self, fam: KernelFamily, config: SelectionConfig):
        self.family = fam
        d = fam.d
        if fam.half_space:
            lo = [config.t_min] + [-config.x_max] * d
            hi = [config.t_max] + [config.x_max] * d
            periodic = [False] * (d + 1)
        else:
            # rho, polar angles in [0, pi], last azimuth in [0, 2 pi)
            lo = [0.0] + [0.0] * (d - 1)
            hi = [config.rho_max] + [math.pi] * (d - 2) + [2 * math.pi]
            periodic = [False] * (d - 1) + [True]
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.periodic = np.array(periodic)
        k = len(lo)
        steps = config.grid_steps
        if steps is None:
            steps = (100 if d == 1 else 50,) * k
        if len(steps) != k:
            raise ValueError(f"grid_steps needs {k} entries for {fam.kind.value} d={d}")
        if min(steps) < 1:
            raise ValueError("grid_steps entries must be positive")
        self.steps = tuple(steps)
        self.width = self.hi - self.lo
        self.param_scale = self.width.copy() if fam.half_space else np.full(d, 2 * config.rho_max)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    def axes(self) -> list[np.ndarray]:
        out = []
        for lo, hi, n, per in zip(self.lo, self.hi, self.steps, self.periodic):
            if n == 1:
                out.append(np.array([(lo + hi) / 2]))
            else:
                out.append(np.linspace(lo, hi, n, endpoint=not per))
        return out

    def spacing(self) -> np.ndarray:
        return np.array([a[1] - a[0] if a.size > 1 else w / 2 for a, w in zip(self.axes(), self.width)])

    def grid_coords(self) -> np.ndarray:
        """All grid points, lexicographic in the coordinate order (last axis fastest)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def to_params(self, C: np.ndarray) -> np.ndarray:
        C = np.asarray(C, dtype=float)
        if self.family.half_space:
            return C.copy()
        rho = C[..., 0]
        return rho[..., None] * _sphere_point(C[..., 1:], self.family.d)

    def clamp(self, C: np.ndarray) -> np.ndarray:
        C = np.array(C, dtype=float)
        per = self.periodic
        C[..., per] = self.lo[per] + np.mod(C[..., per] - self.lo[per], self.width[per])
        C[..., ~per] = np.clip(C[..., ~per], self.lo[~per], self.hi[~per])
        return C

    def on_boundary(self, c: np.ndarray) -> bool:
        """True when the point touches a face that truncates the parameter set."""
        tol = 1e-9 * self.width
        if self.family.half_space:
            return bool(np.any(np.abs(c - self.lo) <= tol) or np.any(np.abs(c - self.hi) <= tol))
        return bool(abs(c[0] - self.hi[0]) <= tol[0])

    def normalized_distance(self, P: np.ndarray, p0: np.ndarray) -> np.ndarray:
        return np.max(np.abs(P - p0) / self.param_scale, axis=-1)


def _sphere_point(angles: np.ndarray, d: int) -> np.ndarray:
    if d == 2:
        th = angles[..., 0]
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    if d == 3:
        ph, th = angles[..., 0], angles[..., 1]
        return np.stack([np.sin(ph) * np.cos(th), np.sin(ph) * np.sin(th), np.cos(ph)], axis=-1)
    out = []
    prod = np.ones(angles.shape[:-1])
    for i in range(d - 1):
        out.append(prod * np.cos(angles[..., i]))
        prod = prod * np.sin(angles[..., i])
    out.append(prod)
    return np.stack(out, axis=-1)


@dataclass
class Decomposition:
    family: KernelFamily
    atoms: list[Atom] = field(default_factory=list)
    gs_matrix: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    fourier_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    remainder_energies: np.ndarray = field(default_factory=lambda: np.zeros(0))
    signal_norm: float = 0.0

    def __len__(self) -> int:
        return len(self.atoms)

    def raw_coefficients(self) -> np.ndarray:
        """Coefficients of the partial sum against the (multiple) kernels themselves."""
        return self.gs_matrix.T @ self.fourier_coeffs

    def gram(self) -> np.ndarray:
        return gram_matrix(self.family, self.atoms)

    def orthonormality_error(self) -> float:
        n = len(self.atoms)
        if n == 0:
            return 0.0
        M = self.gs_matrix @ self.gram() @ self.gs_matrix.T
        return float(np.max(np.abs(M - np.eye(n))))

    def remainder_energy(self, sig: Signal) -> float:
        """``||f - sum_k <f, B_k> B_k||^2`` expanded through the Gram matrix.

        Independent of the stored ``remainder_energies``, which follow from
        Pythagoras.
        """
        f2 = self.signal_norm**2
        if not self.atoms:
            return f2
        a = self.raw_coefficients()
        s = np.array([signal_inner(sig, atom, self.family) for atom in self.atoms])
        return float(f2 - 2 * a @ s + a @ self.gram() @ a)

    def energy_defect(self, sig: Signal | None = None) -> float:
        """``| ||f||^2 - sum c_k^2 - ||g||^2 |`` relative to ``||f||^2``.

        With ``sig`` the remainder is recomputed from the signal; without it the
        stored last remainder energy is used.
        """
        if len(self.atoms) == 0:
            return 0.0
        f2 = self.signal_norm**2
        g2 = self.remainder_energies[-1] if sig is None else self.remainder_energy(sig)
        return abs(f2 - np.sum(self.fourier_coeffs**2) - g2) / f2

    def truncated(self, k: int) -> "Decomposition":
        """The decomposition after its first ``k`` atoms."""
        if not 0 <= k <= len(self.atoms):
            raise IndexError(f"cannot keep {k} of {len(self.atoms)} atoms")
        return Decomposition(self.family, self.atoms[:k], self.gs_matrix[:k, :k].copy(),
                             self.fourier_coeffs[:k].copy(), self.remainder_energies[:k].copy(),
                             self.signal_norm)

    def multiplicity(self, p: ParamPoint) -> int:
        return sum(1 for a in self.atoms if a.param == p)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "family": self.family.describe(),
            "atoms": [
                {
                    "param": list(a.param.coords),
                    "ball": a.param.ball,
                    "order": a.order,
                    "direction": None if a.direction is None else list(a.direction),
                }
                for a in self.atoms
            ],
            "gs_matrix": self.gs_matrix.tolist(),
            "fourier_coeffs": self.fourier_coeffs.tolist(),
            "remainder_energies": self.remainder_energies.tolist(),
            "signal_norm": self.signal_norm,
        }

    def to_json(self) -> str:
        # json writes floats with repr, which round-trips exactly
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict, family: KernelFamily | None = None) -> "Decomposition":
        from .config import family_from_dict

        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported decomposition schema {data.get('schema')!r}")
        fam = family if family is not None else family_from_dict(data["family"])
        atoms = [
            Atom(ParamPoint(tuple(a["param"]), ball=a["ball"]), a["order"],
                 None if a["direction"] is None else tuple(a["direction"]))
            for a in data["atoms"]
        ]
        n = len(atoms)
        return cls(
            fam,
            atoms,
            np.array(data["gs_matrix"], dtype=float).reshape(n, n),
            np.array(data["fourier_coeffs"], dtype=float),
            np.array(data["remainder_energies"], dtype=float),
            float(data["signal_norm"]),
        )

    @classmethod
    def from_json(cls, text: str, family: KernelFamily | None = None) -> "Decomposition":
        return cls.from_dict(json.loads(text), family)


def gram_matrix(fam: KernelFamily, atoms: Sequence[Atom]) -> np.ndarray:
    """``G[i, j] = <K~_i, K~_j>``, symmetrized."""
    n = len(atoms)
    G = np.empty((n, n))
    for i, a in enumerate(atoms):
        for j in range(i, n):
            b = atoms[j]
            G[i, j] = G[j, i] = kernel_derivative_values(
                fam, a.param.vec, a.order, a.dir_vec(), b.param.vec, b.order, b.dir_vec()
            )
    return G


def _degeneracy_floor(tol: float) -> float:
    # den^2 comes out of a cancellation with error of a few ulps of the diagonal
    return max(tol * tol, 16 * np.finfo(float).eps)


def gs_step(
    gram: np.ndarray,
    prior_rows: np.ndarray,
    candidate_column: np.ndarray,
    candidate_diag: float,
    tol: float = 1e-8,
) -> tuple[np.ndarray, float]:
    """Orthonormalize a candidate against the basis ``B_k = sum_i prior_rows[k, i] K~_i``.

    Returns the coefficients of the new basis element over all atoms (candidate
    last) and the Gram-Schmidt denominator. One reorthogonalization pass is
    made against the full Gram matrix.
    """
    gram = np.atleast_2d(np.asarray(gram, dtype=float))
    Gs = np.atleast_2d(np.asarray(prior_rows, dtype=float))
    c = np.asarray(candidate_column, dtype=float).ravel()
    n = c.size
    if n == 0:
        if not candidate_diag > 0:
            raise DegenerateCandidate(0.0)
        den = math.sqrt(candidate_diag)
        return np.array([1.0 / den]), den
    floor = _degeneracy_floor(tol) * candidate_diag
    proj = Gs @ c
    den2 = candidate_diag - proj @ proj
    if den2 <= floor:
        raise DegenerateCandidate(math.sqrt(max(den2, 0.0)))
    full = np.empty((n + 1, n + 1))
    full[:n, :n] = gram
    full[:n, n] = full[n, :n] = c
    full[n, n] = candidate_diag
    basis = np.zeros((n, n + 1))
    basis[:, :n] = Gs
    v = np.zeros(n + 1)
    v[:n] = -proj @ Gs
    v[n] = 1.0
    v -= (basis @ full @ v) @ basis
    den2 = v @ full @ v
    if not den2 > floor:
        raise DegenerateCandidate(math.sqrt(max(den2, 0.0)))
    den = math.sqrt(den2)
    return v / den, den


def _basis_inner(fam, state: Decomposition, Q, order, direction) -> np.ndarray:
    """``<K~_cand, K~_i>`` for every prior atom, shape (..., n)."""
    return atom_column_values(fam, Q, order, direction, state.atoms)


def _score_batch(fam, sig, state: Decomposition, Q, order, direction, tol) -> np.ndarray:
    """Scores of candidates at ``Q``; NaN marks degenerate candidates."""
    s = signal_inner_values(fam, sig, Q, order, direction)
    diag = kernel_derivative_values(fam, Q, order, direction, Q, order, direction)
    C = _basis_inner(fam, state, Q, order, direction)
    proj = C @ state.gs_matrix.T
    den2 = diag - np.sum(proj * proj, axis=-1)
    num = s - proj @ state.fourier_coeffs
    ok = den2 > _degeneracy_floor(tol) * diag
    with np.errstate(invalid="ignore", divide="ignore"):
        score = np.abs(num) / np.sqrt(np.where(ok, den2, 1.0))
    return np.where(ok, score, np.nan)


def candidate_score(fam: KernelFamily, sig: Signal, state: Decomposition, cand: Atom,
                    tol: float = 1e-8) -> float:
    """``|<f, B_n^cand>|`` through an explicit Gram-Schmidt step.

    Raises ``DegenerateCandidate`` when the candidate lies (numerically) in the
    span of the chosen atoms.
    """
    col = np.array([
        kernel_derivative_values(fam, cand.param.vec, cand.order, cand.dir_vec(),
                                 a.param.vec, a.order, a.dir_vec())
        for a in state.atoms
    ])
    v = cand.param.vec
    diag = float(kernel_derivative_values(fam, v, cand.order, cand.dir_vec(), v, cand.order, cand.dir_vec()))
    row, _ = gs_step(state.gram() if state.atoms else np.zeros((0, 0)), state.gs_matrix, col, diag, tol)
    inner = [signal_inner(sig, a, fam) for a in state.atoms] + [signal_inner(sig, cand, fam)]
    return abs(float(row @ np.array(inner)))


def _max_order(fam: KernelFamily) -> int:
    return MAX_TOTAL_ORDER // 2 if fam.closed_form else 1


def _distinct_params(state: Decomposition) -> list[tuple[ParamPoint, int, list[Atom]]]:
    seen: dict[ParamPoint, list[Atom]] = {}
    for a in state.atoms:
        seen.setdefault(a.param, []).append(a)
    return [(p, len(v), v) for p, v in seen.items()]


def _optimal_direction(fam, sig, state: Decomposition, p: ParamPoint) -> np.ndarray | None:
    """Best first-derivative direction at ``p``: maximizer of the generalized Rayleigh quotient."""
    m = fam.param_dim
    E = np.eye(m)
    q = p.vec
    M = np.empty((m, m))
    for i in range(m):
        M[i] = kernel_derivative_values(fam, q, 2, E[i], q, 2, E)
    C = np.stack([_basis_inner(fam, state, q, 2, E[i]) for i in range(m)])  # (m, n)
    P = C @ state.gs_matrix.T
    u = signal_inner_values(fam, sig, np.broadcast_to(q, (m, m)), 2, E) - P @ state.fourier_coeffs
    Mr = M - P @ P.T
    theta = np.linalg.pinv(Mr, rcond=1e-12, hermitian=True) @ u
    nrm = np.linalg.norm(theta)
    if not np.isfinite(nrm) or nrm == 0:
        return None
    return theta / nrm


def _direction_set(fam, sig, state, p: ParamPoint, order: int, prior: list[Atom], config) -> np.ndarray:
    m = fam.param_dim
    E = np.eye(m)
    dirs = [E, -E]
    if config.directions:
        extra = np.array(config.directions, dtype=float)
        if extra.shape[1] != m:
            raise ValueError(f"configured directions need length {m}")
        dirs.append(extra / np.linalg.norm(extra, axis=1, keepdims=True))
    if order == 2:
        theta = _optimal_direction(fam, sig, state, p)
        if theta is not None:
            dirs.append(theta[None])
    else:
        dirs.append(np.array([a.dir_vec() for a in prior if a.order >= 2]))
        i, j = np.triu_indices(m, 1)
        dirs.append((E[i] + E[j]) / math.sqrt(2))
        dirs.append((E[i] - E[j]) / math.sqrt(2))
    return _canonical_directions(np.concatenate([d for d in dirs if d.size]))


def _canonical_directions(U: np.ndarray) -> np.ndarray:
    """Flip each direction so its first nonzero entry is positive, then drop repeats.

    ``u`` and ``-u`` span the same multiple kernel, and a fixed sign keeps the
    atom sequence of ``alpha f`` equal to that of ``f``.
    """
    out: list[np.ndarray] = []
    for u in U:
        lead = u[np.flatnonzero(np.abs(u) > 1e-12)[0]]
        u = u if lead > 0 else -u
        if not any(np.allclose(u, w, rtol=0, atol=1e-12) for w in out):
            out.append(u)
    return np.array(out)


def multiple_candidates(fam: KernelFamily, sig: Signal, state: Decomposition,
                        config: SelectionConfig) -> list[Atom]:
    """Every multiple kernel the selection may try at previously chosen parameters."""
    out = []
    for p, count, prior in _distinct_params(state):
        order = count + 1
        if order > _max_order(fam):
            continue
        for u in _direction_set(fam, sig, state, p, order, prior, config):
            out.append(Atom(p, order, tuple(u)))
    return out


@dataclass
class _Candidates:
    """Candidate atoms in scan order: grid points first, then multiple kernels."""

    coords: np.ndarray  # box coordinates of plain grid candidates
    params: np.ndarray
    plain_scores: np.ndarray
    multiples: list[Atom]
    multiple_scores: np.ndarray


def candidate_pool(fam, sig, state: Decomposition, space: SearchSpace, config: SelectionConfig,
                   coords: np.ndarray | None = None) -> _Candidates:
    """Score every grid candidate; parameters already chosen come back as multiple kernels."""
    tol = config.gs_degeneracy_tol
    if coords is None:
        coords = space.grid_coords()
    params = space.to_params(coords)
    dup_hit: set[ParamPoint] = set()
    excluded = np.zeros(len(params), dtype=bool)
    distinct = _distinct_params(state)
    for p, _, _ in distinct:
        near = space.normalized_distance(params, p.vec) <= config.duplicate_tol
        if near.any():
            dup_hit.add(p)
            excluded |= near
    scores = np.full(len(params), np.nan)
    keep = np.flatnonzero(~excluded)
    chunk = max(1, 200_000 // max(1, len(state.atoms)))
    for lo in range(0, keep.size, chunk):
        idx = keep[lo : lo + chunk]
        scores[idx] = _score_batch(fam, sig, state, params[idx], 1, None, tol)

    multiples: list[Atom] = []
    mscores: list[float] = []
    if config.weak_rho >= 1.0:
        for p, count, prior in distinct:
            order = count + 1
            if order > _max_order(fam) or not (config.revisit or p in dup_hit):
                continue
            dirs = _direction_set(fam, sig, state, p, order, prior, config)
            sc = _score_batch(fam, sig, state, np.broadcast_to(p.vec, dirs.shape), order, dirs, tol)
            j = _first_argmax(sc)
            if j is None:
                continue
            multiples.append(Atom(p, order, tuple(dirs[j])))
            mscores.append(sc[j])
    return _Candidates(coords, params, scores, multiples, np.array(mscores))


def _first_argmax(scores: np.ndarray) -> int | None:
    if scores.size == 0 or np.all(np.isnan(scores)):
        return None
    return int(np.nanargmax(scores))


def _local_maxima(space: SearchSpace, scores: np.ndarray, count: int) -> list[int]:
    """Indices of the ``count`` best grid points that beat all their axis neighbours.

    The global grid maximum always comes first.
    """
    first = _first_argmax(scores)
    if count <= 1 or first is None:
        return [first]
    S = np.where(np.isnan(scores), -np.inf, scores).reshape(space.steps)
    peak = np.ones(S.shape, dtype=bool)
    for ax, per in enumerate(space.periodic):
        for shift in (1, -1):
            nb = np.roll(S, shift, axis=ax)
            if not per:
                edge = [slice(None)] * S.ndim
                edge[ax] = 0 if shift == 1 else -1
                nb[tuple(edge)] = -np.inf
            peak &= S >= nb
    idx = np.flatnonzero(peak.ravel() & np.isfinite(S.ravel()))
    idx = idx[np.argsort(-S.ravel()[idx], kind="stable")]
    params = space.to_params(space.grid_coords()[idx])
    out = [first]
    seen = [space.to_params(space.grid_coords()[first])]
    for i, p in zip(idx, params):
        if len(out) == count:
            break
        # poles and rho = 0 map many grid points to one parameter
        if any(np.allclose(p, q, atol=1e-12) for q in seen):
            continue
        out.append(int(i))
        seen.append(p)
    return out


def _polish(fam, sig, state, space: SearchSpace, config: SelectionConfig, c0: np.ndarray,
            s0: float) -> tuple[np.ndarray, float]:
    """Pattern search in box coordinates from ``c0``.

    Polls the full 3^k - 1 neighbour stencil, follows each improving move with
    one extrapolated (pattern) step, and halves the step when nothing
    improves. Stops once every step is below ``refine_tol``.
    """
    tol = config.gs_degeneracy_tol
    step = space.spacing().copy()
    k = space.ndim
    moves = np.array([m for m in itertools.product((-1.0, 0.0, 1.0), repeat=k) if any(m)])
    distinct = [p.vec for p, _, _ in _distinct_params(state)]

    def score(C):
        P = space.to_params(C)
        sc = _score_batch(fam, sig, state, P, 1, None, tol)
        for pv in distinct:
            sc[space.normalized_distance(P, pv) <= config.duplicate_tol] = np.nan
        return sc

    best_c, best_s = np.array(c0, dtype=float), s0
    for _ in range(config.max_refine_rounds):
        if np.max(step) < config.refine_tol:
            break
        trial = space.clamp(best_c + moves * step)
        sc = score(trial)
        j = _first_argmax(sc)
        if j is None or not sc[j] > best_s:
            step = step / 2
            continue
        prev = best_c
        best_c, best_s = trial[j], float(sc[j])
        ext = space.clamp(2 * best_c - prev)
        se = score(ext[None])[0]
        if se > best_s:
            best_c, best_s = ext, float(se)
    return best_c, best_s


def maximal_select(fam: KernelFamily, sig: Signal, state: Decomposition,
                   config: SelectionConfig) -> tuple[Atom, float]:
    """Return the next atom and its score ``|<f, B_n>|``."""
    space = SearchSpace(fam, config)
    pool = candidate_pool(fam, sig, state, space, config)
    j = _first_argmax(pool.plain_scores)
    if config.weak_rho < 1.0:
        if j is None:
            raise DictionaryExhausted("every grid candidate is degenerate")
        thr = config.weak_rho * pool.plain_scores[j]
        first = int(np.flatnonzero(pool.plain_scores >= thr)[0])
        return Atom(ParamPoint(tuple(pool.params[first]), ball=not fam.half_space)), float(
            pool.plain_scores[first]
        )
    mj = _first_argmax(pool.multiple_scores)
    if j is None and mj is None:
        raise DictionaryExhausted("every candidate is degenerate")
    if j is None:
        return pool.multiples[mj], float(pool.multiple_scores[mj])
    c, s = pool.coords[j], float(pool.plain_scores[j])
    if config.refine:
        # polish before comparing: a refined plain atom may beat every multiple
        for i in _local_maxima(space, pool.plain_scores, config.starts):
            ci, si = _polish(fam, sig, state, space, config, pool.coords[i], float(pool.plain_scores[i]))
            if si > s:
                c, s = ci, si
    if mj is not None and pool.multiple_scores[mj] > s:
        return pool.multiples[mj], float(pool.multiple_scores[mj])
    if space.on_boundary(c):
        warnings.warn(
            f"selected parameter {np.round(space.to_params(c), 6).tolist()} lies on the search box boundary",
            BoxBoundaryWarning,
            stacklevel=2,
        )
    return Atom(ParamPoint(tuple(space.to_params(c)), ball=not fam.half_space)), s


def commit_atom(fam: KernelFamily, sig: Signal, state: Decomposition, atom: Atom,
                tol: float = 1e-8) -> Decomposition:
    """Append ``atom`` to a decomposition of ``sig``; raises ``DegenerateCandidate`` if it adds nothing."""
    f2 = state.signal_norm**2
    col = _basis_inner(fam, state, atom.param.vec, atom.order, atom.dir_vec())
    v = atom.param.vec
    diag = float(kernel_derivative_values(fam, v, atom.order, atom.dir_vec(), v, atom.order, atom.dir_vec()))
    atoms = state.atoms + [atom]
    gram = gram_matrix(fam, atoms)
    row, _ = gs_step(gram[:-1, :-1], state.gs_matrix, col, diag, tol)
    n = len(atoms)
    gs = np.zeros((n, n))
    gs[:-1, :-1] = state.gs_matrix
    gs[-1] = row
    inner = np.array([signal_inner(sig, a, fam) for a in atoms])
    coeffs = np.append(state.fourier_coeffs, row @ inner)
    energies = np.append(state.remainder_energies, f2 - np.sum(coeffs**2))
    return Decomposition(fam, atoms, gs, coeffs, energies, state.signal_norm)


def poafd_run(fam: KernelFamily, sig: Signal, n_iterations: int,
              config: SelectionConfig | None = None) -> Decomposition:
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    config = config or SelectionConfig()
    if fam.kind is Kind.CONVOLUTION and fam.profile.delta < 1:
        raise KernelError("boundary vanishing is not established for decay exponent delta < 1")
    norm = signal_norm(sig, fam)
    if not norm > 0:
        raise ValueError("signal has zero norm")
    f2 = norm * norm
    state = Decomposition(fam, signal_norm=norm)
    for it in range(n_iterations):
        remaining = state.remainder_energies[-1] if len(state) else f2
        if remaining <= config.stop_tol * f2:
            log.info("remainder exhausted after %d atoms", len(state))
            break
        try:
            atom, score = maximal_select(fam, sig, state, config)
            state = commit_atom(fam, sig, state, atom, config.gs_degeneracy_tol)
        except (DictionaryExhausted, DegenerateCandidate) as exc:
            log.warning("stopping after %d atoms: %s", len(state), exc)
            break
        log.debug("iteration %d: %s score=%.6g", it + 1, atom, score)
    return state


def relative_error(dec: Decomposition, k: int) -> float:
    if not 1 <= k <= len(dec.remainder_energies):
        raise IndexError(f"iteration {k} outside 1..{len(dec.remainder_energies)}")
    return math.sqrt(max(dec.remainder_energies[k - 1], 0.0)) / dec.signal_norm


def is_consecutive(atoms: Sequence[Atom]) -> bool:
    """Each order-j atom at a parameter is preceded by orders 1..j-1 there."""
    seen: dict[ParamPoint, int] = {}
    for a in atoms:
        if a.order != seen.get(a.param, 0) + 1:
            return False
        seen[a.param] = a.order
    return True

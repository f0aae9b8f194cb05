"""JSON run configurations: family, signal, selection settings and outputs."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .engine import SelectionConfig
from .kernels import Atom, ConvolutionProfile, KernelError, KernelFamily, Kind, ParamPoint, QuadratureBox
from .signals import KernelCombination, SampledBoundary, Signal, load_sampled_csv

CONFIG_SCHEMA = 1
EMIT_CHOICES = ("decomposition", "errors", "boundary-curve", "gram-report")

_PROFILES = {"poisson": ConvolutionProfile.poisson, "gaussian": ConvolutionProfile.gaussian}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field or line."""


@dataclass(frozen=True)
class CurveSpec:
    """Boundary points for the reconstruction curve.

    Half space: ``n`` points on the segment ``start -> stop`` in R^d.
    Sphere (d = 3): the meridian at azimuth ``theta`` with polar angle over [0, pi].
    """

    n: int = 512
    start: tuple[float, ...] | None = None
    stop: tuple[float, ...] | None = None
    theta: float | None = None

    def points(self, fam: KernelFamily) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(abscissa, points)``."""
        if fam.half_space:
            if self.start is None or self.stop is None:
                raise ConfigError("curve: half-space curves need 'start' and 'stop'")
            a = np.array(self.start, dtype=float)
            b = np.array(self.stop, dtype=float)
            if a.size != fam.d or b.size != fam.d:
                raise ConfigError(f"curve: 'start'/'stop' need {fam.d} entries")
            s = np.linspace(0.0, 1.0, self.n)
            pts = a + s[:, None] * (b - a)
            axis = int(np.argmax(np.abs(b - a)))
            return pts[:, axis], pts
        if fam.d != 3 or self.theta is None:
            raise ConfigError("curve: sphere curves need d = 3 and 'theta'")
        phi = np.linspace(0.0, math.pi, self.n)
        th = self.theta
        pts = np.stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)], -1)
        return phi, pts


@dataclass(frozen=True)
class RunConfig:
    family: KernelFamily
    signal: Signal
    iterations: int
    selection: SelectionConfig
    output: Path
    emit: tuple[str, ...] = ("decomposition", "errors")
    curve: CurveSpec | None = None
    digest: str = ""


def _get(d: dict, key: str, where: str, default: Any = ..., kind=None):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{where}: missing field '{key}'")
        return default
    val = d[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}")
    return val


def family_from_dict(spec: dict, where: str = "family") -> KernelFamily:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = _get(spec, "kind", where, kind=str)
    d = _get(spec, "d", where, kind=int)
    try:
        k = Kind(kind)
    except ValueError:
        raise ConfigError(f"{where}.kind: unknown kind {kind!r}; choose from {[k.value for k in Kind]}") from None
    try:
        if k is Kind.POISSON:
            return KernelFamily.poisson(d)
        if k is Kind.HEAT:
            return KernelFamily.heat(d)
        if k is Kind.SPHERE:
            return KernelFamily.sphere(d, float(spec.get("c_d", 1.0)))
        name = _get(spec, "profile", where, kind=str)
        if name not in _PROFILES:
            raise ConfigError(f"{where}.profile: unknown profile {name!r}; choose from {sorted(_PROFILES)}")
        grid = _get(spec, "grid", where, kind=dict)
        box = QuadratureBox(float(_get(grid, "half_width", f"{where}.grid")), int(_get(grid, "steps", f"{where}.grid")))
        return KernelFamily.convolution(_PROFILES[name](d), d, box)
    except KernelError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def param_from_dict(fam: KernelFamily, spec: Any, where: str) -> ParamPoint:
    """Accepts ``[t, x...]`` / ``[w...]`` lists, ``{"t", "x"}`` or ``{"rho", "s"}`` / ``{"rho", "phi", "theta"}``."""
    try:
        if isinstance(spec, list):
            return ParamPoint(tuple(float(v) for v in spec), ball=not fam.half_space)
        if not isinstance(spec, dict):
            raise ConfigError(f"{where}: expected a list or an object")
        if fam.half_space:
            return ParamPoint.half(float(_get(spec, "t", where)), _get(spec, "x", where))
        rho = float(_get(spec, "rho", where))
        if "s" in spec:
            return ParamPoint.in_ball(rho, spec["s"])
        phi, th = float(_get(spec, "phi", where)), float(_get(spec, "theta", where))
        s = [math.sin(phi) * math.cos(th), math.sin(phi) * math.sin(th), math.cos(phi)]
        return ParamPoint.in_ball(rho, s)
    except KernelError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def signal_from_dict(fam: KernelFamily, spec: dict, base: Path, where: str = "signal") -> Signal:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    if "sampled_csv" in spec:
        path = (base / spec["sampled_csv"]).resolve()
        if not path.exists():
            raise ConfigError(f"{where}.sampled_csv: file not found: {path}")
        try:
            return load_sampled_csv(path, fam.d)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    terms = _get(spec, "terms", where, kind=list)
    out = []
    for i, t in enumerate(terms):
        w = f"{where}.terms[{i}]"
        if not isinstance(t, dict):
            raise ConfigError(f"{w}: expected an object")
        coeff = float(_get(t, "coefficient", w))
        p = param_from_dict(fam, _get(t, "param", w), f"{w}.param")
        order = int(t.get("order", 1))
        direction = t.get("direction")
        try:
            out.append((coeff, Atom(p, order, None if direction is None else tuple(direction))))
        except KernelError as exc:
            raise ConfigError(f"{w}: {exc}") from None
    return KernelCombination(out)


_SELECTION_FIELDS = {f.name for f in dataclasses.fields(SelectionConfig)}


def selection_from_dict(spec: dict, where: str = "selection") -> SelectionConfig:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(spec) - _SELECTION_FIELDS
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    kw = dict(spec)
    if kw.get("grid_steps") is not None:
        kw["grid_steps"] = tuple(kw["grid_steps"])
    if "directions" in kw:
        kw["directions"] = tuple(tuple(u) for u in kw["directions"])
    try:
        return SelectionConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def selection_to_dict(cfg: SelectionConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["directions"] = [list(u) for u in cfg.directions]
    if cfg.grid_steps is not None:
        out["grid_steps"] = list(cfg.grid_steps)
    return out


def config_digest(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()[:16]


def run_config_from_dict(raw: dict, base: Path) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    schema = raw.get("schema")
    if schema != CONFIG_SCHEMA:
        raise ConfigError(f"schema: expected {CONFIG_SCHEMA}, got {schema!r}")
    fam = family_from_dict(_get(raw, "family", "config"))
    sig = signal_from_dict(fam, _get(raw, "signal", "config"), base)
    iters = _get(raw, "iterations", "config", kind=int)
    if iters < 1:
        raise ConfigError("iterations: must be >= 1")
    sel = selection_from_dict(raw.get("selection", {}))
    emit = tuple(raw.get("emit", ["decomposition", "errors"]))
    bad = [e for e in emit if e not in EMIT_CHOICES]
    if bad:
        raise ConfigError(f"emit: unknown item(s) {bad}; choose from {list(EMIT_CHOICES)}")
    curve = None
    if "curve" in raw:
        c = raw["curve"]
        if not isinstance(c, dict):
            raise ConfigError("curve: expected an object")
        curve = CurveSpec(
            n=int(c.get("n", 512)),
            start=None if c.get("start") is None else tuple(c["start"]),
            stop=None if c.get("stop") is None else tuple(c["stop"]),
            theta=c.get("theta"),
        )
        curve.points(fam)
    if "boundary-curve" in emit and curve is None:
        raise ConfigError("curve: required when emitting 'boundary-curve'")
    out = Path(raw.get("output", "out"))
    if not out.is_absolute():
        out = base / out
    return RunConfig(fam, sig, iters, sel, out, emit, curve, config_digest(raw))


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return run_config_from_dict(raw, path.parent)

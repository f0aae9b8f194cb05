"""Artifact writers: decomposition JSON, delimited tables and figures."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .config import CurveSpec
from .engine import Decomposition, relative_error
from .kernels import KernelFamily
from .signals import Signal, reconstruct_boundary, signal_boundary_values
from .verify import CheckRow


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path | None, digest: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write a CSV with the provenance comment line; returns the text."""
    buf = io.StringIO()
    buf.write(f"# config_sha256={digest} version={__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        path.write_text(text, encoding="utf-8")
    return text


def param_columns(fam: KernelFamily) -> list[str]:
    if fam.half_space:
        return ["t"] + [f"x{i + 1}" for i in range(fam.d)]
    return [f"w{i + 1}" for i in range(fam.d)] + ["rho"]


def _param_fields(fam: KernelFamily, atom) -> list[float]:
    vec = list(atom.param.coords)
    return vec if fam.half_space else vec + [atom.param.rho]


def error_rows(dec: Decomposition) -> list[list]:
    fam = dec.family
    rows = []
    for k, atom in enumerate(dec.atoms, start=1):
        direction = "" if atom.direction is None else " ".join(repr(float(v)) for v in atom.direction)
        rows.append([k, *_param_fields(fam, atom), atom.order, direction,
                     dec.fourier_coeffs[k - 1], relative_error(dec, k)])
    return rows


def error_header(fam: KernelFamily) -> list[str]:
    return ["iteration", *param_columns(fam), "order", "direction", "coefficient", "relative_error"]


def curve_table(fam: KernelFamily, sig: Signal, dec: Decomposition, curve: CurveSpec,
                iterations: Sequence[int]) -> tuple[list[str], np.ndarray]:
    """Columns ``abscissa, y1..yd, true, n<k>...`` for the requested partial sums."""
    s, pts = curve.points(fam)
    try:
        truth = signal_boundary_values(fam, sig, pts)
    except ValueError:
        truth = np.full(len(pts), np.nan)  # sampled data has no values off its nodes
    cols = [s[:, None], pts, truth[:, None]]
    names = ["abscissa", *[f"y{i + 1}" for i in range(fam.d)], "true"]
    for k in iterations:
        k = min(k, len(dec))
        cols.append(reconstruct_boundary(fam, dec.truncated(k), pts)[:, None])
        names.append(f"n{k}")
    return names, np.hstack(cols)


def gram_report_rows(dec: Decomposition) -> list[list]:
    G = dec.gram()
    R = dec.gs_matrix @ G @ dec.gs_matrix.T - np.eye(len(dec))
    n = len(dec)
    return [[i + 1, j + 1, G[i, j], R[i, j]] for i in range(n) for j in range(n)]


def gram_summary(dec: Decomposition, sig: Signal) -> list[list]:
    G = dec.gram()
    cond = float(np.linalg.cond(G)) if len(dec) else 1.0
    return [
        ["orthonormality_error", dec.orthonormality_error()],
        ["energy_defect", dec.energy_defect(sig)],
        ["gram_condition", cond],
    ]


def check_rows(rows: Sequence[CheckRow]) -> list[list]:
    return [[r.suite, r.name, r.value, r.reference, r.residual, r.tolerance,
             "pass" if r.passed else "FAIL"] for r in rows]


CHECK_HEADER = ["suite", "check", "value", "reference", "residual", "tolerance", "status"]


# figures ---------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_curve(path: Path, names: Sequence[str], table: np.ndarray, xlabel: str) -> None:
    plt = _pyplot()
    recon = [i for i, n in enumerate(names) if n.startswith("n")]
    fig, axes = plt.subplots(1, len(recon), figsize=(3.2 * len(recon), 3.0), sharey=True, squeeze=False)
    x = table[:, 0]
    true_col = names.index("true")
    for ax, j in zip(axes[0], recon):
        ax.plot(x, table[:, true_col], ":", color="k", lw=1.5, label="signal")
        ax.plot(x, table[:, j], "-", color="C0", lw=1.0, label="partial sum")
        ax.set_title(f"{names[j][1:]} atoms", fontsize=9)
        ax.set_xlabel(xlabel)
    axes[0][0].legend(fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_errors(path: Path, dec: Decomposition, published: dict[int, float] | None = None) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    k = np.arange(1, len(dec) + 1)
    errs = [relative_error(dec, int(i)) for i in k]
    ax.semilogy(k, errs, "o-", ms=3, label="this run")
    if published:
        ks = sorted(published)
        ax.semilogy(ks, [published[i] for i in ks], "s", mfc="none", label="published")
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative error")
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)

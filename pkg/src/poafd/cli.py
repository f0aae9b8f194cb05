"""Command-line entry point: ``poafd decompose | experiment | verify``.

Exit status is 0 on success, 1 when a check or the engine fails and 2 for
usage or configuration errors.
"""

from __future__ import annotations

import hashlib
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import click

from . import __version__
from .config import ConfigError, CurveSpec, load_run_config, selection_to_dict
from .engine import BoxBoundaryWarning, Decomposition, poafd_run, relative_error
from .experiments import EXPERIMENTS, Experiment
from .kernels import KernelError, KernelFamily
from .report import (
    CHECK_HEADER,
    check_rows,
    curve_table,
    error_header,
    error_rows,
    gram_report_rows,
    gram_summary,
    plot_curve,
    plot_errors,
    write_csv,
)
from .signals import Signal
from .verify import SCOPES, run_scope

log = logging.getLogger("poafd")


class UsageFailure(click.ClickException):
    exit_code = 2


def _write_artifacts(out: Path, digest: str, fam: KernelFamily, sig: Signal, dec: Decomposition,
                     emit: tuple[str, ...], curve: CurveSpec | None, curve_iters: list[int],
                     figures: bool, published: dict[int, float] | None = None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "decomposition" in emit:
        p = out / "decomposition.json"
        p.write_text(dec.to_json() + "\n", encoding="utf-8")
        written.append(p)
    if "errors" in emit:
        p = out / "errors.csv"
        write_csv(p, digest, error_header(fam), error_rows(dec))
        written.append(p)
        if figures:
            plot_errors(out / "errors.png", dec, published)
            written.append(out / "errors.png")
    if "boundary-curve" in emit and curve is not None:
        names, table = curve_table(fam, sig, dec, curve, curve_iters)
        p = out / "boundary_curve.csv"
        write_csv(p, digest, names, table.tolist())
        written.append(p)
        if figures:
            xlabel = "x" if fam.half_space else "phi"
            plot_curve(out / "boundary_curve.png", names, table, xlabel)
            written.append(out / "boundary_curve.png")
    if "gram-report" in emit:
        p = out / "gram_report.csv"
        write_csv(p, digest, ["i", "j", "gram", "orthonormal_residual"], gram_report_rows(dec))
        written.append(p)
        p = out / "gram_summary.csv"
        write_csv(p, digest, ["quantity", "value"], gram_summary(dec, sig))
        written.append(p)
    return written


def _run(fam, sig, iterations, selection) -> Decomposition:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoxBoundaryWarning)
        dec = poafd_run(fam, sig, iterations, selection)
    for w in caught:
        click.echo(f"warning: {w.message}", err=True)
    return dec


@click.group()
@click.version_option(__version__, prog_name="poafd")
@click.option("-v", "--verbose", count=True, help="Log progress (-vv for every iteration).")
def main(verbose: int):
    """Pre-orthogonal adaptive Fourier decomposition over kernel dictionaries."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
              help="JSON run configuration.")
@click.option("--no-figures", is_flag=True, help="Skip the PNG figures.")
def decompose(config_path: str, no_figures: bool):
    """Run a decomposition described by a configuration file."""
    try:
        cfg = load_run_config(config_path)
    except ConfigError as exc:
        raise UsageFailure(str(exc)) from None
    try:
        dec = _run(cfg.family, cfg.signal, cfg.iterations, cfg.selection)
    except (KernelError, ValueError, ArithmeticError, RuntimeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    written = _write_artifacts(cfg.output, cfg.digest, cfg.family, cfg.signal, dec, cfg.emit,
                               cfg.curve, [len(dec)], not no_figures)
    click.echo(f"{len(dec)} atoms, relative error {relative_error(dec, len(dec)):.6g}")
    for p in written:
        click.echo(f"wrote {p}")


def _experiment_digest(exp: Experiment) -> str:
    spec = {
        "experiment": exp.name,
        "iterations": exp.iterations,
        "family": exp.family.describe(),
        "signal": [[c, list(a.param.coords), a.order] for c, a in exp.signal.terms],
        "selection": selection_to_dict(exp.selection),
    }
    return hashlib.sha256(json.dumps(spec, sort_keys=True).encode()).hexdigest()[:16]


def comparison_rows(exp: Experiment, dec: Decomposition) -> list[list]:
    rows = []
    for k in sorted(exp.published):
        got = relative_error(dec, k) if k <= len(dec) else float("nan")
        rows.append([k, exp.published[k], got, exp.bands[k], bool(got <= exp.bands[k])])
    return rows


@main.command()
@click.argument("name", type=click.Choice(sorted(EXPERIMENTS)))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (default: ./<name>).")
@click.option("--no-figures", is_flag=True, help="Skip the PNG figures.")
def experiment(name: str, out_dir: str | None, no_figures: bool):
    """Reproduce one of the two reference experiments."""
    exp = EXPERIMENTS[name]()
    out = Path(out_dir or name)
    t0 = time.perf_counter()
    dec = _run(exp.family, exp.signal, exp.iterations, exp.selection)
    elapsed = time.perf_counter() - t0
    digest = _experiment_digest(exp)
    emit = ("decomposition", "errors", "boundary-curve", "gram-report")
    written = _write_artifacts(out, digest, exp.family, exp.signal, dec, emit, exp.curve,
                               sorted(exp.published), not no_figures, exp.published)
    rows = comparison_rows(exp, dec)
    p = out / "comparison.csv"
    write_csv(p, digest, ["iteration", "published", "reproduced", "band", "within_band"], rows)
    written.append(p)
    click.echo(f"{name}: {len(dec)} atoms in {elapsed:.1f} s")
    for k, pub, got, band, ok in rows:
        click.echo(f"  iteration {k}: reproduced {got:.4g}  published {pub:.4g}  "
                   f"band {band:g}  {'within' if ok else 'outside'}")
    for p in written:
        click.echo(f"wrote {p}")


@main.command()
@click.option("--scope", default=",".join(SCOPES), show_default=True,
              help=f"Comma-separated subset of {', '.join(SCOPES)}; empty for none.")
@click.option("--seed", default=0, show_default=True, type=int, help="Seed for randomized suites.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write the report CSV here instead of stdout.")
def verify(scope: str, seed: int, out_path: str | None):
    """Run oracle and property checks; exit 1 if any fails."""
    scopes = [s.strip() for s in scope.split(",") if s.strip()]
    unknown = [s for s in scopes if s not in SCOPES]
    if unknown:
        raise UsageFailure(f"unknown scope(s) {unknown}; choose from {list(SCOPES)}")
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoxBoundaryWarning)
        for s in scopes:
            rows.extend(run_scope(s, seed))
    digest = hashlib.sha256(json.dumps({"scopes": scopes, "seed": seed}).encode()).hexdigest()[:16]
    text = write_csv(Path(out_path) if out_path else None, digest, CHECK_HEADER, check_rows(rows))
    if out_path is None:
        click.echo(text, nl=False)
    failed = [r for r in rows if not r.passed]
    click.echo(f"{len(rows) - len(failed)}/{len(rows)} checks passed", err=True)
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()

"""Command-line front end.

    dlczmux dephase            |A(-k_S, t)|^2 of several spin waves around one flip
    dlczmux budget             error budget and rate scaling over an N grid
    dlczmux mc error|link|chain|sweep

Every output is CSV preceded by a ``#`` header block holding the resolved
config and seed.  Exit codes: 0 ok, 2 config error, 3 runtime or statistical
precondition error, 4 I/O error; failures also print a JSON error record on
stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import budget, montecarlo, spinwave
from .config import RunConfig, load_config
from .errors import ConfigError, DlczError, InvalidParameterError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4

BUDGET_COLUMNS = [
    "N", "p_max", "err_same_bin", "err_cross_bin", "err_total", "rate_scaling", "speedup_vs_N1",
]
MC_COLUMNS = ["estimator", "N", "mean", "std_error", "analytic", "trials"]


class OutputError(Exception):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(command: str, cfg: RunConfig, columns, rows, notes=()) -> str:
    buf = io.StringIO()
    buf.write(f"# dlczmux {command}\n")
    buf.write(f"# seed: {cfg.seed}\n")
    buf.write(f"# config: {cfg.to_json()}\n")
    for note in notes:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def csv_body(text: str) -> str:
    """The non-comment part of an output file."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


# -- subcommands -----------------------------------------------------------------


def dephase_table(cfg: RunConfig):
    """Rows of (t, |A_0|^2, ..., |A_{M-1}|^2) and the echo bookkeeping notes."""
    ens = spinwave.sample_ensemble(
        cfg.n_atoms, cfg.geometry(), cfg.broadening_spec(), cfg.seed
    ).with_flip(cfg.flip_time)
    waves = [spinwave.SpinWave.along_axis(t, cfg.k_magnitude) for t in cfg.wave_times]
    columns = ["t"] + [f"wave_{i}" for i in range(len(waves))]
    if not waves:
        return columns, [], []
    echoes = spinwave.rephasing_times(waves, ens.schedule)
    bin_duration = cfg.broadening_spec().bin_duration
    dt = cfg.time_step or (bin_duration / 4 if math.isfinite(bin_duration) else cfg.flip_time / 40)
    t_end = cfg.t_end if cfg.t_end is not None else 2 * cfg.flip_time
    times = np.arange(int(round(t_end / dt)) + 1) * dt

    cols = []
    for w in waves:
        col = np.full(times.shape, np.nan)
        live = times >= w.creation_time
        if np.any(live):
            amp = spinwave.amplitudes(ens, w, -w.k_stokes, times[live])
            col[live] = np.abs(amp) ** 2
        cols.append(col)
    peaks = []
    after = times > cfg.flip_time
    for col in cols:
        if np.any(after):
            peaks.append(float(times[after][np.nanargmax(col[after])]))
    rows = []
    for i, t in enumerate(times):
        rows.append([float(t)] + [None if np.isnan(c[i]) else float(c[i]) for c in cols])
    notes = [
        "echo_times: " + ",".join(_fmt(e) for e in echoes),
        "peak_times: " + ",".join(_fmt(p) for p in peaks),
    ]
    return columns, rows, notes


def cmd_dephase(cfg: RunConfig) -> str:
    columns, rows, notes = dephase_table(cfg)
    return render_csv("dephase", cfg, columns, rows, notes)


def budget_rows(cfg: RunConfig):
    ratio = cfg.ratio
    rows = []
    for n in cfg.n_grid:
        p = cfg.p if cfg.p is not None else budget.max_p_for_error(cfg.epsilon, n, ratio)
        em = budget.EmissionParams.with_cavity(p, cfg.beta_s, cfg.cavity())
        b = budget.error_budget(em, n)
        rows.append([
            n,
            budget.max_p_for_error(cfg.epsilon, n, ratio),
            b.same_bin,
            b.cross_bin,
            b.total,
            budget.multimode_rate_scaling(cfg.epsilon, n, ratio),
            budget.speedup_vs_single_mode(n, ratio),
        ])
    return rows


def cmd_budget(cfg: RunConfig) -> str:
    spec = budget.cavity_spectrum(cfg.cavity())
    notes = [f"cavity: fsr_hz={_fmt(spec.fsr)} peak_width_hz={_fmt(spec.peak_width)}"]
    notes.append(f"mode_capacity: {budget.mode_capacity(cfg.protocol())}")
    for n in cfg.n_grid:
        if budget.exceeds_useful_modes(n, cfg.finesse):
            notes.append(f"note: N={n} > 5F; multimode speedup is saturated")
    return render_csv("budget", cfg, BUDGET_COLUMNS, budget_rows(cfg), notes)


def mc_rows(cfg: RunConfig, estimator: str):
    rows = []
    if estimator == "error":
        for n in cfg.n_grid:
            tc = montecarlo.TrialConfig(
                cfg.emission(n), n, cfg.error_trials, cfg.seed, cfg.statistics
            )
            est = montecarlo.estimate_error_rate(tc, workers=cfg.workers)
            rows.append(["error", n, est.mean, est.std_error, est.analytic, cfg.error_trials])
            rows.append(
                ["error_any", n, est.any_noise, est.any_noise_se, est.analytic, cfg.error_trials]
            )
    elif estimator == "link":
        for n in cfg.n_grid:
            lc = montecarlo.LinkConfig(cfg.protocol(n), cfg.emission(n), 0)
            est = montecarlo.estimate_link_time(lc, cfg.trials, cfg.seed, cfg.workers)
            rows.append(["link", n, est.mean, est.std_error, est.analytic, cfg.trials])
    elif estimator == "chain":
        for n in cfg.n_grid:
            lc = montecarlo.LinkConfig(cfg.protocol(n), cfg.emission(n), cfg.swap_levels)
            est = montecarlo.estimate_chain_time(lc, cfg.trials, cfg.seed, cfg.workers)
            rows.append(["chain", n, est.mean, est.std_error, est.analytic, cfg.trials])
    elif estimator == "sweep":
        base = montecarlo.LinkConfig(cfg.protocol(1), cfg.emission(1), 0)
        for r in montecarlo.rate_sweep(base, cfg.n_grid, cfg.trials, cfg.seed, cfg.workers):
            rows.append(
                ["sweep", r.n_modes, r.mc_normalized, r.mc_normalized_se,
                 r.analytic_normalized, cfg.trials]
            )
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return rows


def cmd_mc(cfg: RunConfig, estimator: str) -> str:
    start = time.perf_counter()
    rows = mc_rows(cfg, estimator)
    wall = time.perf_counter() - start
    # wall time stays out of the CSV body so that bodies are reproducible
    return render_csv(f"mc {estimator}", cfg, MC_COLUMNS, rows, [f"seconds_wall: {wall:.3f}"])


# -- argument handling -----------------------------------------------------------


def _n_grid(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty N grid")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--n-grid", type=_n_grid, help="comma-separated mode counts")
    common.add_argument("--workers", type=int, help="worker threads for Monte Carlo")
    common.add_argument("--quiet", action="store_true", help="no summary on stdout")

    parser = argparse.ArgumentParser(
        prog="dlczmux", description="Temporally multiplexed DLCZ repeater calculator"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("dephase", parents=[common], help="spin-wave echo time series")
    sub.add_parser("budget", parents=[common], help="analytic error budget table")
    mc = sub.add_parser("mc", help="Monte Carlo estimators")
    mc_sub = mc.add_subparsers(dest="estimator", required=True)
    mc_help = {
        "error": "conditional readout error per heralded bin",
        "link": "elementary link generation time",
        "chain": "swapped chain generation time",
        "sweep": "normalized rate against mode count",
    }
    for name, text in mc_help.items():
        mc_sub.add_parser(name, parents=[common], help=text)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {"seed": args.seed, "out": args.out, "n_grid": args.n_grid, "workers": args.workers}
    if args.trials is not None:
        changes["trials"] = args.trials
        changes["error_trials"] = args.trials
    return cfg.override(**changes)


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {out}: {exc}") from exc


def _fail(kind: str, message: str, code: int) -> int:
    record = {"error": kind, "message": message, "exit_code": code}
    sys.stderr.write(json.dumps(record) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "dephase":
            text = cmd_dephase(cfg)
        elif args.command == "budget":
            text = cmd_budget(cfg)
        else:
            text = cmd_mc(cfg, args.estimator)
        _write(text, cfg.out)
    except (ConfigError, InvalidParameterError) as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except OutputError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except DlczError as exc:
        return _fail("runtime", f"{type(exc).__name__}: {exc}", EXIT_RUNTIME)
    if cfg.out is not None and not args.quiet:
        n_rows = len(csv_body(text).splitlines()) - 1
        print(f"wrote {n_rows} rows to {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

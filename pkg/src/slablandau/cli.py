"""Command-line entry point.

Verbs:

    run            integrate per config; writes record.json(+.state.bin) and
                   timeseries.csv into --out-dir
    picard         fixed-point iteration; writes picard.json
    probe-hypo     hypocoercivity sampling probe; writes hypo.json
    weights-table  wall constants K0/K1/K2 over an A-ladder; writes CSV
    fit            decay fit of a timeseries CSV column; writes fit.json
    plot           SVG plot of a record column, optional fitted overlay

Flags: --config PATH, --out-dir DIR (default .), --threads N, --seed N.
Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import diagnostics, records
from .config import ConfigError, emit_config, load_config
from .grid import SlabGeometry, VelocityGrid
from .solver import NumericsError, SlabSolver, picard_iterate
from .weights import find_A, weights_table


def _json_dump(obj, path: str):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slablandau")
    p.add_argument("verb", choices=["run", "picard", "probe-hypo",
                                    "weights-table", "fit", "plot"])
    p.add_argument("inputs", nargs="*",
                   help="verb-specific inputs (fit: csv column; plot: "
                        "record.json column [fit.json])")
    p.add_argument("--config", default=None)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    return p


def _load(args):
    if args.config is None:
        raise ConfigError("--config is required for this verb")
    cfg = load_config(args.config)
    if args.threads is not None:
        cfg.threads = args.threads
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _verb_run(args, out):
    cfg = _load(args)
    record = SlabSolver(cfg).run()
    records.emit_record(record, os.path.join(out, "record.json"))
    records.emit_timeseries(record, os.path.join(out, "timeseries.csv"))
    emit_config(cfg, os.path.join(out, "effective_config.ini"))


def _verb_picard(args, out):
    cfg = _load(args)
    result = picard_iterate(cfg)
    doc = {"dt": result["dt"], "converged": result["converged"],
           "diverged": result["diverged"],
           "ball_invariant": result["ball_invariant"],
           "iterations": [{"n": h.n, "d_n": h.d_n, "sup_norm": h.sup_norm,
                           "in_ball": h.in_ball}
                          for h in result["history"]]}
    _json_dump(doc, os.path.join(out, "picard.json"))


def _verb_probe(args, out):
    cfg = _load(args)
    grid = VelocityGrid(cfg.n_per_axis, cfg.v_max, cfg.centering)
    geom = SlabGeometry(cfg.n_cells, cfg.iota)
    report = diagnostics.hypocoercivity_report(grid, geom, cfg.gamma,
                                               seed=cfg.seed)
    _json_dump(report, os.path.join(out, "hypo.json"))


def _verb_weights_table(args, out):
    cfg = _load(args)
    ladder = [float(2**j) for j in range(0, 11)]
    rows = weights_table(cfg.weight, ladder)
    found = find_A(cfg.weight)
    path = os.path.join(out, "weights_table.csv")
    with open(path, "w") as fh:
        fh.write("A,K0,K1,K2,criterion\n")
        for row in rows:
            fh.write(",".join(repr(v) for v in row) + "\n")
    _json_dump({"A_star": found["A_star"], "criterion": found["criterion"],
                "succeeded": found["succeeded"]},
               os.path.join(out, "a_star.json"))


def _verb_fit(args, out):
    cfg = _load(args)
    if len(args.inputs) < 2:
        raise ConfigError("fit needs: <timeseries.csv> <column>")
    csv_path, column = args.inputs[0], args.inputs[1]
    series = records.load_timeseries(csv_path)
    if column not in series:
        raise ConfigError(f"column {column!r} not in {csv_path}")
    report = diagnostics.fit_decay(series["t"], series[column],
                                   cfg.weight, cfg.gamma)
    _json_dump(report, os.path.join(out, "fit.json"))


def _verb_plot(args, out):
    if len(args.inputs) < 2:
        raise ConfigError("plot needs: <record.json> <column> [fit.json]")
    record = records.load_record(args.inputs[0])
    column = args.inputs[1]
    overlay = None
    if len(args.inputs) > 2:
        with open(args.inputs[2]) as fh:
            overlay = diagnostics.fitted_decay_law(json.load(fh))
    records.emit_plot(record, column, os.path.join(out, f"{column}.svg"),
                      logy=True, overlay=overlay)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    handler = {"run": _verb_run, "picard": _verb_picard,
               "probe-hypo": _verb_probe, "weights-table": _verb_weights_table,
               "fit": _verb_fit, "plot": _verb_plot}[args.verb]
    try:
        handler(args, out)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericsError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

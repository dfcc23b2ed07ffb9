"""Strict INI-style run configuration.

Two sections: [run] holds every solver-level choice; [weight] the norm/decay
weight. Unknown keys are rejected with their section.key path, range checks
come from the underlying constructors, and emitting a loaded config and
re-loading it is an identity (shortest round-trip float formatting).

Minimal example:

    [run]
    gamma = 0
    mode = nonlinear
    t_end = 1.0
"""

from __future__ import annotations

from configparser import ConfigParser

from .solver import RunConfig
from .weights import WeightSpec


class ConfigError(ValueError):
    pass


def _opt_float(tok: str):
    return None if tok.strip().lower() == "none" else float(tok)


_RUN_KEYS = {
    "gamma": float, "mode": str, "t_end": float,
    "n_cells": int, "n_per_axis": int, "v_max": float, "centering": str,
    "iota0": float, "iota1": float, "cfl": float, "c_diff": float,
    "m_cutoff": _opt_float, "r_cutoff": _opt_float, "a_weight": _opt_float,
    "datum": str, "eps": float, "record_every": int,
    "ball_radius": float, "picard_n_max": int, "picard_tol": float,
    "threads": int, "seed": int,
}

_WEIGHT_KEYS = {"kind": str, "k": float, "kappa": float, "s": float,
                "k0": _opt_float}


def _parse_section(parser: ConfigParser, section: str, schema: dict) -> dict:
    out = {}
    if not parser.has_section(section):
        return out
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigError(f"unknown key [{section}] {key}")
        try:
            out[key] = schema[key](raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
    return out


def load_config(path: str) -> RunConfig:
    parser = ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    for section in parser.sections():
        if section not in ("run", "weight"):
            raise ConfigError(f"unknown section [{section}]")
    run = _parse_section(parser, "run", _RUN_KEYS)
    wkeys = _parse_section(parser, "weight", _WEIGHT_KEYS)
    for required in ("gamma", "mode", "t_end"):
        if required not in run:
            raise ConfigError(f"missing required key [run] {required}")
    weight = None
    if wkeys:
        try:
            weight = WeightSpec(gamma=run["gamma"], **wkeys)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[weight]: {exc}") from exc
    kw = dict(run)
    kw["iota"] = (kw.pop("iota0", 0.0), kw.pop("iota1", 0.0))
    kw["M"] = kw.pop("m_cutoff", None)
    kw["R"] = kw.pop("r_cutoff", None)
    kw["A"] = kw.pop("a_weight", None)
    try:
        return RunConfig(weight=weight, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[run]: {exc}") from exc


def emit_config(config: RunConfig, path: str):
    """Write every effective value; load(emit(load(c))) = load(c)."""
    lines = ["[run]"]
    lines.append(f"gamma = {config.gamma!r}")
    lines.append(f"mode = {config.mode}")
    lines.append(f"t_end = {config.t_end!r}")
    lines.append(f"n_cells = {config.n_cells}")
    lines.append(f"n_per_axis = {config.n_per_axis}")
    lines.append(f"v_max = {config.v_max!r}")
    lines.append(f"centering = {config.centering}")
    lines.append(f"iota0 = {config.iota[0]!r}")
    lines.append(f"iota1 = {config.iota[1]!r}")
    lines.append(f"cfl = {config.cfl!r}")
    lines.append(f"c_diff = {config.c_diff!r}")
    lines.append(f"m_cutoff = {'none' if config.M is None else repr(config.M)}")
    lines.append(f"r_cutoff = {'none' if config.R is None else repr(config.R)}")
    lines.append(f"a_weight = {'none' if config.A is None else repr(config.A)}")
    lines.append(f"datum = {config.datum}")
    lines.append(f"eps = {config.eps!r}")
    lines.append(f"record_every = {config.record_every}")
    lines.append(f"ball_radius = {config.ball_radius!r}")
    lines.append(f"picard_n_max = {config.picard_n_max}")
    lines.append(f"picard_tol = {config.picard_tol!r}")
    lines.append(f"threads = {config.threads}")
    lines.append(f"seed = {config.seed}")
    w = config.weight
    lines += ["", "[weight]"]
    lines.append(f"kind = {w.kind}")
    if w.kind == "polynomial":
        lines.append(f"k = {w.k!r}")
    else:
        lines.append(f"kappa = {w.kappa!r}")
        lines.append(f"s = {w.s!r}")
    lines.append(f"k0 = {w.k0!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

"""Batch experiment front end.

Parses a YAML experiment config, sweeps the interleave parameter over
repetitions (optionally in parallel), and writes plot-ready outputs:
``summary.csv`` with one aggregated row per mechanism variant, one metrics
JSON per run, a manifest tying everything to the config and master seed,
and (unless disabled) rendered summary figures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import multiprocessing
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from . import __version__
from .composite import BetaFairGsp, GspEfx, PlainGsp, Scheme
from .fair_division import Beta
from .generators import geometric_ctr, skewed_discrete, uniform_grid
from .model import AuctionInstance, Group, validate_instance
from .simulation import (
    Discrete,
    Distributions,
    RunMetrics,
    metrics_to_dict,
    run_dynamic,
    validate_distributions,
    write_round_logs_csv,
)

MECHANISMS = ("gsp", "beta-fair", "gsp-efx")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment: every default filled in."""

    name: str
    out_dir: str
    seed: int
    repetitions: int
    rounds: int
    threads: int
    mechanism: str
    plots: bool
    xi_l: int
    xi_h_sweep: tuple[int, ...]
    gsp_baseline: bool
    efx_beta: float
    n_bidders: int
    n_slots: int
    majority_count: int
    value_grid: tuple[float, ...]
    bid_grid: tuple[float, ...]
    ctr_h: tuple[float, ...]
    ctr_l: tuple[float, ...]
    quality_values: tuple[tuple[float, float], ...]
    quality_probs: tuple[float, ...]
    value_probs: tuple[tuple[tuple[float, float], ...], ...]
    track_counterfactuals: bool
    keep_round_logs: bool


def _require_mapping(node: Any, field: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigError(field, "expected a mapping")
    return node


def _check_keys(node: Mapping, field: str, allowed: Sequence[str]) -> None:
    unknown = set(node) - set(allowed)
    if unknown:
        raise ConfigError(field, f"unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")


def _positive_int(node: Mapping, key: str, default: int, field: str) -> int:
    x = node.get(key, default)
    if not isinstance(x, int) or isinstance(x, bool) or x < 1:
        raise ConfigError(f"{field}.{key}", f"expected a positive integer, got {x!r}")
    return x


def _parse_grid(node: Any, field: str) -> tuple[float, ...]:
    if isinstance(node, (list, tuple)):
        grid = tuple(float(x) for x in node)
    elif isinstance(node, dict):
        _check_keys(node, field, ("points", "low", "high"))
        points = _positive_int(node, "points", 101, field)
        grid = uniform_grid(float(node.get("low", 0.0)), float(node.get("high", 1.0)), points)
    else:
        raise ConfigError(field, "expected a list of values or {points, low, high}")
    if len(grid) < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(field, "grid must be strictly ascending")
    if grid[0] < 0.0:
        raise ConfigError(field, "grid values must be nonnegative")
    return grid


def _fit_curve(curve: Sequence[float], n_slots: int, field: str) -> tuple[float, ...]:
    """Pad a curve with trailing zeros (or truncate) to the slot count."""
    curve = tuple(float(x) for x in curve)
    if any(x < 0.0 or x > 1.0 for x in curve):
        raise ConfigError(field, "click-through rates must lie in [0, 1]")
    if any(a < b for a, b in zip(curve, curve[1:])):
        raise ConfigError(field, "click-through rates must be nonincreasing")
    if len(curve) < n_slots:
        curve = curve + (0.0,) * (n_slots - len(curve))
    return curve[:n_slots]


def load_discount_curves(path: str | Path) -> dict[Group, tuple[float, ...]]:
    """Read per-group click-through curves from a CSV with columns
    slot, group, ctr; each group's curve is normalized by its maximum."""
    path = Path(path)
    rows: dict[Group, dict[int, float]] = {Group.H: {}, Group.L: {}}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"slot", "group", "ctr"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise ConfigError(str(path), f"curve file needs columns {sorted(needed)}")
        for line, row in enumerate(reader, start=2):
            try:
                slot = int(row["slot"])
                value = float(row["ctr"])
                group = Group(row["group"].strip().upper())
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{path}:{line}", f"bad curve row: {exc}") from exc
            if slot in rows[group]:
                raise ConfigError(f"{path}:{line}", f"duplicate slot {slot} for group {group.value}")
            if value < 0.0:
                raise ConfigError(f"{path}:{line}", "ctr cannot be negative")
            rows[group][slot] = value
    curves = {}
    for group, entries in rows.items():
        if not entries:
            raise ConfigError(str(path), f"no rows for group {group.value}")
        ordered = [entries[s] for s in sorted(entries)]
        top = max(ordered)
        if top <= 0.0:
            raise ConfigError(str(path), f"curve for group {group.value} is all zero")
        ordered = [x / top for x in ordered]
        if any(a < b for a, b in zip(ordered, ordered[1:])):
            raise ConfigError(str(path), f"curve for group {group.value} is not monotone")
        curves[group] = tuple(ordered)
    return curves


def load_value_distributions(path: str | Path) -> dict[Any, Discrete]:
    """Read value distributions from a CSV with columns value, probability,
    and either a bidder index column or a group column. Probability columns
    off by at most 1% are renormalized; anything further off is rejected."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = set(reader.fieldnames or ())
        if not {"value", "probability"}.issubset(fields):
            raise ConfigError(str(path), "value file needs columns value, probability")
        if "bidder" in fields:
            key_col = "bidder"
        elif "group" in fields:
            key_col = "group"
        else:
            raise ConfigError(str(path), "value file needs a bidder or group column")
        table: dict[Any, list[tuple[float, float]]] = {}
        for line, row in enumerate(reader, start=2):
            try:
                key = int(row["bidder"]) if key_col == "bidder" else Group(row["group"].strip().upper())
                pair = (float(row["value"]), float(row["probability"]))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{path}:{line}", f"bad value row: {exc}") from exc
            table.setdefault(key, []).append(pair)
    dists = {}
    for key, pairs in table.items():
        total = sum(p for _, p in pairs)
        if abs(total - 1.0) > 0.01:
            raise ConfigError(str(path), f"probabilities for {key!r} sum to {total}, not within 1% of 1")
        dists[key] = Discrete(
            tuple(v for v, _ in pairs), tuple(p / total for _, p in pairs)
        )
    return dists


def _parse_group_dist(node: Any, grid: tuple[float, ...], field: str) -> Discrete:
    node = _require_mapping(node, field)
    _check_keys(node, field, ("point_mass", "skewed", "values", "probs"))
    if "point_mass" in node:
        v = float(node["point_mass"])
        if not any(abs(v - g) <= 1e-12 for g in grid):
            raise ConfigError(field, f"point mass {v} is not on the value grid")
        return Discrete((v,), (1.0,))
    if "skewed" in node:
        return skewed_discrete(grid, float(node["skewed"]))
    if "values" in node or "probs" in node:
        values = tuple(float(v) for v in node.get("values", ()))
        probs = tuple(float(p) for p in node.get("probs", ()))
        for v in values:
            if not any(abs(v - g) <= 1e-12 for g in grid):
                raise ConfigError(field, f"value {v} is not on the value grid")
        try:
            return Discrete(values, probs)
        except ValueError as exc:
            raise ConfigError(field, str(exc)) from exc
    raise ConfigError(field, "give one of point_mass, skewed, values/probs")


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Parse and validate an experiment config, resolving all defaults.

    Keyword overrides (seed, out, mechanism, threads) replace the file's
    values; they exist for the command-line flags.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"file not found: {path}")
    base = path.parent
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("config", f"cannot parse: {exc}") from exc
    raw = _require_mapping(raw, "config")
    _check_keys(
        raw,
        "config",
        (
            "name", "out", "seed", "repetitions", "rounds", "threads", "mechanism",
            "plots", "sweep", "efx_beta", "instance", "distributions", "simulation",
        ),
    )

    name = str(raw.get("name", "experiment"))
    seed = overrides.get("seed")
    if seed is None:
        seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed", f"expected a nonnegative integer, got {seed!r}")
    out_dir = overrides.get("out") or raw.get("out") or f"results/{name}"
    mechanism = overrides.get("mechanism") or raw.get("mechanism", "beta-fair")
    if mechanism not in MECHANISMS:
        raise ConfigError("mechanism", f"expected one of {MECHANISMS}, got {mechanism!r}")
    threads = overrides.get("threads")
    if threads is None:
        threads = raw.get("threads", 1)
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        raise ConfigError("threads", f"expected a positive integer, got {threads!r}")
    repetitions = _positive_int(raw, "repetitions", 20, "config")
    rounds = _positive_int(raw, "rounds", 10_000, "config")
    plots = bool(raw.get("plots", True))
    efx_beta = float(raw.get("efx_beta", 1.0))
    if not 0.0 < efx_beta <= 1.0:
        raise ConfigError("efx_beta", f"expected a value in (0, 1], got {efx_beta}")

    sweep = _require_mapping(raw.get("sweep"), "sweep")
    _check_keys(sweep, "sweep", ("xi_l", "xi_h", "gsp_baseline"))
    xi_l = _positive_int(sweep, "xi_l", 1, "sweep")
    xi_h_raw = sweep.get("xi_h", list(range(1, 9)))
    if isinstance(xi_h_raw, int) and not isinstance(xi_h_raw, bool):
        xi_h_raw = [xi_h_raw]
    if not isinstance(xi_h_raw, (list, tuple)) or not xi_h_raw:
        raise ConfigError("sweep.xi_h", "expected an integer or a nonempty list")
    xi_h_sweep = []
    for k, x in enumerate(xi_h_raw):
        if not isinstance(x, int) or isinstance(x, bool) or x < 1:
            raise ConfigError(f"sweep.xi_h[{k}]", f"expected a positive integer, got {x!r}")
        if x < xi_l:
            raise ConfigError(f"sweep.xi_h[{k}]", f"xi_h={x} must be >= xi_l={xi_l}")
        xi_h_sweep.append(x)
    gsp_baseline = bool(sweep.get("gsp_baseline", True))

    inst_node = _require_mapping(raw.get("instance"), "instance")
    _check_keys(
        inst_node,
        "instance",
        ("bidders", "slots", "majority", "value_grid", "bid_grid", "ctr", "quality"),
    )
    n_bidders = _positive_int(inst_node, "bidders", 20, "instance")
    n_slots = _positive_int(inst_node, "slots", n_bidders, "instance")
    if n_slots < n_bidders:
        raise ConfigError("instance.slots", "cannot have fewer slots than bidders")
    majority = inst_node.get("majority", n_bidders // 2)
    if not isinstance(majority, int) or isinstance(majority, bool) or not 0 <= majority <= n_bidders:
        raise ConfigError("instance.majority", f"expected an integer in [0, {n_bidders}]")
    value_grid = _parse_grid(inst_node.get("value_grid", {"points": 101}), "instance.value_grid")
    bid_grid = (
        value_grid
        if inst_node.get("bid_grid") is None
        else _parse_grid(inst_node["bid_grid"], "instance.bid_grid")
    )
    if max(bid_grid) < max(value_grid) - 1e-12:
        raise ConfigError("instance.bid_grid", "bid grid must reach at least the top type value")

    ctr_node = _require_mapping(inst_node.get("ctr"), "instance.ctr")
    _check_keys(ctr_node, "instance.ctr", ("h", "l", "file"))
    if "file" in ctr_node:
        p = base / str(ctr_node["file"])
        if not p.exists():
            raise ConfigError("instance.ctr.file", f"file not found: {p}")
        curves = load_discount_curves(p)
        ctr_h = _fit_curve(curves[Group.H], n_slots, "instance.ctr.file")
        ctr_l = _fit_curve(curves[Group.L], n_slots, "instance.ctr.file")
    else:
        # Default curves model two conversion types: the majority's clicks
        # decay quickly down the page, the minority's barely at all.
        ctr_h = _fit_curve(
            ctr_node.get("h", geometric_ctr(n_slots, 0.90)), n_slots, "instance.ctr.h"
        )
        ctr_l = _fit_curve(
            ctr_node.get("l", geometric_ctr(n_slots, 0.995)), n_slots, "instance.ctr.l"
        )

    quality_node = inst_node.get("quality", [{"h": 1.0, "l": 1.0, "prob": 1.0}])
    if isinstance(quality_node, dict):
        quality_node = [dict(quality_node, prob=1.0)]
    if not isinstance(quality_node, list) or not quality_node:
        raise ConfigError("instance.quality", "expected a mapping or a list of {h, l, prob}")
    quality_values = []
    quality_probs = []
    for k, entry in enumerate(quality_node):
        entry = _require_mapping(entry, f"instance.quality[{k}]")
        _check_keys(entry, f"instance.quality[{k}]", ("h", "l", "prob"))
        pair = (float(entry.get("h", 1.0)), float(entry.get("l", 1.0)))
        if any(not 0.0 < g <= 1.0 for g in pair):
            raise ConfigError(f"instance.quality[{k}]", "quality factors must lie in (0, 1]")
        quality_values.append(pair)
        quality_probs.append(float(entry.get("prob", 1.0)))
    total = sum(quality_probs)
    if total <= 0:
        raise ConfigError("instance.quality", "probabilities must be positive")
    quality_probs = [p / total for p in quality_probs]

    dist_node = _require_mapping(raw.get("distributions"), "distributions")
    _check_keys(dist_node, "distributions", ("majority", "minority", "file"))
    per_bidder: list[Discrete | None] = [None] * n_bidders
    if "file" in dist_node:
        p = base / str(dist_node["file"])
        if not p.exists():
            raise ConfigError("distributions.file", f"file not found: {p}")
        table = load_value_distributions(p)
        for key, dist in table.items():
            for v in dist.values:
                if not any(abs(v - g) <= 1e-12 for g in value_grid):
                    raise ConfigError("distributions.file", f"value {v} is not on the value grid")
            if isinstance(key, Group):
                members = range(majority) if key is Group.H else range(majority, n_bidders)
                for i in members:
                    per_bidder[i] = dist
            else:
                if not 0 <= key < n_bidders:
                    raise ConfigError("distributions.file", f"bidder index {key} out of range")
                per_bidder[key] = dist
    majority_default = {"point_mass": max(value_grid)}
    minority_default = {"skewed": 0.9}
    majority_dist = _parse_group_dist(
        dist_node.get("majority", majority_default), value_grid, "distributions.majority"
    )
    minority_dist = _parse_group_dist(
        dist_node.get("minority", minority_default), value_grid, "distributions.minority"
    )
    for i in range(n_bidders):
        if per_bidder[i] is None:
            per_bidder[i] = majority_dist if i < majority else minority_dist

    sim_node = _require_mapping(raw.get("simulation"), "simulation")
    _check_keys(sim_node, "simulation", ("track_counterfactuals", "keep_round_logs"))

    value_probs = tuple(
        tuple(zip(d.values, d.probs)) for d in per_bidder  # type: ignore[union-attr]
    )
    return ExperimentConfig(
        name=name,
        out_dir=str(out_dir),
        seed=seed,
        repetitions=repetitions,
        rounds=rounds,
        threads=threads,
        mechanism=mechanism,
        plots=plots,
        xi_l=xi_l,
        xi_h_sweep=tuple(xi_h_sweep),
        gsp_baseline=gsp_baseline,
        efx_beta=efx_beta,
        n_bidders=n_bidders,
        n_slots=n_slots,
        majority_count=majority,
        value_grid=value_grid,
        bid_grid=bid_grid,
        ctr_h=ctr_h,
        ctr_l=ctr_l,
        quality_values=tuple(quality_values),
        quality_probs=tuple(quality_probs),
        value_probs=value_probs,
        track_counterfactuals=bool(sim_node.get("track_counterfactuals", False)),
        keep_round_logs=bool(sim_node.get("keep_round_logs", False)),
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Normalized, JSON-safe echo of a resolved config."""
    return {
        "name": cfg.name,
        "out": cfg.out_dir,
        "seed": cfg.seed,
        "repetitions": cfg.repetitions,
        "rounds": cfg.rounds,
        "threads": cfg.threads,
        "mechanism": cfg.mechanism,
        "plots": cfg.plots,
        "sweep": {"xi_l": cfg.xi_l, "xi_h": list(cfg.xi_h_sweep), "gsp_baseline": cfg.gsp_baseline},
        "efx_beta": cfg.efx_beta,
        "instance": {
            "bidders": cfg.n_bidders,
            "slots": cfg.n_slots,
            "majority": cfg.majority_count,
            "value_grid": list(cfg.value_grid),
            "bid_grid": list(cfg.bid_grid),
            "ctr": {"h": list(cfg.ctr_h), "l": list(cfg.ctr_l)},
            "quality": [
                {"h": pair[0], "l": pair[1], "prob": p}
                for pair, p in zip(cfg.quality_values, cfg.quality_probs)
            ],
        },
        "distributions": {
            f"bidder{i}": [[v, p] for v, p in pairs]
            for i, pairs in enumerate(cfg.value_probs)
        },
        "simulation": {
            "track_counterfactuals": cfg.track_counterfactuals,
            "keep_round_logs": cfg.keep_round_logs,
        },
    }


def build_instance(cfg: ExperimentConfig) -> AuctionInstance:
    """Assemble the market; missing bidders become zero-type dummies in L."""
    pad = cfg.n_slots - cfg.n_bidders
    groups = tuple(
        Group.H if i < cfg.majority_count else Group.L for i in range(cfg.n_bidders)
    ) + (Group.L,) * pad
    bid_grids = (cfg.bid_grid,) * cfg.n_bidders + ((0.0,),) * pad
    type_grids = (cfg.value_grid,) * cfg.n_bidders + ((0.0,),) * pad
    return AuctionInstance(
        group_of=groups,
        ctr={Group.H: cfg.ctr_h, Group.L: cfg.ctr_l},
        quality={Group.H: cfg.quality_values[0][0], Group.L: cfg.quality_values[0][1]},
        bid_grids=bid_grids,
        type_grids=type_grids,
    )


def build_distributions(cfg: ExperimentConfig) -> Distributions:
    pad = cfg.n_slots - cfg.n_bidders
    dists = tuple(
        Discrete(tuple(v for v, _ in pairs), tuple(p for _, p in pairs))
        for pairs in cfg.value_probs
    ) + (Discrete((0.0,), (1.0,)),) * pad
    return Distributions(
        value_dists=dists,
        quality_dist=Discrete(cfg.quality_values, cfg.quality_probs),
    )


@dataclass(frozen=True)
class Variant:
    mechanism: str
    xi_h: int | None

    def scheme(self, cfg: ExperimentConfig) -> Scheme:
        if self.mechanism == "gsp":
            return PlainGsp()
        if self.mechanism == "beta-fair":
            return BetaFairGsp(Beta(self.xi_h, cfg.xi_l))
        return GspEfx(cfg.efx_beta)

    def beta_value(self, cfg: ExperimentConfig) -> float | None:
        if self.mechanism == "beta-fair":
            return cfg.xi_l / self.xi_h
        if self.mechanism == "gsp-efx":
            return cfg.efx_beta
        return None


def plan_variants(cfg: ExperimentConfig) -> list[Variant]:
    variants = []
    if cfg.mechanism == "gsp" or cfg.gsp_baseline:
        variants.append(Variant("gsp", None))
    if cfg.mechanism == "beta-fair":
        variants += [Variant("beta-fair", x) for x in cfg.xi_h_sweep]
    elif cfg.mechanism == "gsp-efx":
        variants.append(Variant("gsp-efx", None))
    return variants


def _task_seed(master_seed: int, task_index: int) -> int:
    return int(np.random.SeedSequence(master_seed, spawn_key=(2, task_index)).generate_state(1)[0])


def _run_task(args):
    inst, dists, scheme, rounds, seed, track, keep_logs = args
    logs, metrics = run_dynamic(
        inst,
        dists,
        scheme,
        rounds,
        seed,
        track_counterfactuals=track,
        keep_logs=keep_logs,
    )
    return metrics, (logs if keep_logs else None)


SUMMARY_COLUMNS = [
    "mechanism", "xi_h", "xi_l", "beta", "repetitions", "rounds",
    "sw_opt_mean", "sw_opt_std", "sw_eq_mean", "sw_eq_std",
    "sw_eq_h_mean", "sw_eq_h_std", "sw_eq_l_mean", "sw_eq_l_std",
    "comp_fraction_mean", "comp_fraction_std",
]


def _mean_std(xs: Sequence[float]) -> tuple[float, float]:
    mean = sum(xs) / len(xs)
    std = statistics.stdev(xs) if len(xs) > 1 else 0.0
    return mean, std


def _summary_row(
    cfg: ExperimentConfig, variant: Variant, metrics: Sequence[RunMetrics]
) -> list:
    sw_opt = _mean_std([m.sw_opt for m in metrics])
    sw_eq = _mean_std([m.sw_fair for m in metrics])
    sw_h = _mean_std([m.sw_fair_h for m in metrics])
    sw_l = _mean_std([m.sw_fair_l for m in metrics])
    frac = _mean_std([m.budget_fraction for m in metrics])
    beta = variant.beta_value(cfg)
    return [
        variant.mechanism,
        "" if variant.xi_h is None else variant.xi_h,
        "" if variant.mechanism == "gsp" else cfg.xi_l,
        "" if beta is None else beta,
        len(metrics),
        cfg.rounds,
        sw_opt[0], sw_opt[1], sw_eq[0], sw_eq[1],
        sw_h[0], sw_h[1], sw_l[0], sw_l[1],
        frac[0], frac[1],
    ]


def run_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Execute the full sweep and write all output files.

    Returns the written paths. On any failure the partial outputs are
    removed before the error propagates.
    """
    inst = build_instance(cfg)
    dists = build_distributions(cfg)
    problems = validate_instance(inst) + validate_distributions(inst, dists)
    if problems:
        raise ConfigError("instance", "; ".join(problems))

    variants = plan_variants(cfg)
    tasks = []
    task_meta = []
    for variant in variants:
        scheme = variant.scheme(cfg)
        for rep in range(cfg.repetitions):
            k = len(tasks)
            seed = _task_seed(cfg.seed, k)
            tasks.append(
                (inst, dists, scheme, cfg.rounds, seed,
                 cfg.track_counterfactuals, cfg.keep_round_logs)
            )
            task_meta.append({"run": k, "mechanism": variant.mechanism,
                              "xi_h": variant.xi_h, "rep": rep, "seed": seed})

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        if cfg.threads > 1:
            with multiprocessing.Pool(cfg.threads) as pool:
                results = pool.map(_run_task, tasks)
        else:
            results = [_run_task(t) for t in tasks]

        for meta, (metrics, logs) in zip(task_meta, results):
            run_path = out / f"run_{meta['run']:03d}.json"
            payload = dict(meta)
            payload["metrics"] = metrics_to_dict(metrics)
            with open(run_path, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
            written.append(run_path)
            if logs is not None:
                rounds_path = out / f"rounds_{meta['run']:03d}.csv"
                write_round_logs_csv(rounds_path, logs)
                written.append(rounds_path)

        summary_path = out / "summary.csv"
        with open(summary_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SUMMARY_COLUMNS)
            idx = 0
            for variant in variants:
                run_metrics = [results[idx + r][0] for r in range(cfg.repetitions)]
                writer.writerow(_summary_row(cfg, variant, run_metrics))
                idx += cfg.repetitions
        written.append(summary_path)

        if cfg.plots:
            from .plotting import render_summary_figures

            written += render_summary_figures(summary_path, out)

        config_dict = config_to_dict(cfg)
        config_json = json.dumps(config_dict, sort_keys=True)
        manifest = {
            "name": cfg.name,
            "code_version": __version__,
            "master_seed": cfg.seed,
            "config": config_dict,
            "config_sha256": hashlib.sha256(config_json.encode()).hexdigest(),
            "runs": task_meta,
            "files": sorted(p.name for p in written) + ["manifest.json"],
        }
        manifest_path = out / "manifest.json"
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(manifest_path)
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written


class _Parser(argparse.ArgumentParser):
    # Flag mistakes are validation failures (exit code 1), not runtime ones.
    def error(self, message):
        raise ConfigError("args", message)


def main(argv: Sequence[str] | None = None) -> int:
    parser = _Parser(prog="fairgsp", description="Fair sponsored-search auction experiments")
    parser.add_argument("--config", required=True, help="experiment YAML file")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--mechanism", choices=MECHANISMS, help="override the mechanism")
    parser.add_argument("--threads", type=int, help="worker processes for the sweep")
    parser.add_argument("--dry-run", action="store_true", help="validate and echo the config")
    try:
        args = parser.parse_args(argv)
        cfg = load_config(
            args.config,
            seed=args.seed,
            out=args.out,
            mechanism=args.mechanism,
            threads=args.threads,
        )
        if args.dry_run:
            inst = build_instance(cfg)
            dists = build_distributions(cfg)
            problems = validate_instance(inst) + validate_distributions(inst, dists)
            if problems:
                raise ConfigError("instance", "; ".join(problems))
            print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
            return 0
    except ConfigError as exc:
        print(f"fairgsp: {exc}", file=sys.stderr)
        return 1
    try:
        files = run_experiment(cfg)
    except ConfigError as exc:
        print(f"fairgsp: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"fairgsp: run failed: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(files)} files to {cfg.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

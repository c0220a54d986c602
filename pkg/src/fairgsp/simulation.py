"""Repeated-auction dynamics: type draws, learner bids, mechanism runs,
bandit feedback, per-round logs, and equilibrium metrics."""

from __future__ import annotations

import bisect
import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .bandits import (
    DEFAULT_LEARNING_RATE,
    RegretLedger,
    bayesian_learner,
    default_reward_scale,
    regret,
)
from .composite import (
    BetaFairGsp,
    CompositeResult,
    PlainGsp,
    Scheme,
    compose,
    mechanism_of,
)
from .fair_division import envy_partition, fill_partition, group_orders, interleave_orders
from .gsp import allocate_gsp, greedy_assignment, greedy_payments, social_welfare_by_group
from .model import TOL, AuctionInstance, Group, utility, validate_instance


@dataclass(frozen=True)
class Discrete:
    """Finite distribution over arbitrary values (grid points, pairs, tuples)."""

    values: tuple
    probs: tuple[float, ...]
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        values = tuple(self.values)
        probs = tuple(float(p) for p in self.probs)
        if not values or len(values) != len(probs):
            raise ValueError("need one probability per value")
        if any(p < 0.0 for p in probs):
            raise ValueError("probabilities cannot be negative")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1 within 1e-9")
        cum = []
        acc = 0.0
        for p in probs:
            acc += p
            cum.append(acc)
        cum[-1] = 1.0
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_cum", tuple(cum))

    def sample(self, rng: np.random.Generator):
        return self.values[bisect.bisect_right(self._cum, rng.random())]

    def prob_of(self, value) -> float:
        for v, p in zip(self.values, self.probs):
            if v == value:
                return p
        return 0.0


POINT_MASS_QUALITY = Discrete(((1.0, 1.0),), (1.0,))


@dataclass(frozen=True)
class Distributions:
    """Type and quality-factor environment for a dynamic.

    Types come either as independent per-bidder distributions
    (``value_dists``) or as one joint table over full type profiles
    (``joint_values``). Quality factors are a finite table over
    (gamma_H, gamma_L) pairs, defaulting to the point mass at (1, 1).
    """

    value_dists: tuple[Discrete, ...] | None = None
    joint_values: Discrete | None = None
    quality_dist: Discrete = POINT_MASS_QUALITY

    def __post_init__(self) -> None:
        if (self.value_dists is None) == (self.joint_values is None):
            raise ValueError("provide exactly one of value_dists or joint_values")
        if self.value_dists is not None:
            object.__setattr__(self, "value_dists", tuple(self.value_dists))

    @property
    def n_bidders(self) -> int:
        if self.value_dists is not None:
            return len(self.value_dists)
        return len(self.joint_values.values[0])

    def sample_values(self, rng: np.random.Generator) -> tuple[float, ...]:
        if self.joint_values is not None:
            return tuple(self.joint_values.sample(rng))
        return tuple(d.sample(rng) for d in self.value_dists)

    def marginal(self, i: int) -> dict[float, float]:
        """Bidder i's type distribution."""
        if self.value_dists is not None:
            d = self.value_dists[i]
            return dict(zip(d.values, d.probs))
        out: dict[float, float] = {}
        for profile, p in zip(self.joint_values.values, self.joint_values.probs):
            out[profile[i]] = out.get(profile[i], 0.0) + p
        return out


def validate_distributions(inst: AuctionInstance, dists: Distributions) -> list[str]:
    problems = []
    if dists.n_bidders != inst.n_bidders:
        return [f"distributions cover {dists.n_bidders} bidders, instance has {inst.n_bidders}"]
    for i in range(inst.n_bidders):
        grid = inst.type_grids[i]
        for v in dists.marginal(i):
            if not any(abs(v - g) <= TOL for g in grid):
                problems.append(f"type {v} not on the grid of bidder {i}")
    for pair in dists.quality_dist.values:
        if len(pair) != 2:
            problems.append(f"quality entry {pair!r} is not a (gamma_H, gamma_L) pair")
        elif any(not (0.0 < g <= 1.0 + TOL) for g in pair):
            problems.append(f"quality entry {pair!r} outside (0, 1]")
    return problems


@dataclass(frozen=True)
class RoundLog:
    """Everything one auction round realized."""

    t: int
    types: tuple[float, ...]
    qualities: tuple[float, float]
    bids: tuple[float, ...]
    composite_result: CompositeResult
    utilities: tuple[float, ...]


@dataclass(frozen=True)
class RunMetrics:
    """Aggregates of one dynamic.

    Welfare fields are per-round means; ``sw_opt`` is the auction's welfare
    when every bidder reports its realized type, recomputed on each round's
    draw. Series are keyed by round checkpoints (powers of ten, plus the
    final round).
    """

    rounds: int
    mechanism: str
    sw_opt: float
    sw_opt_h: float
    sw_opt_l: float
    sw_gsp: float
    sw_gsp_h: float
    sw_gsp_l: float
    sw_fair: float
    sw_fair_h: float
    sw_fair_l: float
    revenue_total: float
    compensation_total: float
    budget_fraction: float
    budget_fraction_series: Mapping[int, float]
    regret_per_round_series: Mapping[int, tuple[float, ...]]
    bcce_gaps: tuple[Mapping[float, float], ...] | None
    reward_scales: tuple[float, ...]
    assumption1_frequency: float
    assumption2_frequency: float
    poc: float | None


def decade_checkpoints(rounds: int) -> tuple[int, ...]:
    marks = []
    c = 1
    while c <= rounds:
        marks.append(c)
        c *= 10
    if marks[-1] != rounds:
        marks.append(rounds)
    return tuple(marks)


def instance_with_quality(
    inst: AuctionInstance, qualities: tuple[float, float]
) -> AuctionInstance:
    if (inst.quality[Group.H], inst.quality[Group.L]) == qualities:
        return inst
    return dataclasses.replace(
        inst, quality={Group.H: qualities[0], Group.L: qualities[1]}
    )


def _composite_slot_and_payment(
    inst: AuctionInstance, bids: Sequence[float], i: int, scheme: Scheme
) -> tuple[int, float]:
    """Bidder i's final slot and payment, skipping all reporting overhead.

    Must stay behaviorally identical to compose(); the cross-oracle tests
    hold the two paths together.
    """
    gamma_of, ctr_of = inst.gamma_of, inst.ctr_of
    assignment = greedy_assignment(gamma_of, ctr_of, bids)
    payments = greedy_payments(gamma_of, ctr_of, bids, assignment)
    if isinstance(scheme, PlainGsp):
        return assignment.index(i), payments[i]
    order_h, order_l = group_orders(inst.group_of, assignment)
    if isinstance(scheme, BetaFairGsp):
        final = interleave_orders(
            order_h, order_l, inst.n_slots, scheme.beta.xi_h, scheme.beta.xi_l
        )
    else:
        # Within a group the auction order is already descending in bid.
        slots_h, slots_l = envy_partition(
            inst.ctr[Group.H],
            inst.ctr[Group.L],
            inst.quality[Group.H],
            inst.quality[Group.L],
            [bids[k] for k in order_h],
            [bids[k] for k in order_l],
            inst.n_slots,
            scheme.beta_value,
        )
        final = fill_partition(order_h, order_l, slots_h, slots_l, inst.n_slots)
    old = assignment.index(i)
    new = final.index(i)
    pay = payments[i]
    if new > old:
        curve = ctr_of[i]
        pay -= 2.0 * bids[i] * gamma_of[i] * (curve[old] - curve[new])
    return new, pay


def counterfactual_utilities(
    inst: AuctionInstance,
    bids: Sequence[float],
    vals: Sequence[float],
    scheme: Scheme,
) -> list[list[float]]:
    """For each bidder, the utility every grid bid would have earned against
    the realized opponent bids, under the same mechanism."""
    rows = []
    work = list(bids)
    for i in range(inst.n_bidders):
        keep = work[i]
        gamma = inst.gamma_of[i]
        curve = inst.ctr_of[i]
        v = vals[i]
        row = []
        for b in inst.bid_grids[i]:
            work[i] = b
            slot, pay = _composite_slot_and_payment(inst, work, i, scheme)
            row.append(curve[slot] * gamma * v - pay)
        work[i] = keep
        rows.append(row)
    return rows


def run_dynamic(
    inst: AuctionInstance,
    dists: Distributions,
    scheme: Scheme,
    rounds: int,
    seed: int,
    *,
    track_counterfactuals: bool = True,
    keep_logs: bool = True,
    learning_rate: float = DEFAULT_LEARNING_RATE,
) -> tuple[list[RoundLog], RunMetrics]:
    """Run the repeated auction for ``rounds`` rounds.

    Per round: draw a type profile and quality pair, let every bidder's
    learner pick a bid for its realized type, run the mechanism, feed each
    learner its own realized utility, and (optionally) record the
    full-information counterfactual utilities in the regret ledger.

    Bidders never observe the quality factors; one master ``seed`` fixes
    the environment stream and every learner stream, so equal seeds give
    identical runs.
    """
    problems = validate_instance(inst) + validate_distributions(inst, dists)
    if problems:
        raise ValueError("; ".join(problems))
    n = inst.n_bidders
    env_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    learners = [
        bayesian_learner(inst, i, dists.marginal(i), rounds, seed, learning_rate)
        for i in range(n)
    ]
    ledger = RegretLedger(inst.bid_grids)
    marks = decade_checkpoints(rounds)
    mark_set = set(marks)

    quality_cache: dict[tuple[float, float], AuctionInstance] = {}

    def with_quality(pair: tuple[float, float]) -> AuctionInstance:
        cached = quality_cache.get(pair)
        if cached is None:
            cached = quality_cache[pair] = instance_with_quality(inst, pair)
        return cached

    sw = {key: 0.0 for key in ("opt", "opt_h", "opt_l", "gsp", "gsp_h", "gsp_l",
                               "fair", "fair_h", "fair_l")}
    revenue_total = 0.0
    compensation_total = 0.0
    a1_rounds = 0
    a2_rounds = 0
    logs: list[RoundLog] = []
    budget_series: dict[int, float] = {}
    regret_series: dict[int, tuple[float, ...]] = {}

    for t in range(1, rounds + 1):
        vals = dists.sample_values(env_rng)
        pair = dists.quality_dist.sample(env_rng)
        inst_t = with_quality(pair)
        bids = tuple(learner.act(v) for learner, v in zip(learners, vals))
        res = compose(inst_t, bids, scheme)
        utils = tuple(utility(inst_t, res.fair_outcome, vals, i) for i in range(n))
        for learner, u in zip(learners, utils):
            learner.feed(u)
        if track_counterfactuals:
            cf = counterfactual_utilities(inst_t, bids, vals, scheme)
            for i in range(n):
                ledger.record(i, vals[i], utils[i], cf[i])

        truthful_out = allocate_gsp(inst_t, vals)
        opt_g = social_welfare_by_group(inst_t, truthful_out, vals)
        gsp_g = social_welfare_by_group(inst_t, res.gsp_outcome, vals)
        fair_g = social_welfare_by_group(inst_t, res.fair_outcome, vals)
        sw["opt_h"] += opt_g[Group.H]
        sw["opt_l"] += opt_g[Group.L]
        sw["gsp_h"] += gsp_g[Group.H]
        sw["gsp_l"] += gsp_g[Group.L]
        sw["fair_h"] += fair_g[Group.H]
        sw["fair_l"] += fair_g[Group.L]
        revenue_total += sum(res.gsp_outcome.payments)
        compensation_total += sum(res.compensation)
        a1_rounds += res.assumption_minority_value
        a2_rounds += res.assumption_top_slot

        if keep_logs:
            logs.append(RoundLog(t, tuple(vals), pair, bids, res, utils))
        if t in mark_set:
            if revenue_total > TOL:
                budget_series[t] = compensation_total / revenue_total
            else:
                budget_series[t] = 0.0 if compensation_total <= TOL else math.inf
            if track_counterfactuals:
                regret_series[t] = tuple(regret(ledger, i) / t for i in range(n))

    for key in ("opt", "gsp", "fair"):
        sw[key] = sw[f"{key}_h"] + sw[f"{key}_l"]

    bcce = None
    if track_counterfactuals:
        bcce = tuple(
            {
                v: (max(ledger.counterfactual_sums(i, v)) - ledger.played_sum(i, v))
                / ledger.visits(i, v)
                for v in ledger.types_seen(i)
            }
            for i in range(n)
        )

    sw_opt_mean = sw["opt"] / rounds
    sw_fair_mean = sw["fair"] / rounds
    metrics = RunMetrics(
        rounds=rounds,
        mechanism=mechanism_of(scheme).value,
        sw_opt=sw_opt_mean,
        sw_opt_h=sw["opt_h"] / rounds,
        sw_opt_l=sw["opt_l"] / rounds,
        sw_gsp=sw["gsp"] / rounds,
        sw_gsp_h=sw["gsp_h"] / rounds,
        sw_gsp_l=sw["gsp_l"] / rounds,
        sw_fair=sw_fair_mean,
        sw_fair_h=sw["fair_h"] / rounds,
        sw_fair_l=sw["fair_l"] / rounds,
        revenue_total=revenue_total,
        compensation_total=compensation_total,
        budget_fraction=budget_series[marks[-1]],
        budget_fraction_series=budget_series,
        regret_per_round_series=regret_series,
        bcce_gaps=bcce,
        reward_scales=tuple(default_reward_scale(inst, i) for i in range(n)),
        assumption1_frequency=a1_rounds / rounds,
        assumption2_frequency=a2_rounds / rounds,
        poc=(sw_fair_mean / sw_opt_mean) if sw_opt_mean > TOL else None,
    )
    return logs, metrics


def bcce_gap(
    logs: Sequence[RoundLog], inst: AuctionInstance
) -> list[dict[float, float]]:
    """Best type-conditional fixed-bid deviation gain, averaged over the
    rounds where the type was drawn.

    Recomputes every counterfactual by replaying the mechanism on the
    logged draws; independent of the regret ledger kept during the run.
    At an exact equilibrium every gap is nonpositive. Types never drawn
    are absent from the result.
    """
    if not logs:
        raise ValueError("empty log")
    scheme = logs[0].composite_result.scheme
    n = inst.n_bidders
    acc: list[dict[float, list]] = [{} for _ in range(n)]
    quality_cache: dict[tuple[float, float], AuctionInstance] = {}
    for log in logs:
        inst_t = quality_cache.get(log.qualities)
        if inst_t is None:
            inst_t = quality_cache[log.qualities] = instance_with_quality(inst, log.qualities)
        work = list(log.bids)
        for i in range(n):
            grid = inst.bid_grids[i]
            rec = acc[i].get(log.types[i])
            if rec is None:
                rec = acc[i][log.types[i]] = [0, 0.0, [0.0] * len(grid)]
            rec[0] += 1
            rec[1] += log.utilities[i]
            keep = work[i]
            for k, b in enumerate(grid):
                work[i] = b
                res = compose(inst_t, work, scheme)
                rec[2][k] += utility(inst_t, res.fair_outcome, log.types, i)
            work[i] = keep
    return [
        {v: (max(sums) - played) / count for v, (count, played, sums) in acc[i].items()}
        for i in range(n)
    ]


def poc_estimate(metrics: RunMetrics) -> float | None:
    """Equilibrium welfare of the composite run over truthful auction welfare."""
    if metrics.sw_opt <= TOL:
        return None
    return metrics.sw_fair / metrics.sw_opt


def replay_round(inst: AuctionInstance, log: RoundLog) -> tuple[CompositeResult, tuple[float, ...]]:
    """Recompute a logged round from its draws alone."""
    inst_t = instance_with_quality(inst, log.qualities)
    res = compose(inst_t, log.bids, log.composite_result.scheme)
    utils = tuple(
        utility(inst_t, res.fair_outcome, log.types, i) for i in range(inst.n_bidders)
    )
    return res, utils


# Stable per-round CSV schema: one row per round, columns in this order.
def round_log_header(n: int) -> list[str]:
    cols = ["t"]
    cols += [f"v{i}" for i in range(n)]
    cols += ["gamma_h", "gamma_l"]
    cols += [f"b{i}" for i in range(n)]
    cols += [f"gsp_slot{i}" for i in range(n)]
    cols += [f"gsp_pay{i}" for i in range(n)]
    cols += [f"slot{i}" for i in range(n)]
    cols += [f"pay{i}" for i in range(n)]
    cols += [f"util{i}" for i in range(n)]
    return cols


def round_log_row(log: RoundLog) -> list:
    res = log.composite_result
    row: list = [log.t]
    row += list(log.types)
    row += [log.qualities[0], log.qualities[1]]
    row += list(log.bids)
    row += list(res.gsp_outcome.bidder_to_slot)
    row += list(res.gsp_outcome.payments)
    row += list(res.fair_outcome.bidder_to_slot)
    row += list(res.fair_outcome.payments)
    row += list(log.utilities)
    return row


def write_round_logs_csv(path, logs: Sequence[RoundLog]) -> None:
    if not logs:
        raise ValueError("no rounds to write")
    n = len(logs[0].types)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(round_log_header(n))
        for log in logs:
            writer.writerow(round_log_row(log))


def metrics_to_dict(m: RunMetrics) -> dict:
    """JSON-safe view of the metrics."""
    return {
        "rounds": m.rounds,
        "mechanism": m.mechanism,
        "sw_opt": m.sw_opt,
        "sw_opt_h": m.sw_opt_h,
        "sw_opt_l": m.sw_opt_l,
        "sw_gsp": m.sw_gsp,
        "sw_gsp_h": m.sw_gsp_h,
        "sw_gsp_l": m.sw_gsp_l,
        "sw_fair": m.sw_fair,
        "sw_fair_h": m.sw_fair_h,
        "sw_fair_l": m.sw_fair_l,
        "revenue_total": m.revenue_total,
        "compensation_total": m.compensation_total,
        "budget_fraction": m.budget_fraction,
        "budget_fraction_series": {str(t): x for t, x in m.budget_fraction_series.items()},
        "regret_per_round_series": {
            str(t): list(r) for t, r in m.regret_per_round_series.items()
        },
        "bcce_gaps": None
        if m.bcce_gaps is None
        else [{str(v): g for v, g in gaps.items()} for gaps in m.bcce_gaps],
        "reward_scales": list(m.reward_scales),
        "assumption1_frequency": m.assumption1_frequency,
        "assumption2_frequency": m.assumption2_frequency,
        "poc": m.poc,
    }


def write_metrics_json(path, m: RunMetrics) -> None:
    with open(path, "w") as fh:
        json.dump(metrics_to_dict(m), fh, indent=2, sort_keys=True)
        fh.write("\n")

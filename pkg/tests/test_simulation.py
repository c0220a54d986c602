import csv
import json

import pytest

from fairgsp.composite import BetaFairGsp, GspEfx, PlainGsp, compose
from fairgsp.fair_division import Beta
from fairgsp.generators import point_mass, skewed_discrete
from fairgsp.model import Group, utility
from fairgsp.simulation import (
    Discrete,
    Distributions,
    RoundLog,
    bcce_gap,
    counterfactual_utilities,
    decade_checkpoints,
    instance_with_quality,
    poc_estimate,
    replay_round,
    round_log_header,
    round_log_row,
    run_dynamic,
    validate_distributions,
    write_metrics_json,
    write_round_logs_csv,
)

from conftest import flat_instance


def small_setup(grid=(0.0, 0.5, 1.0), types=(0.5, 1.0)):
    inst = flat_instance(
        4,
        curve_h=(1.0, 0.7, 0.4, 0.2),
        curve_l=(1.0, 0.8, 0.5, 0.1),
        groups=(Group.H, Group.H, Group.L, Group.L),
        grid=grid,
    )
    dists = Distributions(
        value_dists=(Discrete(types, (0.5, 0.5)),) * 4
    )
    return inst, dists


class TestDiscrete:
    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            Discrete((0.0, 1.0), (0.6, 0.6))

    def test_sampling_respects_support(self, rng):
        d = Discrete((0.1, 0.9), (0.25, 0.75))
        draws = {d.sample(rng) for _ in range(200)}
        assert draws == {0.1, 0.9}

    def test_point_mass(self, rng):
        d = point_mass(0.4)
        assert d.sample(rng) == 0.4
        assert d.prob_of(0.4) == 1.0

    def test_skewed_favors_low_values(self):
        d = skewed_discrete((0.0, 0.5, 1.0), decay=0.5)
        assert d.probs[0] > d.probs[1] > d.probs[2]


class TestDistributions:
    def test_exactly_one_form(self):
        with pytest.raises(ValueError, match="exactly one"):
            Distributions()
        with pytest.raises(ValueError, match="exactly one"):
            Distributions(
                value_dists=(point_mass(1.0),),
                joint_values=Discrete(((1.0,),), (1.0,)),
            )

    def test_joint_marginals(self):
        joint = Discrete((((0.0, 1.0)), (1.0, 1.0)), (0.25, 0.75))
        dists = Distributions(joint_values=joint)
        assert dists.marginal(0) == {0.0: 0.25, 1.0: 0.75}
        assert dists.marginal(1) == {1.0: 1.0}

    def test_off_grid_support_reported(self):
        inst, _ = small_setup()
        dists = Distributions(value_dists=(point_mass(0.3),) * 4)
        problems = validate_distributions(inst, dists)
        assert any("not on the grid" in p for p in problems)

    def test_bad_quality_pair_reported(self):
        inst, _ = small_setup()
        dists = Distributions(
            value_dists=(point_mass(0.5),) * 4,
            quality_dist=Discrete(((1.0, 0.0),), (1.0,)),
        )
        assert any("outside" in p for p in validate_distributions(inst, dists))


class TestRunDynamic:
    def test_single_round_log(self):
        inst, _ = small_setup()
        dists = Distributions(value_dists=(point_mass(1.0),) * 4)
        logs, metrics = run_dynamic(inst, dists, PlainGsp(), 1, seed=5)
        assert len(logs) == 1
        log = logs[0]
        assert log.t == 1
        assert log.types == (1.0,) * 4
        assert log.qualities == (1.0, 1.0)
        res, utils = replay_round(inst, log)
        assert res == log.composite_result
        assert utils == log.utilities

    def test_same_seed_identical_logs(self):
        inst, dists = small_setup()
        logs_a, _ = run_dynamic(inst, dists, BetaFairGsp(Beta(1, 1)), 40, seed=9)
        logs_b, _ = run_dynamic(inst, dists, BetaFairGsp(Beta(1, 1)), 40, seed=9)
        assert [(l.types, l.bids, l.utilities) for l in logs_a] == [
            (l.types, l.bids, l.utilities) for l in logs_b
        ]

    def test_single_bid_grid_pins_welfare(self):
        # One available bid per bidder makes every round's welfare that of
        # the fixed profile.
        inst = flat_instance(
            2, curve_h=(1.0, 0.5), groups=(Group.H, Group.L), grid=(0.6,)
        )
        dists = Distributions(value_dists=(point_mass(0.6),) * 2)
        logs, metrics = run_dynamic(inst, dists, PlainGsp(), 25, seed=1)
        from fairgsp.gsp import allocate_gsp, social_welfare

        expected = social_welfare(inst, allocate_gsp(inst, (0.6, 0.6)), (0.6, 0.6))
        assert metrics.sw_fair == pytest.approx(expected, abs=1e-12)
        assert metrics.poc == pytest.approx(1.0, abs=1e-12)

    def test_round_utilities_are_composite(self):
        inst, dists = small_setup()
        logs, _ = run_dynamic(inst, dists, BetaFairGsp(Beta(2, 1)), 10, seed=3)
        for log in logs:
            inst_t = instance_with_quality(inst, log.qualities)
            for i in range(4):
                assert log.utilities[i] == utility(
                    inst_t, log.composite_result.fair_outcome, log.types, i
                )

    def test_quality_draws_are_used(self):
        inst, _ = small_setup()
        dists = Distributions(
            value_dists=(point_mass(1.0),) * 4,
            quality_dist=Discrete(((1.0, 1.0), (0.5, 0.9)), (0.5, 0.5)),
        )
        logs, _ = run_dynamic(inst, dists, PlainGsp(), 40, seed=2)
        seen = {log.qualities for log in logs}
        assert seen == {(1.0, 1.0), (0.5, 0.9)}

    def test_checkpoints(self):
        assert decade_checkpoints(1) == (1,)
        assert decade_checkpoints(10_000) == (1, 10, 100, 1000, 10_000)
        assert decade_checkpoints(2500) == (1, 10, 100, 1000, 2500)

    def test_validation_errors_propagate(self):
        inst, _ = small_setup()
        bad = Distributions(value_dists=(point_mass(0.3),) * 4)
        with pytest.raises(ValueError, match="not on the grid"):
            run_dynamic(inst, bad, PlainGsp(), 5, seed=0)

    def test_joint_type_table_runs(self):
        inst = flat_instance(
            2, curve_h=(1.0, 0.5), groups=(Group.H, Group.L), grid=(0.0, 0.5, 1.0)
        )
        joint = Discrete(((1.0, 0.5), (0.5, 1.0)), (0.5, 0.5))
        logs, metrics = run_dynamic(
            inst, Distributions(joint_values=joint), BetaFairGsp(Beta(1, 1)), 60, seed=4
        )
        assert {log.types for log in logs} == {(1.0, 0.5), (0.5, 1.0)}
        assert metrics.sw_fair > 0.0

    def test_single_arm_bidders_run(self):
        # Dummy bidders with one grid point exercise the K=1 bandit path.
        from fairgsp.model import AuctionInstance

        inst = AuctionInstance(
            group_of=(Group.H, Group.L, Group.L),
            ctr={Group.H: (1.0, 0.7, 0.4), Group.L: (1.0, 0.8, 0.6)},
            quality={Group.H: 1.0, Group.L: 1.0},
            bid_grids=((0.0, 1.0), (0.0, 1.0), (0.0,)),
            type_grids=((0.0, 1.0), (0.0, 1.0), (0.0,)),
        )
        dists = Distributions(
            value_dists=(point_mass(1.0), point_mass(1.0), point_mass(0.0))
        )
        logs, _ = run_dynamic(inst, dists, BetaFairGsp(Beta(2, 1)), 50, seed=9)
        assert all(log.bids[2] == 0.0 for log in logs)


class TestCounterfactuals:
    def test_played_bid_matches_realized_utility(self):
        # The lean counterfactual path must agree bit-for-bit with the
        # reporting path used for the realized round.
        inst, dists = small_setup()
        for scheme in (PlainGsp(), BetaFairGsp(Beta(2, 1)), GspEfx(1.0)):
            logs, _ = run_dynamic(inst, dists, scheme, 15, seed=7)
            for log in logs:
                inst_t = instance_with_quality(inst, log.qualities)
                cf = counterfactual_utilities(inst_t, log.bids, log.types, scheme)
                for i in range(4):
                    played = inst.bid_grids[i].index(log.bids[i])
                    assert cf[i][played] == log.utilities[i]

    def test_ledger_consistency_with_bcce_gap(self):
        inst, dists = small_setup()
        logs, metrics = run_dynamic(inst, dists, BetaFairGsp(Beta(1, 1)), 60, seed=13)
        gaps = bcce_gap(logs, inst)
        assert len(gaps) == 4
        for i in range(4):
            assert set(gaps[i]) == set(metrics.bcce_gaps[i])
            for v, gap in gaps[i].items():
                assert gap == pytest.approx(metrics.bcce_gaps[i][v], abs=1e-9)

    def test_dominant_strategy_point_has_nonpositive_gaps(self):
        # Single effective slot: a classic next-bid auction where truthful
        # bidding dominates. Logs from the constant truthful profile.
        inst = flat_instance(
            2, curve_h=(1.0, 0.0), groups=(Group.H, Group.H), grid=(0.0, 0.5, 1.0)
        )
        vals = (1.0, 0.5)
        scheme = PlainGsp()
        logs = []
        for t in range(1, 31):
            res = compose(inst, vals, scheme)
            utils = tuple(utility(inst, res.fair_outcome, vals, i) for i in range(2))
            logs.append(RoundLog(t, vals, (1.0, 1.0), vals, res, utils))
        gaps = bcce_gap(logs, inst)
        for per_type in gaps:
            for gap in per_type.values():
                assert gap <= 1e-12

    def test_single_round_gap_is_best_deviation(self):
        inst, dists = small_setup()
        logs, _ = run_dynamic(inst, dists, PlainGsp(), 1, seed=21)
        log = logs[0]
        gaps = bcce_gap(logs, inst)
        cf = counterfactual_utilities(inst, log.bids, log.types, PlainGsp())
        for i in range(4):
            expected = max(cf[i]) - log.utilities[i]
            assert gaps[i][log.types[i]] == pytest.approx(expected, abs=1e-12)

    def test_empty_log_rejected(self):
        inst, _ = small_setup()
        with pytest.raises(ValueError, match="empty"):
            bcce_gap([], inst)


class TestMetrics:
    def test_poc_estimate(self):
        inst, dists = small_setup()
        _, metrics = run_dynamic(inst, dists, BetaFairGsp(Beta(1, 1)), 30, seed=4)
        assert poc_estimate(metrics) == pytest.approx(metrics.sw_fair / metrics.sw_opt)

    def test_poc_absent_when_no_welfare(self):
        inst = flat_instance(
            2, curve_h=(1.0, 0.5), groups=(Group.H, Group.L), grid=(0.0,)
        )
        dists = Distributions(value_dists=(point_mass(0.0),) * 2)
        _, metrics = run_dynamic(inst, dists, PlainGsp(), 10, seed=4)
        assert metrics.poc is None
        assert poc_estimate(metrics) is None

    def test_group_welfare_sums(self):
        inst, dists = small_setup()
        _, m = run_dynamic(inst, dists, GspEfx(1.0), 50, seed=6)
        assert m.sw_fair == pytest.approx(m.sw_fair_h + m.sw_fair_l, abs=1e-9)
        assert m.sw_opt == pytest.approx(m.sw_opt_h + m.sw_opt_l, abs=1e-9)

    def test_json_roundtrip(self, tmp_path):
        inst, dists = small_setup()
        _, m = run_dynamic(inst, dists, BetaFairGsp(Beta(1, 1)), 20, seed=8)
        path = tmp_path / "metrics.json"
        write_metrics_json(path, m)
        data = json.loads(path.read_text())
        assert data["mechanism"] == "beta-fair"
        assert data["rounds"] == 20
        assert data["sw_fair"] == m.sw_fair
        assert set(data["regret_per_round_series"]) == {"1", "10", "20"}

    def test_type_marginals_match_distribution(self):
        # Chi-square sanity check on the realized type draws.
        from scipy import stats

        inst, _ = small_setup()
        dists = Distributions(
            value_dists=(Discrete((0.5, 1.0), (0.3, 0.7)),) * 4
        )
        logs, _ = run_dynamic(
            inst, dists, PlainGsp(), 10_000, seed=17,
            track_counterfactuals=False,
        )
        for i in range(4):
            counts = {0.5: 0, 1.0: 0}
            for log in logs:
                counts[log.types[i]] += 1
            observed = [counts[0.5], counts[1.0]]
            expected = [0.3 * len(logs), 0.7 * len(logs)]
            p_value = stats.chisquare(observed, expected).pvalue
            assert p_value >= 0.01


class TestRoundLogCsv:
    def test_schema_and_roundtrip(self, tmp_path):
        inst, dists = small_setup()
        logs, _ = run_dynamic(inst, dists, BetaFairGsp(Beta(1, 1)), 12, seed=19)
        path = tmp_path / "rounds.csv"
        write_round_logs_csv(path, logs)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header = round_log_header(4)
        assert rows[0] == header
        assert len(rows) == 13
        assert len(header) == 1 + 2 + 7 * 4
        first = dict(zip(header, rows[1]))
        log = logs[0]
        assert int(first["t"]) == 1
        assert float(first["b2"]) == log.bids[2]
        assert float(first["util0"]) == log.utilities[0]
        assert int(first["slot1"]) == log.composite_result.fair_outcome.bidder_to_slot[1]

    def test_row_matches_log(self):
        inst, dists = small_setup()
        logs, _ = run_dynamic(inst, dists, PlainGsp(), 3, seed=23)
        row = round_log_row(logs[2])
        assert row[0] == 3
        assert len(row) == len(round_log_header(4))

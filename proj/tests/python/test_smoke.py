"""Smoke tests for the python extension."""

import json
import math

import pytest

import dashmech as dm


def test_rule_payments_and_strategies():
    rule = dm.MonotoneRule.linear_ramp(1.0)
    assert rule.truthful_payment(0.5) == pytest.approx(0.125, abs=1e-9)
    assert rule.truthful_payment(0.5, 0.2) == pytest.approx(0.325, abs=1e-9)
    assert dm.bid_strategy(rule, 0.5, dm.PaymentFormat.WINNER_PAYS_BID) == \
        pytest.approx(0.25, abs=1e-9)
    assert dm.bid_strategy(rule, 0.5, dm.PaymentFormat.ALL_PAY) == \
        pytest.approx(0.125, abs=1e-9)


def test_rule_json_round_trip():
    rule = dm.MonotoneRule.from_knots([0.0, 1.0, 2.0], [0.0, 0.2, 1.0], 2.0)
    again = dm.MonotoneRule.from_json(rule.to_json())
    assert again.eval(1.5) == pytest.approx(0.6, abs=1e-12)


def test_bid_rule_round_trip():
    rule = dm.MonotoneRule.linear_ramp(1.0)
    br = dm.BidRule.derive(rule, dm.PaymentFormat.ALL_PAY)
    for v in (0.2, 0.5, 0.9):
        b = br.strategy(v)
        assert br.invert(b).value == pytest.approx(v, abs=1e-6)
        assert br.infer_foc(b).value == pytest.approx(v, abs=1e-5)
    assert br.alloc_at_bid(0.125) == pytest.approx(0.5, abs=1e-6)


def test_foc_footnote_value():
    v = dm.foc_value(lambda b: b / (b + 2.0), 1.0, dm.PaymentFormat.WINNER_PAYS_BID)
    assert v == pytest.approx(2.5, abs=1e-9)


def test_isotonic_fit():
    assert dm.isotonic_levels([1.0, 0.0, 1.0]) == pytest.approx([0.5, 0.5, 1.0])
    rule = dm.isotonic_rule([(0.1, 0.0), (0.5, 1.0), (0.9, 1.0)], 1.0)
    assert rule.strict
    assert 0.0 <= rule.eval(0.3) <= 1.0


def test_rebalancing_dashboards():
    rule = dm.MonotoneRule.linear_ramp(1.0)
    ap = dm.reference_rebalancing(rule, dm.PaymentFormat.ALL_PAY, 0.2, 1.0)
    assert ap.bid(0.5) == pytest.approx(0.325, abs=1e-9)

    d, v_dagger, saturated = dm.ir_rebalancing(rule.clamped_support(0.2), 0.2, 0.2)
    assert not saturated
    assert d.transfer == 0.0
    assert d.bid(v_dagger / 2) == pytest.approx(v_dagger / 2)


def test_instrument_draw():
    def box(values, seed):
        return [1 if v > 0.5 else 0 for v in values]

    outs = dm.instrument_draw(box, [0.8, 0.2], rho=0.3, vmax=1.0, seed=7)
    assert len(outs) == 2
    for o in outs:
        assert o["realized_alloc"] in (0, 1)
        assert not (o["own_value_alloc"] != 0 and o["below_indicator"] != 0.0)


def _small_config(seed=1):
    return {
        "format": "all_pay",
        "vmax": 1.0,
        "stages": 40,
        "seed": seed,
        "grid": 129,
        "bid_grid": 65,
        "algorithm": {"kind": "proportional_share"},
        "agents": [
            {"values": {"kind": "static", "value": 0.8},
             "strategy": {"kind": "follow_dashboard"}},
            {"values": {"kind": "static", "value": 0.5},
             "strategy": {"kind": "follow_dashboard"}},
        ],
        "dashboard": {"policy": "last_stage"},
    }


def test_run_experiment_summary():
    summary = dm.run_experiment(json.dumps(_small_config()))
    assert summary["stages"] == 40
    # static proportional share: inference locks onto the true values
    assert summary["last_inferred"][0] == pytest.approx(0.8, abs=1e-6)
    assert summary["last_inferred"][1] == pytest.approx(0.5, abs=1e-6)
    assert all(b <= 0.8 + 1e-9 for b in summary["max_abs_balance"])
    assert all(c["pass"] for c in summary["checks"])


def test_run_experiment_deterministic():
    a = dm.run_experiment(json.dumps(_small_config()))
    b = dm.run_experiment(json.dumps(_small_config()))
    assert a["final_balance"] == b["final_balance"]
    c = dm.run_experiment(json.dumps(_small_config(seed=2)))
    assert c["stages"] == 40


def test_run_to_dir(tmp_path):
    report = dm.run_to_dir(json.dumps(_small_config()), str(tmp_path))
    assert "Bound checks" in report
    assert (tmp_path / "trace.csv").exists()
    assert (tmp_path / "metrics.csv").exists()


def test_linear_tail_slope():
    assert dm.linear_tail_slope(0.5, 0.5, 0.125, 1.0, 0.0) == \
        pytest.approx(2.0, rel=1e-4)


def test_config_errors_surface():
    bad = dict(_small_config())
    bad["agents"] = []
    with pytest.raises(RuntimeError):
        dm.run_experiment(json.dumps(bad))

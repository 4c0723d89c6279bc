import math

import pytest

import saoithe


def test_index_values():
    assert saoithe.urgency(1) == 3
    assert saoithe.urgency(5) == 125
    assert saoithe.whittle_index(2, 10.0) == 3.0
    assert saoithe.buffered_index(3, 1, 0.0) == 31.0
    assert saoithe.critical_age(13.0) == 3
    assert saoithe.critical_age(12.999) == 2


def test_energy_and_budget():
    assert saoithe.compose_energy() == pytest.approx(0.9251, rel=0.02)
    assert saoithe.carbon_cost(100.0, 3.6e6) == pytest.approx(100.0)
    assert saoithe.kappa_grams() == pytest.approx(21.5 * 10 * 100 * 0.9251 / 3.6e6)


def test_config_round_trip_and_errors():
    text = saoithe.config({"num_sources": 7, "horizon_slots": 96, "aoi_cap": 96})
    assert "num_sources = 7" in text
    assert saoithe.config(base=text) == text
    with pytest.raises(ValueError):
        saoithe.config({"num_sources": -1})
    with pytest.raises(ValueError):
        saoithe.config({"no_such_key": 1})


def test_traces():
    xi = saoithe.synthetic_trace("high", 288, 300.0, 1)
    assert len(xi) == 288
    assert 2.7 <= max(xi) / min(xi) <= 3.3
    with pytest.raises(Exception):
        saoithe.synthetic_trace("arctic")


def test_simulate_baselines_respect_the_gate():
    cfg = saoithe.config({"num_sources": 10, "horizon_slots": 96, "aoi_cap": 96, "cf_budget": 2})
    for policy in ("round_robin", "random"):
        out = saoithe.simulate(cfg, region="medium", policy=policy)
        assert out["policy"] == policy
        assert out["prefix_violations"] == 0
        assert len(out["aoi"]) == 10
        assert len(out["cf_cumulative"]) == 96
        assert out["total_cf"] <= out["cf_budget"] * (1 + 1e-12)


def test_simulate_calibrates_saoithe():
    cfg = saoithe.config({"num_sources": 10, "horizon_slots": 96, "aoi_cap": 96})
    out = saoithe.simulate(cfg, region="high")
    assert out["calibration"]["lambda_star"] >= 0.0
    assert out["avg_aoi_slots"] > 1.0
    fixed = saoithe.simulate(cfg, [200.0] * 96, lambda_=1e30)
    assert fixed["total_activations"] == 0


def test_calibrate_slack_budget():
    cfg = saoithe.config({"num_sources": 4, "cf_budget": 1e9, "duty_budget": 1.0})
    rep = saoithe.calibrate(cfg, [150.0] * 288)
    assert rep["converged"]
    assert rep["lambda_star"] == 0.0


def test_boundary_is_cube_root():
    grid = [50.0 + 5.0 * i for i in range(81)]
    b = saoithe.boundary(grid)
    ages = [row[2] for row in b["rows"]]
    assert ages == sorted(ages)
    assert 0.28 <= b["fitted_exponent"] <= 0.40
    assert math.isnan(saoithe.boundary(grid, lambda_=0.0)["fitted_exponent"])


def test_validate_suite():
    rep = saoithe.validate("whittle")
    assert rep["pass"]
    assert rep["checks"]

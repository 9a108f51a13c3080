import json
import math
from pathlib import Path

import pytest

import aoisched

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"

SMALL = {
    "k_budget": 1,
    "horizon": 400,
    "seed": 5,
    "stream_defaults": {"p_dest": 0.9, "theta": 2, "traffic": {"kind": "bernoulli", "lambda": 0.3}},
    "streams": [
        {"id": 1, "alpha": 1, "channel": {"kind": "constant", "p": 0.8}},
        {"id": 2, "alpha": 3, "channel": {"kind": "frame_iid", "p_min": 0.3, "p_max": 1.0}},
    ],
}


def test_worked_state():
    s = aoisched.ObservationState(0, 0, 2, 2, 1)
    q = [aoisched.q_u(s, 0.5, 4, phi) for phi in range(1, 5)]
    assert q == pytest.approx([1 / 36, 1 / 12, 2 / 9, 2 / 3], abs=1e-12)
    gu, gd = aoisched.estimate_timestamps(s, 0.5, 4)
    assert gu == pytest.approx(127 / 36, abs=1e-12)
    assert gd == pytest.approx(1.75, abs=1e-12)
    assert aoisched.eta_d(0.5, 2, 0) == pytest.approx(2 / 3)


def test_exact_posterior():
    s = aoisched.ObservationState(0, 0, 2, 2, 1)
    p = aoisched.exact_posterior(s, 4, lam=0.5)
    assert p["u_support"] == [1, 2, 3, 4]
    assert p["u_mass"] == pytest.approx([1 / 12, 1 / 6, 1 / 4, 1 / 2], abs=1e-12)
    periodic = aoisched.exact_posterior(aoisched.ObservationState(0, 3, 4, 4, 1), 9, support=[4], mass=[1.0])
    assert periodic["u_support"] == [8]


def test_scheduler():
    assert aoisched.mw_select([1.0, 3.0, 3.0, -1.0], 2) == [2, 3]
    assert aoisched.mw_select([0.0, -2.0], 1) == []
    assert "mw_lc" in aoisched.policies()


def test_run_json_is_deterministic():
    text = json.dumps(SMALL)
    a = aoisched.run_json(text, trace=True)
    b = aoisched.run_json(text, trace=True)
    assert a["ewsaoi"] == b["ewsaoi"]
    assert a["policy"] == "mw_lc" and a["estimator"] == "lc"
    assert len(a["weighted_sum"]) == 400
    assert len(a["traces"]) == 2 and len(a["traces"][0]["A"]) == 400
    assert math.isfinite(a["nmse_mean"])
    rr = aoisched.run_json(text, policy="rr")
    assert rr["policy"] == "rr"


def test_run_preset():
    m = aoisched.run_scenario(SCENARIOS / "fig5_samplepath.json", horizon=500, policy="mw_enf")
    assert m["estimator"] == "oracle"
    assert m["horizon"] == 500
    assert m["ewsaoi"] > 1.0


def test_errors():
    bad = dict(SMALL, k_budget=3)
    with pytest.raises(aoisched.ValidationError, match="k_budget out of range"):
        aoisched.run_json(json.dumps(bad))
    with pytest.raises(aoisched.ScenarioParseError, match="unknown key"):
        aoisched.run_json(json.dumps(dict(SMALL, colour=1)))
    with pytest.raises(aoisched.ScenarioNotFound):
        aoisched.run_scenario("/nonexistent.json")
    with pytest.raises(ValueError):
        aoisched.run_json(json.dumps(SMALL), policy="edf")


def test_normalize_scenario_round_trip():
    text = aoisched.normalize_scenario(json.dumps(SMALL))
    doc = json.loads(text)
    assert doc["n_streams"] == 2
    assert aoisched.normalize_scenario(text) == text

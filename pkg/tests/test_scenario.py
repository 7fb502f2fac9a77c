import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slowfast.manifold import manifold_ub
from slowfast.scenario import (
    Profile, ScenarioError, baseline_scenario, load_scenario, parse_scenario, scenario_from_dict,
)

from conftest import small_doc


def test_round_trip():
    sc = baseline_scenario()
    again = parse_scenario(sc.to_json())
    assert again.to_dict() == sc.to_dict()
    assert json.loads(again.to_json()) == json.loads(sc.to_json())


def test_shipped_baseline_loads():
    sc = load_scenario("scenarios/baseline.json")
    assert sc.params == baseline_scenario().params
    assert tuple(sc.snapshot_times) == (0.05, 0.125, 0.25)


def test_minimal_document_uses_defaults():
    sc = scenario_from_dict({"params": baseline_scenario().params.to_dict()})
    assert sc.grid.n == 128 and sc.solver.dt == 2.5e-5 and sc.experiments["reference"] == "split"


@pytest.mark.parametrize("path,doc_change", [
    ("bogus", lambda d: d.update(bogus=1)),
    ("solver.tol", lambda d: d["solver"].update(tol=1)),
    ("initial.u.shape", lambda d: d["initial"]["u"].update(shape="x")),
])
def test_unknown_keys_named(path, doc_change):
    d = small_doc()
    doc_change(d)
    with pytest.raises(ScenarioError, match=f"unknown key '{path}'"):
        scenario_from_dict(d)


def test_invalid_params_quote_report():
    d = small_doc()
    d["params"]["alpha"] = 2.0  # alpha > beta violates (H1)
    with pytest.raises(ScenarioError, match=r"\(H1\)"):
        scenario_from_dict(d)


@pytest.mark.parametrize("section,key,val,msg", [
    ("outputs", "snapshot_times", [0.5], "outside"),
    ("solver", "eps", 0.0, "eps"),
    ("solver", "limit_scheme", "rk", "limit_scheme"),
    ("solver", "energy_p", [0.5], "energy_p"),
    ("grid", "n", 3, "grid"),
    ("grid", "n", 16.5, "integer"),
    ("initial", "ub_fraction", 1.5, "ub_fraction"),
    ("experiments", "reference", "x", "reference"),
])
def test_invalid_values(section, key, val, msg):
    d = small_doc()
    d[section][key] = val
    with pytest.raises(ScenarioError, match=msg):
        scenario_from_dict(d)


def test_negative_profile_rejected():
    d = small_doc()
    d["initial"]["v"].update(base=0.1, amplitude=-0.5)
    with pytest.raises(ScenarioError, match="negative"):
        scenario_from_dict(d)


def test_malformed_json():
    with pytest.raises(ScenarioError, match="malformed JSON"):
        parse_scenario("{")


@given(st.sampled_from(["constant", "cosine-bump"]), st.floats(0.1, 2), st.floats(-0.1, 0.1))
def test_profiles_nonnegative(family, base_, amp):
    x = np.linspace(0, 1, 50)
    assert np.all(Profile(family, base_, amp, 0.0, 1.0)(x) >= 0)


def test_initial_split():
    sc = scenario_from_dict(small_doc())
    ua, ub, v = sc.initial_split(prepared=True)
    assert np.allclose(ub, manifold_ub(ua + ub, v, sc.params), atol=1e-13)
    ua, ub, v = sc.initial_split(prepared=False)
    assert np.allclose(ub, 0.25 * (ua + ub))
    assert sc.eps_init(prepared=True) < 1e-12 < sc.eps_init(prepared=False)


def test_unknown_param_key_named():
    d = small_doc()
    d["params"]["d_aa"] = 1.0
    with pytest.raises(ScenarioError, match="d_aa"):
        scenario_from_dict(d)


def test_h1_violation_quoted():
    # [PAPER] (H1): "B>0 if beta<1"
    d = small_doc()
    d["params"].update(beta=0.5, alpha=0.5, B_off=0.0)
    with pytest.raises(ScenarioError, match=r"\(H1\).*B > 0 if beta < 1"):
        scenario_from_dict(d)

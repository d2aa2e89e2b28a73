import math
import os

import pytest

import protodiff

PROBLEMS = os.environ.get(
    "PROTODIFF_PROBLEMS", os.path.join(os.path.dirname(__file__), "..", "..", "problems")
)


def problem(name):
    return os.path.join(PROBLEMS, name)


def test_derive_weighted_abs():
    r = protodiff.derive(problem("weighted_abs.json"))
    assert r["y0"] == pytest.approx([2.0])
    assert r["yprime"] == pytest.approx([1.0])
    assert {h["clause"] for h in r["hypotheses"]} >= {"(i)", "(ii)", "(iii)", "(iv)", "(v)"}


def test_solve_halfspace():
    assert protodiff.solve(problem("halfspace_qp.json"), 0.0) == pytest.approx([0.5, 0.5])


def test_validate_verdicts():
    assert protodiff.validate(problem("curved_constraint_qp.json"))["verdict"] == "PASS"
    bad = protodiff.validate(problem("abs_moving_kink.json"))
    assert bad["verdict"] == "HYPOTHESIS_VIOLATED"
    assert bad["finite_differences"]["estimate"] == pytest.approx([1.0])


def test_dict_input_round_trip():
    spec = protodiff.load(problem("smooth_only.json"))
    assert protodiff.load(spec) == spec
    assert protodiff.derive(spec)["yprime"] == pytest.approx([6.0 / 23.0, -13.0 / 23.0])


def test_parse_error_names_path():
    spec = protodiff.load(problem("weighted_abs.json"))
    del spec["function"]["a"]
    with pytest.raises(protodiff.ProtodiffError) as info:
        protodiff.derive(spec)
    assert protodiff.error_code(info.value) == "PARSE_ERROR"
    assert "$.function.a" in str(info.value)


def test_second_order_tools():
    kind, values = protodiff.second_epi_derivative([1.0], [0.0, 0.0, 1.0], 0.0, 0.0, [0.0, 0.5])
    assert kind == "POINT_INDICATOR"
    assert values[0] == -1.0 and math.isinf(values[1])
    cls, lim = protodiff.epi_probe([1.0], [0.0, 0.0, 1.0], 0.0, 0.0, 0.0)
    assert cls == "FINITE_LIMIT" and lim == pytest.approx(-1.0, abs=1e-3)
    found, triple = protodiff.csh_probe([1.0], [0.0, 1.0], 0.0, 0.0)
    assert found == "no" and triple is None
    phi = protodiff.phi_gap([1.0], [0.0, 0.0, 1.0], 0.0, 0.0, [0.0, 0.5])
    assert phi["phi"][1] == pytest.approx(0.25)
    assert phi["stationary"]

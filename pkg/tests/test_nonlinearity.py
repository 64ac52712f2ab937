import math

import numpy as np
import pytest

from grapde.calculus import OperatorOrder
from grapde.graph import path_graph
from grapde.nonlinearity import (
    BUILTIN_NAMES,
    HypothesisSpec,
    Nonlinearity,
    NonlinearityError,
    SamplingConfig,
    builtin,
    check_hypotheses,
)

FAST = SamplingConfig(w_samples=4, angular_samples=16, box_grid=16, pair_samples=50)


def test_eval_quartic_at_unit_point():
    g = path_graph(2)
    nl = Nonlinearity.from_source(g, "(u^2+v^2)^2*(1+w^2)*abs(gamma)", {"gamma": 1.0})
    assert nl.eval("F", "v0", 1.0, 0.0, 0.0) == pytest.approx(1.0)


def test_eval_accepts_index_or_id():
    g = path_graph(2)
    nl = Nonlinearity.from_source(g, "gamma*u", {"gamma": np.array([2.0, 5.0])})
    assert nl.eval("F", 1, 1.0, 0.0, 0.0) == 5.0
    assert nl.eval("F", "v1", 1.0, 0.0, 0.0) == 5.0


def test_partials_are_symbolic_derivatives():
    g = path_graph(2)
    nl = Nonlinearity.from_source(g, "(u^2+v^2)^2*(1+w^2)*abs(gamma)", {"gamma": 1.0})
    # F_u = 4u(u^2+v^2)(1+w^2)|gamma|
    assert nl.eval("Fu", 0, 1.0, 1.0, 0.0) == pytest.approx(8.0)
    assert nl.eval("Fv", 0, 1.0, 1.0, 0.0) == pytest.approx(8.0)


def test_missing_coefficient_rejected():
    g = path_graph(2)
    with pytest.raises(NonlinearityError, match="gamma"):
        Nonlinearity.from_source(g, "gamma*u", {})


def test_coefficient_table_from_map():
    g = path_graph(2)
    nl = Nonlinearity.from_source(g, "gamma*u", {"gamma": {"v0": 1.0, "v1": 3.0}})
    assert nl.eval("F", "v1", 2.0, 0.0, 0.0) == 6.0


def test_builtin_unknown_name():
    g = path_graph(2)
    with pytest.raises(NonlinearityError, match="unknown builtin"):
        builtin("nope", g)


def test_builtin_names_constructible():
    g = path_graph(2)
    for name in BUILTIN_NAMES:
        prob = builtin(name, g)
        assert prob.nl.eval("F", 0, 0.5, 0.5, 0.5) is not None


def test_builtin_saddle_example_constants():
    g = path_graph(2)
    prob = builtin("mp-example", g)
    assert (prob.p, prob.q) == (3.0, 2.0)
    assert prob.spec.theta == 4.0
    assert prob.spec.r1 == prob.spec.r2 == 4.0
    assert prob.spec.c1 == prob.spec.c2 == 16.0


def test_builtin_quadratic_example_constants():
    g = path_graph(2)
    prob = builtin("unique-example", g)
    # e* = 0.9 * min{1/(p K1^p), 1/(q K2^q)} = 0.9/4 on this graph
    assert prob.p == prob.q == 2.0
    e_star = 0.9 / 4.0
    assert prob.spec.d1 == pytest.approx(4.0 * e_star)
    assert prob.nl.eval("F", 0, 1.0, 0.0, 0.0) == pytest.approx(e_star)


def test_builtin_sign_example_partial():
    g = path_graph(2)
    prob = builtin("nonexist-example", g)
    # vertex v0 carries coefficient 1: F_u(1, w) = -atan(1) = -pi/4
    assert prob.nl.eval("Fu", "v0", 1.0, 0.0, 0.3) == pytest.approx(-math.pi / 4)
    # vertex v1 carries coefficient 2
    assert prob.nl.eval("Fu", "v1", 1.0, 0.0, 0.3) == pytest.approx(-math.pi / 2)


def test_screening_saddle_example():
    g = path_graph(2)
    prob = builtin("mp-example", g)
    report = check_hypotheses(prob.nl, prob.spec, g, 3.0, 2.0, FAST)
    for name in ("F1", "F2", "H1", "H2", "H3"):
        assert report.conditions[name].verdict in ("pass", "pass (sampled)"), name
    assert report.conditions["NONEXIST"].verdict == "fail"


def test_screening_sign_example():
    g = path_graph(2)
    prob = builtin("nonexist-example", g)
    report = check_hypotheses(prob.nl, prob.spec, g, 2.0, 2.0, FAST)
    assert report.conditions["NONEXIST"].verdict == "pass (sampled)"
    assert report.conditions["F1"].verdict == "pass"


def test_screening_zero_function_positivity_floor():
    g = path_graph(2)
    nl = Nonlinearity.from_source(g, "0", {})
    spec = HypothesisSpec(a_floor=lambda r: r**4, c_fn=np.ones(2))
    report = check_hypotheses(nl, spec, g, 2.0, 2.0, FAST)
    assert report.conditions["H3"].verdict == "fail"


def test_screening_limits_are_only_sampled():
    g = path_graph(2)
    prob = builtin("mp-example", g)
    report = check_hypotheses(prob.nl, prob.spec, g, 3.0, 2.0, FAST)
    assert report.conditions["F2"].verdict != "pass"  # at best "pass (sampled)"


def test_screening_missing_constants_inconclusive():
    g = path_graph(2)
    nl = Nonlinearity.from_source(g, "u^4+v^4", {})
    spec = HypothesisSpec()
    report = check_hypotheses(nl, spec, g, 2.0, 2.0, FAST)
    for name in ("H1", "H2", "H3", "H4", "H5", "F4"):
        assert report.conditions[name].verdict == "inconclusive"


def test_screening_h1_failure_witness():
    g = path_graph(2)
    nl = Nonlinearity.from_source(g, "u^2+v^2", {})
    spec = HypothesisSpec(theta=4.0)  # 4F > 2F at nonzero points
    report = check_hypotheses(nl, spec, g, 2.0, 2.0, FAST)
    assert report.conditions["H1"].verdict == "fail"
    assert report.conditions["H1"].witness is not None


def test_f1_requires_vanishing_origin():
    g = path_graph(2)
    nl = Nonlinearity.from_source(g, "1+u^2", {})
    report = check_hypotheses(nl, HypothesisSpec(), g, 2.0, 2.0, FAST)
    assert report.conditions["F1"].verdict == "fail"


def test_quadratic_example_h5_passes():
    g = path_graph(2)
    prob = builtin("unique-example", g)
    report = check_hypotheses(
        prob.nl, prob.spec, g, 2.0, 2.0, FAST, h5_ball_radius=0.5
    )
    assert report.conditions["H5"].verdict == "pass (sampled)"


def test_hypothesis_spec_interval_validated():
    with pytest.raises(ValueError):
        HypothesisSpec(J=(1.0, 0.0))
    with pytest.raises(ValueError):
        HypothesisSpec(J=(0.0, math.inf))

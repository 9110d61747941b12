import json
import math

import numpy as np
import pytest

from gdpkit.model import (
    Constraint,
    Disjunct,
    Disjunction,
    DomainError,
    Expression,
    GdpModel,
    LogicClause,
    interval_eval,
    load_model,
    save_model,
)


def minimal_model():
    m = GdpModel()
    x = m.add_variable("x", 0.0, 1.0)
    m.objective.add_linear(1.0, x)
    return m, x


def test_minimal_model_validates_clean():
    m, _ = minimal_model()
    assert m.validate().ok


def test_log_on_sign_changing_variable_flagged():
    m = GdpModel()
    x = m.add_variable("x", -1.0, 1.0)
    m.objective.add_log(1.0, x)
    report = m.validate()
    assert any("log domain" in p for p in report.problems)


def test_unknown_boolean_in_clause_flagged():
    m, x = minimal_model()
    d1 = Disjunct("Y1", [Constraint(Expression().add_linear(1.0, x), "<=", 0.5)])
    d2 = Disjunct("Y2")
    m.add_disjunction(Disjunction([d1, d2]))
    m.add_logic(LogicClause([("Y3", True)]))
    report = m.validate()
    assert any("unknown Boolean" in p for p in report.problems)


def test_structural_violations_collected():
    m = GdpModel()
    x = m.add_variable("x", 0.0, math.inf)
    b = m.add_variable("b", 0.0, 2.0, "binary")
    m.objective.add_linear(1.0, x)
    m.objective.add_linear(1.0, 99)
    m.add_disjunction(Disjunction([Disjunct("Y1", [], [x])]))
    m.add_logic(LogicClause([]))
    problems = m.validate().problems
    assert any("unbounded variable" in p for p in problems)
    assert any("binary bounds" in p for p in problems)
    assert any("unknown variable" in p for p in problems)
    assert any("empty disjunction" in p for p in problems)
    assert any("empty logic clause" in p for p in problems)


def test_fix_to_zero_needs_zero_in_bounds():
    m = GdpModel()
    x = m.add_variable("x", 1.0, 2.0)
    m.add_disjunction(Disjunction([
        Disjunct("Y1", [], [x]),
        Disjunct("Y2"),
    ]))
    assert any("fix-to-zero" in p for p in m.validate().problems)


def test_power_exponent_range_rejected_at_build():
    e = Expression()
    with pytest.raises(ValueError):
        e.add_power(1.0, 0, 1.0)
    with pytest.raises(ValueError):
        e.add_power(1.0, 0, -0.5)


def test_interval_linear():
    e = Expression().add_linear(2.0, 0)
    assert interval_eval(e, [0.0], [1.0]) == (0.0, 2.0)


def test_interval_bilinear_corners():
    e = Expression().add_bilinear(1.0, 0, 1)
    assert interval_eval(e, [-1.0, -1.0], [1.0, 1.0]) == (-1.0, 1.0)


def test_interval_power_monotone():
    e = Expression().add_power(1.0, 0, 0.7)
    lo, hi = interval_eval(e, [1.0], [32.0])
    assert lo == pytest.approx(1.0, abs=1e-12)
    # direct evaluation oracle: exp(0.7 * ln 32)
    assert hi == pytest.approx(11.31370849898476, abs=1e-9)


def test_interval_log_domain_error():
    e = Expression().add_log(1.0, 0)
    with pytest.raises(DomainError):
        interval_eval(e, [0.0], [1.0])


def _random_expression(rng: np.random.Generator, n_vars: int) -> Expression:
    e = Expression(rng.uniform(-2, 2))
    for _ in range(rng.integers(0, 3)):
        e.add_linear(rng.uniform(-3, 3), int(rng.integers(0, n_vars)))
    for _ in range(rng.integers(0, 3)):
        e.add_bilinear(rng.uniform(-3, 3), int(rng.integers(0, n_vars)),
                       int(rng.integers(0, n_vars)))
    for _ in range(rng.integers(0, 2)):
        e.add_power(rng.uniform(-3, 3), int(rng.integers(0, n_vars)),
                    float(rng.uniform(0.1, 0.9)))
    for _ in range(rng.integers(0, 2)):
        e.add_log(rng.uniform(-3, 3), int(rng.integers(0, n_vars)))
    return e


def _random_box(rng: np.random.Generator, n_vars: int):
    lo = rng.uniform(0.1, 2.0, n_vars)
    hi = lo + rng.uniform(0.0, 3.0, n_vars)
    return lo, hi


def test_interval_soundness_on_random_samples():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n_vars = int(rng.integers(1, 4))
        e = _random_expression(rng, n_vars)
        lo, hi = _random_box(rng, n_vars)
        ilo, ihi = interval_eval(e, lo, hi)
        for _ in range(5):
            point = rng.uniform(lo, hi)
            val = e.evaluate(point)
            assert ilo - 1e-9 <= val <= ihi + 1e-9


def test_interval_monotone_under_box_shrink():
    rng = np.random.default_rng(11)
    for _ in range(300):
        n_vars = int(rng.integers(1, 4))
        e = _random_expression(rng, n_vars)
        lo, hi = _random_box(rng, n_vars)
        mid_lo = lo + 0.25 * (hi - lo)
        mid_hi = hi - 0.25 * (hi - lo)
        outer = interval_eval(e, lo, hi)
        inner = interval_eval(e, mid_lo, mid_hi)
        assert inner[0] >= outer[0] - 1e-12
        assert inner[1] <= outer[1] + 1e-12


def test_bilinear_canonical_order():
    a = Expression().add_bilinear(2.0, 3, 1)
    b = Expression().add_bilinear(2.0, 1, 3)
    assert a.bilinear == b.bilinear == [(2.0, 1, 3)]


def wtn_like_model():
    m = GdpModel()
    x = m.add_variable("x", 0.0, 10.0)
    w = m.add_variable("w", 0.5, 4.0)
    cost = m.add_variable("cost", 0.0, 100.0)
    m.objective.add_linear(1.0, cost)
    body = Expression().add_bilinear(1.0, x, w)
    m.add_global(Constraint(body, "<=", 8.0, "cap"))
    active = Disjunct("on", [
        Constraint(Expression().add_linear(1.0, cost)
                   .add_power(-3.0, x, 0.7).add_log(-1.0, w), "=", 2.0, "price"),
    ], [x])
    idle = Disjunct("off", [
        Constraint(Expression().add_linear(1.0, cost), "=", 0.0, "nocost"),
    ])
    m.add_disjunction(Disjunction([active, idle], "unit"))
    m.add_logic(LogicClause([("on", True), ("off", True)]))
    return m


def test_json_round_trip_byte_identical():
    m = wtn_like_model()
    text = save_model(m)
    again = save_model(load_model(text))
    assert text == again
    parsed = json.loads(text)
    assert set(parsed) == {"sense", "variables", "objective", "globals",
                           "disjunctions", "logic"}


def test_json_preserves_terms_and_logic():
    m = wtn_like_model()
    m2 = load_model(save_model(m))
    assert m2.sense == m.sense
    assert [v.name for v in m2.variables] == [v.name for v in m.variables]
    assert m2.objective.linear == m.objective.linear
    dj2 = m2.disjunctions[0]
    assert [d.guard for d in dj2.disjuncts] == ["on", "off"]
    assert dj2.disjuncts[0].fix_to_zero == [0]
    row = dj2.disjuncts[0].constraints[0]
    assert row.body.powers == [(-3.0, 0, 0.7)]
    assert row.body.logs == [(-1.0, 1)]
    assert m2.logic[0].literals == [("on", True), ("off", True)]

# Copyright 2026 colcon-equistab authors
# Licensed under the Apache License, Version 2.0

from colcon_equistab.action import catalog_action
from colcon_equistab.errors import (
    DimensionMismatch,
    DomainError,
    NonFiniteInput,
    ParseError,
    UnknownFunction,
    VariableOutOfRange,
)
from colcon_equistab.expr import (
    check_invariance,
    Expression,
    linear_combination,
    parse,
    quadratic_form,
    subtract,
)
import numpy as np
import pytest


def test_precedence():
    assert parse("1 + 2 * 3", 1).evaluate([0.0]) == 7.0
    assert parse("-x1^2", 1).evaluate([3.0]) == -9.0
    assert parse("(1 + 2) * 3", 1).evaluate([0.0]) == 9.0
    assert parse("x1 / x2 / 2", 2).evaluate([8.0, 2.0]) == 2.0
    assert parse("2 - 3 - 4", 1).evaluate([0.0]) == -5.0


def test_functions_and_scientific_numbers():
    e = parse("sin(x1)^2 + cos(x1)^2 + exp(0) + sqrt(x2) + 1.5e-1", 2)
    assert e.evaluate([0.4, 4.0]) == pytest.approx(4.15)


def test_negative_exponent():
    assert parse("x1^-2", 1).evaluate([2.0]) == pytest.approx(0.25)


def test_parse_errors_carry_positions():
    with pytest.raises(ParseError) as info:
        parse("x1 ^", 1)
    assert info.value.position == 4
    with pytest.raises(ParseError) as info:
        parse("x1 + * x2", 2)
    assert info.value.position == 5
    with pytest.raises(ParseError):
        parse("", 1)
    with pytest.raises(ParseError):
        parse("(x1", 1)
    with pytest.raises(ParseError):
        parse("x1 $ 2", 1)


def test_unknown_function_and_variable_range():
    with pytest.raises(UnknownFunction) as info:
        parse("tan(x1)", 1)
    assert info.value.name == "tan"
    assert info.value.position == 0
    with pytest.raises(VariableOutOfRange) as info:
        parse("x1 + x3", 2)
    assert info.value.position == 5
    with pytest.raises(VariableOutOfRange):
        parse("x0", 2)


def test_canonical_text_reparses_to_same_function():
    e = parse("-x1^2 + 3*x2/(1 + x1^2) - sin(x2)", 2)
    again = parse(e.text, 2)
    assert again.text == e.text
    x = np.array([0.7, -1.3])
    assert again.evaluate(x) == pytest.approx(e.evaluate(x))


def test_domain_errors():
    with pytest.raises(DomainError):
        parse("1 / x1", 1).evaluate([0.0])
    with pytest.raises(DomainError):
        parse("sqrt(x1)", 1).evaluate([-1.0])
    with pytest.raises(DomainError):
        parse("x1^-1", 1).evaluate([0.0])


def test_bad_points():
    e = parse("x1 + x2", 2)
    with pytest.raises(DimensionMismatch):
        e.evaluate([1.0])
    with pytest.raises(NonFiniteInput):
        e.evaluate([1.0, np.nan])


def test_gradient_matches_closed_form():
    e = parse("x1^2*x2 + sin(x2) + exp(x1*x2)", 2)
    x, y = 0.3, -0.8
    expected = [2 * x * y + y * np.exp(x * y), x**2 + np.cos(y) + x * np.exp(x * y)]
    np.testing.assert_allclose(e.gradient([x, y]), expected, rtol=1e-12)


def test_gradient_of_constant_is_zero():
    np.testing.assert_array_equal(Expression.constant(3.0, 2).gradient([1.0, 2.0]), [0.0, 0.0])


def test_hessian_matches_closed_form():
    e = parse("x1^3*x2 + x2^2/x1", 2)
    x, y = 1.5, -0.5
    expected = [
        [6 * x * y + 2 * y**2 / x**3, 3 * x**2 - 2 * y / x**2],
        [3 * x**2 - 2 * y / x**2, 2 / x],
    ]
    np.testing.assert_allclose(e.hessian([x, y]), expected, rtol=1e-12)


def test_batch_evaluation_agrees_with_pointwise():
    e = parse("x1*x2 - cos(x1)", 2)
    points = np.random.default_rng(0).standard_normal((5, 3, 2))
    values = e.evaluate_batch(points)
    gradients = e.gradient_batch(points)
    assert values.shape == (5, 3)
    assert gradients.shape == (5, 3, 2)
    assert values[2, 1] == pytest.approx(e.evaluate(points[2, 1]))
    np.testing.assert_allclose(gradients[4, 0], e.gradient(points[4, 0]))


def test_batch_of_constant_broadcasts():
    assert Expression.constant(2.0, 1).evaluate_batch(np.zeros((4, 1))).tolist() == [2.0] * 4


def test_quadratic_form_and_combinations():
    m = np.array([[2.0, 1.0], [0.0, 3.0]])
    q = quadratic_form(m, 2)
    x = np.array([1.0, -2.0])
    assert q.evaluate(x) == pytest.approx(x @ m @ x)
    np.testing.assert_allclose(q.hessian(x), m + m.T)
    combo = linear_combination([(2.0, parse("x1", 2)), (0.0, parse("x2", 2)), (1.0, q)], 2)
    assert combo.evaluate(x) == pytest.approx(2.0 + x @ m @ x)
    assert subtract(q, q).evaluate(x) == 0.0


def test_invariance_of_rotation_invariant_expression():
    action = catalog_action("SO2_DIAG_R4")
    invariant = parse("x1*x4 - x2*x3", 4)
    assert check_invariance(invariant, action, 50).max_violation < 1e-12
    assert check_invariance(parse("x1", 4), action, 50).max_violation > 1e-3

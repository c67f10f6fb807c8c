import numpy as np
import pytest

from medmech.errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifierError
from medmech.utils.expression import eval_expression, parse_expression, to_text


@pytest.mark.parametrize("text, q, expected", [
    ("q", 1.3, 1.3),
    ("0", 1.7, 0.0),
    ("q", 1.5, 1.5),
    ("1.5*q^2 - 0.5", 2.0, 5.5),
    ("2 + 3 * q", 2.0, 8.0),
    ("(2 + 3) * q", 2.0, 10.0),
    ("-q^2", 3.0, -9.0),
    ("2^3^2", 0.0, 64.0),
    ("8 / 4 / 2", 0.0, 1.0),
    ("10 - 4 - 3", 0.0, 3.0),
    ("q^-1", 4.0, 0.25),
    ("--q", 2.0, 2.0),
    ("1e-1 * q", 5.0, 0.5),
])
def test_eval(text, q, expected):
    assert eval_expression(parse_expression(text), q) == pytest.approx(expected, abs=1e-12)


def test_vectorized_shapes():
    q = np.linspace(1.0, 2.0, 7)
    assert np.allclose(eval_expression(parse_expression("q * q"), q), q ** 2)
    const = eval_expression(parse_expression("0.25"), q)
    assert const.shape == q.shape
    assert np.all(const == 0.25)


def test_unbalanced_parenthesis_position():
    with pytest.raises(ExpressionSyntaxError) as e:
        parse_expression("2*(q+")
    assert e.value.position == 5


def test_missing_close_paren():
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("(q + 1")


def test_trailing_token():
    with pytest.raises(ExpressionSyntaxError) as e:
        parse_expression("q q")
    assert e.value.position == 2


@pytest.mark.parametrize("text, name, position", [("t", "t", 0), ("2 * x", "x", 4), ("exp(q)", "exp", 0)])
def test_unknown_identifier(text, name, position):
    with pytest.raises(UnknownIdentifierError) as e:
        parse_expression(text)
    assert e.value.name == name
    assert e.value.position == position


def test_empty_expression():
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("   ")


def test_bad_character():
    with pytest.raises(ExpressionSyntaxError) as e:
        parse_expression("q % 2")
    assert e.value.position == 2


def test_division_by_zero():
    expr = parse_expression("1 / (q - 1)")
    with pytest.raises(EvaluationError):
        eval_expression(expr, 1.0)
    with pytest.raises(EvaluationError):
        eval_expression(expr, np.array([0.5, 1.0, 1.5]))


def test_zero_to_negative_power():
    with pytest.raises(EvaluationError):
        eval_expression(parse_expression("q^-2"), 0.0)


def test_printed_form_evaluates_the_same():
    rng = np.random.default_rng(7)
    q = rng.uniform(0.5, 3.0, 100)
    for text in ("1.5*q^2 - 0.5", "-q^2 + 2/(q+1)", "(q - 1)^3 * -2 + 0.125", "2^q^2"):
        expr = parse_expression(text)
        again = parse_expression(to_text(expr))
        assert np.allclose(eval_expression(again, q), eval_expression(expr, q), rtol=1e-14, atol=0)

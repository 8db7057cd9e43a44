import random
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ultrabroyden import INF, AtLeast, FieldContext, Fpt, Qp, change_prec, exact_oracle, sample_unit
from ultrabroyden.errors import ContextMismatch, PrecisionError
from ultrabroyden.field import (change_prec_, from_json, from_text, oracle_digits, to_zealous,
                                valuation)
from ultrabroyden.ledger import CostLedger, recording

P = 17


def padic_rationals():
    num = st.integers(-(P ** 6), P ** 6).filter(bool)
    den = st.integers(1, P ** 3)
    return st.builds(Fraction, num, den)


def series_rationals():
    poly = st.lists(st.integers(0, P - 1), min_size=1, max_size=8)
    return st.tuples(poly.filter(any), poly.filter(any))


def exact_pair(kind, data):
    if kind == "padic":
        o = exact_oracle(P)
        return o.from_rational(data.draw(padic_rationals())), Qp(P)
    o = exact_oracle(P, series=True)
    num, den = data.draw(series_rationals())
    return o.from_polynomial(num, den), Fpt(P)


def assert_sound(z, Z):
    """Every digit ``z`` claims agrees with the oracle value ``Z``."""
    assert list(z.digits) == oracle_digits(Z, z.lo, z.hi)
    if not z.is_apparent_zero:
        assert Z.lo == z.lo


# -- construction and basics ------------------------------------------------


def test_context_validation():
    with pytest.raises(ValueError):
        Qp(15)
    with pytest.raises(ValueError):
        FieldContext("padic", 1)
    with pytest.raises(ValueError):
        FieldContext("weird", 5)
    assert str(Qp(17)) == "Q_17" and str(Fpt(5)) == "F_5[[t]]"
    assert Qp(7).symbol == "7" and Fpt(7).symbol == "t"


def test_from_digits_normalizes_leading_zeros():
    x = Qp(5).from_digits([0, 0, 3, 1], 0, 4)
    assert x.interval == (2, 4) and x.digits == [3, 1]


def test_addition_carries():
    Q5 = Qp(5)
    x = Q5.from_digits([2], 0, 3)
    y = Q5.from_digits([3], 0, 3)
    z = x + y
    # 2 + 3 = 5 = 1*5^1
    assert z.interval == (1, 3) and z.digits == [1, 0]


def test_add_identity_and_cancellation():
    Q5 = Qp(5)
    x = Q5.from_digits([1, 2, 3, 4], 0, 4)
    assert x + Q5.zero(4) == x
    z = Q5.one(6) + Q5.from_int(-1, 3)
    assert z.is_apparent_zero and z.hi == 3 and z.valuation() == AtLeast(3)


def test_series_addition_has_no_carries():
    F5 = Fpt(5)
    x = F5.from_digits([4, 4], 0, 2)
    y = F5.from_digits([1, 0], 0, 2)
    z = x + y
    assert z.interval == (1, 2) and z.digits == [4]


@pytest.mark.parametrize("a,b,c,d", [(3, 7, 2, 5), (0, 4, 0, 4), (-2, 3, 1, 9), (5, 6, -3, 10)])
def test_mul_div_interval_examples(ctx, a, b, c, d):
    r = random.Random(a * 100 + c)
    from ultrabroyden.field import sample_element

    x = sample_element(ctx, a, b, r)
    y = sample_element(ctx, c, d, r)
    assert (x * y).interval == (a + c, min(a + d, b + c))
    assert (x / y).interval == (a - c, min(a + d - 2 * c, b - c))


def test_interval_formula_example():
    Q = Qp(17)
    x = Q.from_digits([1, 2, 3, 4], 3, 7)
    y = Q.from_digits([5, 6, 7], 2, 5)
    assert (x * y).interval == (5, 8)
    assert (x / y).interval == (1, 4)


def test_mul_by_exact_one(ctx):
    x = sample_unit(ctx, 5, seed=3).change_prec(5)
    assert x * ctx.one(9) == x
    assert x * ctx.one() == x


def test_square_of_six_mod_25():
    Q5 = Qp(5)
    x = Q5.from_digits([1, 1], 0, 2)
    z = x * x
    assert z.interval == (0, 2) and z.digits == [1, 2]


def test_inverse_of_three_mod_343():
    Q7 = Qp(7)
    z = Q7.one(3) / Q7.from_int(3, 3)
    assert z.interval == (0, 3) and z.digits == [5, 4, 4]
    assert (3 * 5 + 3 * 4 * 7 + 3 * 4 * 49) % 343 == 1


def test_self_division(ctx):
    x = sample_unit(ctx, 6, seed=8)
    q = x / x
    assert q.interval == (0, 6) and q.digits == [1] + [0] * 5


def test_division_by_apparent_zero_carries_precision(ctx):
    with pytest.raises(PrecisionError) as info:
        ctx.one(4) / ctx.zero(5)
    assert info.value.precision == 5


def test_context_mismatch():
    with pytest.raises(ContextMismatch):
        Qp(17).one(3) + Fpt(17).one(3)
    with pytest.raises(ContextMismatch):
        Qp(17).one(3) * Qp(5).one(3)


# -- change_prec --------------------------------------------------------------


def test_change_prec_examples(ctx):
    x = ctx.from_digits([1, 2, 3, 4], 0, 4)
    lifted = change_prec(x, 6)
    assert lifted.interval == (0, 6) and lifted.digits == [1, 2, 3, 4, 0, 0]
    assert change_prec(x, 4) == x
    y = ctx.from_digits([1, 2, 3], 2, 5)
    z = change_prec(y, 1)
    assert z.is_apparent_zero and z.hi == 1


def test_destructive_change_prec(ctx):
    x = ctx.from_digits([1, 2, 3, 4], 0, 4)
    y = change_prec_(x, 2)
    assert y is x and x.interval == (0, 2) and x.digits == [1, 2]


@given(st.integers(0, 12), st.integers(1, 10), st.integers(0, 2 ** 32))
def test_change_prec_round_trip(k, rel, seed):
    for c in (Qp(P), Fpt(P)):
        x = sample_unit(c, rel, seed)
        assert change_prec(change_prec(x, x.hi + k), x.hi) == x


# -- valuation ---------------------------------------------------------------


def test_valuations():
    Q7 = Qp(7)
    assert valuation(Q7.from_digits([3, 0, 0], 2, 5)) == 2
    assert exact_oracle(7).zero().valuation() == INF
    assert Q7.zero(6).valuation() == AtLeast(6)


# -- sampling ----------------------------------------------------------------


def test_sample_unit_contract():
    F5 = Qp(5)
    for seed in range(20):
        x = sample_unit(F5, 1, seed)
        assert x.interval == (0, 1) and x.digits[0] in (1, 2, 3, 4)
    with pytest.raises(ValueError):
        sample_unit(F5, 0, 1)
    assert sample_unit(Qp(17), 12, 99) == sample_unit(Qp(17), 12, 99)


# -- oracle soundness --------------------------------------------------------


@pytest.mark.parametrize("kind", ["padic", "series"])
@given(data=st.data())
def test_oracle_soundness(kind, data):
    X, zctx = exact_pair(kind, data)
    Y, _ = exact_pair(kind, data)
    px = X.lo + data.draw(st.integers(1, 15))
    py = Y.lo + data.draw(st.integers(1, 15))
    x = to_zealous(X, px, zctx)
    y = to_zealous(Y, py, zctx)
    assert_sound(x * y, X * Y)
    assert_sound(x / y, X / Y)
    assert_sound(x + y, X + Y)
    assert_sound(x - y, X - Y)
    assert (x * y).interval == (x.lo + y.lo, min(x.lo + y.hi, x.hi + y.lo))
    assert (x / y).interval == (x.lo - y.lo, min(x.lo + y.hi - 2 * y.lo, x.hi - y.lo))


@pytest.mark.parametrize("kind", ["padic", "series"])
@given(data=st.data())
def test_ultrametric_inequality(kind, data):
    X, zctx = exact_pair(kind, data)
    Y, _ = exact_pair(kind, data)
    x = to_zealous(X, X.lo + 10, zctx)
    y = to_zealous(Y, Y.lo + 10, zctx)
    s = x + y
    v = s.valuation()
    bound = min(x.lo, y.lo)
    if isinstance(v, AtLeast):
        assert v.bound >= bound
    else:
        assert v >= bound
    if x.lo != y.lo:
        assert v == bound


@pytest.mark.parametrize("kind", ["padic", "series"])
@given(data=st.data())
def test_mul_commutative_associative(kind, data):
    c = Qp(P) if kind == "padic" else Fpt(P)
    rel = data.draw(st.integers(1, 10))
    xs = [sample_unit(c, rel, data.draw(st.integers(0, 10 ** 6))) for _ in range(3)]
    a, b, d = xs
    assert a * b == b * a
    assert (a * b) * d == a * (b * d)


# -- serialization -----------------------------------------------------------


def test_text_format_and_round_trip():
    Q17 = Qp(17)
    x = Q17.from_digits([3, 5, 0], 0, 32)
    text = x.to_text()
    assert text.startswith("17^0 * (3 + 5*17 + 0*17^2") and text.endswith("+ O(17^32)")
    assert from_text(Q17, text) == x
    z = Q17.zero(9)
    assert z.to_text() == "O(17^9)" and from_text(Q17, "O(17^9)") == z
    y = Fpt(5).from_digits([1, 4], -2, 1)
    assert y.to_text() == "t^-2 * (1 + 4*t + 0*t^2) + O(t^1)"
    assert from_text(Fpt(5), y.to_text()) == y


@pytest.mark.parametrize("value", [
    lambda c: c.from_digits([1, 2, 3], 2, 9),
    lambda c: c.zero(4),
    lambda c: c.from_int(-12),
    lambda c: c.uniformizer_power(3),
    lambda c: c.zero(),
])
def test_json_round_trip(ctx, value):
    x = value(ctx)
    assert from_json(ctx, x.to_json()) == x


def test_oracle_json_round_trip():
    o = exact_oracle(7)
    x = o.from_rational(Fraction(-49, 3))
    assert from_json(o, x.to_json()) == x
    s = exact_oracle(7, series=True).from_polynomial([1, 2], [3, 0, 1])
    assert from_json(s.ctx, s.to_json()) == s


# -- ledger hooks ------------------------------------------------------------


def test_ledger_records_products(ctx):
    led = CostLedger()
    x = sample_unit(ctx, 8, 1)
    y = sample_unit(ctx, 5, 2)
    with recording(led):
        x * y
        x / y
        ctx.zero(3) * x
    assert led.buckets("mul") == {8: 1}
    assert led.buckets("div") == {8: 1}
    assert led.cost() == 8 * 4 + (4 * 8 * 4 + 8)


def test_exact_oracle_accepts_non_unit_denominators():
    o = exact_oracle(5)
    x = o.from_rational(Fraction(3, 25))
    assert x.valuation() == -2

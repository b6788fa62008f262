import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from penner.errors import NonpositiveEvaluationPoint, SizeMismatch, ZeroPolynomial
from penner.laurent import (
    ONE,
    LaurentMatrix,
    LaurentPoly,
    at_one,
    eval_positive,
    format_poly,
    from_json_rows,
    int_det,
    mat_det,
    mat_identity,
    mat_mul,
    parse_poly,
    poly_add,
    poly_mul,
    substitute_inverse,
    t_pow,
    to_json_rows,
    top_degree,
    valuation,
)

from oracles import frac_det, padd, pmul

coeffs = st.integers(-50, 50)
polys = st.dictionaries(st.integers(-8, 8), coeffs, max_size=5).map(LaurentPoly)
nonneg_polys = st.dictionaries(st.integers(-8, 8), st.integers(1, 9), min_size=1, max_size=5).map(LaurentPoly)


def test_mul_examples():
    assert poly_mul(t_pow(-2) + 1, t_pow(2)) == ONE + t_pow(2)
    for N in range(3, 7):
        p = t_pow(1 - N) + 1
        assert poly_mul(p, ONE) == p
    assert poly_mul(t_pow(-2) + 1, t_pow(-2) + 1) == t_pow(-4) + 2 * t_pow(-2) + 1


def test_valuation_examples():
    for N in range(3, 8):
        assert valuation(t_pow(-(N - 1)) + 2) == -(N - 1)
        assert top_degree(t_pow(N - 1)) == N - 1
    assert valuation(ONE) == 0
    with pytest.raises(ZeroPolynomial):
        valuation(LaurentPoly())
    with pytest.raises(ZeroPolynomial):
        top_degree(LaurentPoly())


def test_eval_examples():
    assert eval_positive(t_pow(-2) + 2, 1) == 3
    assert math.isclose(eval_positive(t_pow(1), math.exp(0.5)), 1.6487212707001282, rel_tol=1e-15)
    assert substitute_inverse(t_pow(4)) == t_pow(-4)
    with pytest.raises(NonpositiveEvaluationPoint):
        eval_positive(ONE, 0)
    with pytest.raises(NonpositiveEvaluationPoint):
        eval_positive(ONE, -1.5)


def test_high_precision_eval(monkeypatch):
    monkeypatch.setenv("PENNER_PRECISION_BITS", "200")
    val = eval_positive(t_pow(1), 2)
    import mpmath

    assert isinstance(val, mpmath.mpf)
    assert val == 2


def test_no_zero_terms_stored():
    p = LaurentPoly({1: 2, 3: 0})
    assert p.terms == {1: 2}
    assert (p - p).terms == {}
    assert LaurentPoly().is_zero()


def test_text_form():
    p = LaurentPoly({-2: 2, 0: 1, 5: 3})
    assert format_poly(p) == "2*t^-2 + 1 + 3*t^5"
    assert parse_poly("2*t^-2 + 1 + 3*t^5") == p
    assert parse_poly("2 - t^3") == LaurentPoly({0: 2, 3: -1})
    assert format_poly(LaurentPoly()) == "0"


@given(polys)
def test_text_round_trip(p):
    assert parse_poly(format_poly(p)) == p


@given(polys, polys, polys)
def test_ring_laws(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a
    assert a * b == b * a
    assert poly_add(a, b).terms == padd(a.terms, b.terms)
    assert poly_mul(a, b).terms == pmul(a.terms, b.terms)


@given(nonneg_polys, nonneg_polys)
def test_degrees_additive(a, b):
    assert valuation(a * b) == valuation(a) + valuation(b)
    assert top_degree(a * b) == top_degree(a) + top_degree(b)


@given(polys, polys, st.floats(0.25, 4.0))
def test_eval_multiplicative(a, b, x):
    lhs = eval_positive(a * b, x)
    rhs = eval_positive(a, x) * eval_positive(b, x)
    scale = eval_positive(LaurentPoly({k: abs(c) for k, c in a.terms.items()}), x) * eval_positive(
        LaurentPoly({k: abs(c) for k, c in b.terms.items()}), x
    )
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, scale)


def test_matrix_basics():
    A = LaurentMatrix([[t_pow(1), ONE], [LaurentPoly(), t_pow(-1)]])
    assert mat_mul(A, mat_identity(2)) == A
    assert mat_det(A) == ONE
    assert from_json_rows(to_json_rows(A)) == A
    with pytest.raises(SizeMismatch):
        mat_mul(A, mat_identity(3))
    with pytest.raises(SizeMismatch):
        LaurentMatrix([[ONE, ONE]])


@given(st.lists(st.lists(st.integers(-6, 6), min_size=4, max_size=4), min_size=4, max_size=4))
def test_int_det_matches_fraction_oracle(rows):
    assert int_det(rows) == frac_det(rows)


@given(st.lists(st.lists(polys, min_size=3, max_size=3), min_size=3, max_size=3), st.sampled_from([Fraction(1), Fraction(2), Fraction(1, 3)]))
def test_laurent_det_specializes(rows, x):
    A = LaurentMatrix(rows)
    d = mat_det(A)
    from penner.laurent import eval_exact

    spec = [[eval_exact(p, x) for p in row] for row in rows]
    assert eval_exact(d, x) == frac_det(spec)


def test_at_one():
    assert at_one(LaurentPoly({-3: 2, 4: 5})) == 7

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftadd.counting import OpCount
from shiftadd.errors import ContractError
from shiftadd.sopot import (
    INFINITE_PRECISION,
    SopotValue,
    nearest_pow2_exponent,
    quantize,
    shift_add_multiply,
)


class TestQuantize:
    def test_exact_power(self):
        v = quantize(0.5, 1)
        assert v.terms == ((1, -1),)
        assert v.value == 0.5

    def test_hand_trace(self):
        # nearest power to 0.7 is 0.5, residual 0.2 rounds to 0.25
        v = quantize(0.7, 2)
        assert v.terms == ((1, -1), (1, -2))
        assert v.value == 0.75

    def test_negative_exact(self):
        v = quantize(-3.0, 2)
        assert v.value == -3.0
        # midpoint tie between 2 and 4 goes to the larger exponent
        assert v.terms == ((-1, 2), (1, 0))

    def test_zero(self):
        v = quantize(0.0, 3)
        assert v.terms == ()
        assert v.value == 0.0

    def test_midpoint_tie(self):
        assert quantize(3.0, 1).terms == ((1, 2),)
        assert abs(quantize(3.0, 1).value - 3.0) == 3.0 * 3.0**-1

    def test_infinite_precision_exact(self):
        v = quantize(0.3, INFINITE_PRECISION)
        assert v.value == 0.3

    def test_rejects_nonfinite(self):
        with pytest.raises(ContractError):
            quantize(math.inf, 2)

    def test_rejects_bad_precision(self):
        with pytest.raises(ContractError):
            quantize(1.0, 0)

    @settings(max_examples=300)
    @given(
        st.floats(min_value=-1e9, max_value=1e9, allow_nan=False),
        st.integers(min_value=1, max_value=6),
    )
    def test_error_bound(self, x, p):
        v = quantize(x, p)
        assert abs(v.value - x) <= abs(x) * 3.0**-p

    @settings(max_examples=300)
    @given(
        st.lists(
            st.tuples(st.sampled_from([-1, 1]), st.integers(-20, 20)),
            min_size=1,
            max_size=4,
        ),
        st.integers(min_value=4, max_value=8),
    )
    def test_idempotence(self, raw_terms, p):
        # canonicalize: strictly decreasing exponents
        by_exp = {}
        for s, e in raw_terms:
            by_exp[e] = s
        terms = tuple(sorted(by_exp.items(), key=lambda t: -t[0]))
        value = SopotValue(tuple((s, e) for e, s in terms)).value
        assert quantize(value, p).value == value

    @settings(max_examples=200)
    @given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
    def test_strictly_decreasing_exponents(self, x):
        v = quantize(x, 5)
        exps = [e for _, e in v.terms]
        assert all(a > b for a, b in zip(exps, exps[1:]))


class TestNearestPower:
    def test_round_down(self):
        assert nearest_pow2_exponent(1.4) == 0

    def test_round_up(self):
        assert nearest_pow2_exponent(1.6) == 1

    def test_tie_prefers_larger(self):
        assert nearest_pow2_exponent(1.5) == 1
        assert nearest_pow2_exponent(-3.0) == 2

    def test_matches_scan(self):
        import numpy as np

        rng = np.random.default_rng(2)
        for x in rng.uniform(1e-6, 1e6, size=200):
            k = nearest_pow2_exponent(float(x))
            best = min(range(k - 3, k + 4), key=lambda e: (abs(x - 2.0**e), -e))
            assert k == best


class TestShiftAddMultiply:
    def test_single_term(self):
        c = OpCount()
        assert shift_add_multiply(8.0, quantize(0.5, 1), c) == 4.0
        assert c.as_tuple() == (0, 0, 1)

    def test_empty_coefficient(self):
        c = OpCount()
        assert shift_add_multiply(123.0, SopotValue(()), c) == 0.0
        assert c.as_tuple() == (0, 0, 0)

    def test_two_terms(self):
        c = OpCount()
        coeff = SopotValue(((1, 1), (-1, -1)))
        assert shift_add_multiply(3.0, coeff, c) == 4.5
        assert c.as_tuple() == (1, 0, 2)

    def test_matches_direct_product_on_dyadics(self):
        import numpy as np

        rng = np.random.default_rng(4)
        for _ in range(100):
            v = float(rng.integers(-512, 512)) / 8.0
            coeff = quantize(float(rng.integers(-64, 64)) / 4.0, 4)
            assert shift_add_multiply(v, coeff) == v * coeff.value

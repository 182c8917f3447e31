import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twostep_cs.exceptions import BracketError, DomainError, QuadratureError
from twostep_cs.numerics import (Bracket, RandomStream, adaptive_quadrature, expand_bracket,
                                 find_root, gaussian_matrix, scaled_erf_pair, std_normal_pdf,
                                 std_normal_quantile, std_normal_tail)


class TestRandomStream:
    def test_same_id_same_sequence(self):
        a = RandomStream(42, (3, 7)).rng.standard_normal(5)
        b = RandomStream(42, (3, 7)).rng.standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_different_ids_differ(self):
        a = RandomStream(42, 0).rng.standard_normal(5)
        b = RandomStream(42, 1).rng.standard_normal(5)
        c = RandomStream(43, 0).rng.standard_normal(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_int_and_singleton_tuple_agree(self):
        a = RandomStream(5, 2).rng.random(3)
        b = RandomStream(5, (2,)).rng.random(3)
        np.testing.assert_array_equal(a, b)

    def test_spawn(self):
        s = RandomStream(9, 0)
        np.testing.assert_array_equal(s.spawn(4).rng.random(2), RandomStream(9, 4).rng.random(2))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            RandomStream(-1)
        with pytest.raises(ValueError):
            RandomStream(1, (-2,))

    def test_gaussian_matrix_shape_and_determinism(self):
        A = gaussian_matrix(3, 5, RandomStream(1, 0))
        B = gaussian_matrix(3, 5, RandomStream(1, 0))
        assert A.shape == (3, 5)
        np.testing.assert_array_equal(A, B)
        with pytest.raises(ValueError):
            gaussian_matrix(0, 5, RandomStream(1))


class TestGaussianFunctions:
    def test_tail_values(self):
        assert std_normal_tail(0.0) == 0.5
        # Q(1) from the complementary error function identity
        assert std_normal_tail(1.0) == pytest.approx(0.15865525393145707, rel=1e-14)
        # far tail keeps relative precision: Q(10) = 7.6198530241605e-24
        assert std_normal_tail(10.0) == pytest.approx(7.619853024160527e-24, rel=1e-12)

    def test_tail_rejects_nonfinite(self):
        with pytest.raises(DomainError):
            std_normal_tail(float("nan"))

    def test_quantile_known(self):
        assert std_normal_quantile(0.25) == pytest.approx(0.6744897501960817, rel=1e-13)
        assert std_normal_quantile(0.5) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_quantile_domain(self, p):
        with pytest.raises(DomainError):
            std_normal_quantile(p)

    # left of -3, Q(x) is within 1e-3 of 1 and the round trip loses digits
    @given(st.floats(min_value=-3.0, max_value=30.0))
    def test_quantile_inverts_tail(self, x):
        assert std_normal_quantile(std_normal_tail(x)) == pytest.approx(x, abs=1e-8, rel=1e-10)

    def test_pdf(self):
        assert std_normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))

    def test_scaled_erf_pair(self):
        g, G = scaled_erf_pair(0.0)
        assert G == 0.0 and g == pytest.approx(2 / math.sqrt(math.pi))
        g, G = scaled_erf_pair(np.array([0.5, 2.0]))
        np.testing.assert_allclose(G, [math.erf(0.5), math.erf(2.0)])
        with pytest.raises(DomainError):
            scaled_erf_pair(-1.0)

    def test_erf_derivative_matches_difference_quotient(self):
        x, h = 0.7, 1e-6
        g, _ = scaled_erf_pair(x)
        assert g == pytest.approx((math.erf(x + h) - math.erf(x - h)) / (2 * h), rel=1e-8)


class TestQuadrature:
    def test_polynomial(self):
        assert adaptive_quadrature(lambda t: t * t, 0.0, 3.0) == pytest.approx(9.0, abs=1e-12)

    def test_infinite_range(self):
        v = adaptive_quadrature(lambda t: math.exp(-t), 0.0, math.inf)
        assert v == pytest.approx(1.0, abs=1e-10)

    def test_reversed_and_empty(self):
        assert adaptive_quadrature(lambda t: 1.0, 2.0, 1.0) == pytest.approx(-1.0)
        assert adaptive_quadrature(lambda t: 1.0, 1.0, 1.0) == 0.0

    def test_nonconvergence_raises(self):
        with pytest.raises(QuadratureError):
            adaptive_quadrature(lambda t: math.sin(1.0 / t) / t, 1e-8, 1.0, tol=1e-14)

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            adaptive_quadrature(lambda t: t, 0, 1, tol=0.0)


class TestRootFinding:
    def test_find_root(self):
        r = find_root(lambda x: x * x - 2.0, Bracket(0.0, 2.0))
        assert r == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_same_sign_raises(self):
        with pytest.raises(BracketError):
            find_root(lambda x: x * x + 1.0, Bracket(-1.0, 1.0))

    def test_bracket_validation(self):
        with pytest.raises(ValueError):
            Bracket(1.0, 1.0)
        with pytest.raises(ValueError):
            Bracket(0.0, 1.0, tolerance=0.0)

    def test_expand_hi(self):
        br = expand_bracket(lambda x: x - 100.0, Bracket(0.0, 1.0), grow="hi")
        assert br.lo <= 100.0 <= br.hi

    def test_expand_with_floor(self):
        br = expand_bracket(lambda x: math.log(x) + 20.0, Bracket(0.5, 1.0), grow="lo", floor=0.0)
        assert br.lo > 0.0
        assert find_root(lambda x: math.log(x) + 20.0, br) == pytest.approx(math.exp(-20.0))

    def test_expand_gives_up(self):
        with pytest.raises(BracketError):
            expand_bracket(lambda x: 1.0, Bracket(0.0, 1.0), max_steps=5)

    @settings(max_examples=50)
    @given(st.floats(min_value=-50.0, max_value=50.0))
    def test_expand_then_find(self, c):
        f = lambda x: x ** 3 - c  # noqa: E731
        br = expand_bracket(f, Bracket(-0.5, 0.5))
        assert find_root(f, br) == pytest.approx(np.cbrt(c), abs=1e-9)

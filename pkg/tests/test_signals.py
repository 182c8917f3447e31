import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from twostep_cs.exceptions import DomainError
from twostep_cs.numerics import RandomStream, adaptive_quadrature
from twostep_cs.signals import (DISTRIBUTION_NAMES, Distribution, abs_mean, generate_sparse,
                                get_distribution, partial_first_moment, pdf, quantile_psi,
                                sample, tail_q)

ALL = [get_distribution(n) for n in DISTRIBUTION_NAMES]


def test_names_and_derivative_orders():
    orders = {d.name: d.derivative_order for d in ALL}
    assert orders == {"gaussian": 0, "uniform": 0, "rayleigh": 1, "chi4": 3, "chi6": 5}


def test_invalid_construction():
    with pytest.raises(ValueError):
        Distribution("cauchy")
    with pytest.raises(ValueError):
        Distribution("chi_two_sided")
    with pytest.raises(ValueError):
        Distribution("gaussian", dof=3)
    with pytest.raises(ValueError):
        Distribution("gaussian", scale=0.0)
    with pytest.raises(ValueError):
        get_distribution("laplace")


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.name)
def test_pdf_integrates_to_one(dist):
    half = adaptive_quadrature(lambda t: pdf(dist, t), 0.0, 1.0 if dist.kind == "uniform_pm1"
                               else math.inf)
    assert 2 * half == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.name)
def test_pdf_symmetric(dist):
    x = np.linspace(0.01, 3, 17)
    np.testing.assert_allclose(pdf(dist, x), pdf(dist, -x))


def test_chi_pdf_against_scipy():
    # |X| ~ chi(d), split evenly over both signs
    for d in (1, 4, 6):
        dist = Distribution("chi_two_sided", dof=d)
        x = np.linspace(0.05, 5, 9)
        np.testing.assert_allclose(pdf(dist, x), 0.5 * stats.chi(d).pdf(x), rtol=1e-12)
    assert pdf(Distribution("chi_two_sided", dof=1), 0.0) == pytest.approx(0.5 * stats.chi(1).pdf(0))


def test_rayleigh_pdf_against_scipy():
    x = np.linspace(0.05, 5, 9)
    np.testing.assert_allclose(pdf(get_distribution("rayleigh"), x), 0.5 * stats.rayleigh.pdf(x))


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.name)
def test_tail_at_zero_is_half(dist):
    assert tail_q(dist, 0.0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("name,ref", [("gaussian", stats.norm()), ("chi4", stats.chi(4)),
                                      ("chi6", stats.chi(6)), ("rayleigh", stats.rayleigh())])
def test_tail_against_scipy(name, ref):
    dist = get_distribution(name)
    for x in (0.1, 0.8, 2.0, 4.5):
        expected = ref.sf(x) if name == "gaussian" else 0.5 * ref.sf(x)
        assert tail_q(dist, x) == pytest.approx(expected, rel=1e-9, abs=1e-15)


def test_tail_domain():
    with pytest.raises(DomainError):
        tail_q(get_distribution("gaussian"), -1.0)


def test_uniform_quantile_closed_form():
    assert quantile_psi(get_distribution("uniform"), 0.25) == pytest.approx(0.5)


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.name)
@settings(max_examples=25, deadline=None)
@given(p=st.floats(min_value=1e-6, max_value=0.5))
def test_quantile_inverts_tail(dist, p):
    x = quantile_psi(dist, p)
    assert tail_q(dist, x) == pytest.approx(p, rel=1e-8, abs=1e-13)


def test_quantile_domain():
    with pytest.raises(DomainError):
        quantile_psi(get_distribution("gaussian"), 0.6)
    with pytest.raises(DomainError):
        quantile_psi(get_distribution("gaussian"), 0.0)


@pytest.mark.parametrize("name,expected", [
    ("gaussian", math.sqrt(2 / math.pi)),
    ("uniform", 0.5),
    ("rayleigh", math.sqrt(math.pi / 2)),
    # E chi(d) = sqrt(2) Gamma((d+1)/2) / Gamma(d/2)
    ("chi4", math.sqrt(2) * math.gamma(2.5) / math.gamma(2.0)),
    ("chi6", math.sqrt(2) * math.gamma(3.5) / math.gamma(3.0)),
])
def test_abs_mean(name, expected):
    assert abs_mean(get_distribution(name)) == pytest.approx(expected, rel=1e-10)


def test_partial_first_moment_gaussian_closed_form():
    g = get_distribution("gaussian")
    for a in (0.1, 1.0, 3.0):
        expected = (1 - math.exp(-a * a / 2)) / math.sqrt(2 * math.pi)
        assert partial_first_moment(g, a) == pytest.approx(expected, rel=1e-10)
    assert partial_first_moment(g, 0.0) == 0.0


def test_scale():
    d = Distribution("gaussian", scale=2.0)
    assert tail_q(d, 2.0) == pytest.approx(tail_q(get_distribution("gaussian"), 1.0))
    assert quantile_psi(d, 0.1) == pytest.approx(2 * quantile_psi(get_distribution("gaussian"), 0.1))


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.name)
def test_sample_moments(dist):
    x = sample(dist, RandomStream(11, 0), 200000)
    assert abs(np.mean(x)) < 0.02
    assert np.mean(np.abs(x)) == pytest.approx(abs_mean(dist), rel=0.01)


def test_sample_scalar():
    assert isinstance(sample(get_distribution("rayleigh"), RandomStream(1), None), float)


def test_generate_sparse_structure():
    s = generate_sparse(50, 7, get_distribution("chi4"), RandomStream(3, (1, 2)))
    assert s.n == 50 and s.k == 7
    assert np.all(np.diff(s.support) > 0)
    assert np.count_nonzero(s.values) == 7
    np.testing.assert_array_equal(np.flatnonzero(s.values), s.support)
    assert s.distribution == "chi4"


def test_generate_sparse_deterministic():
    a = generate_sparse(30, 5, get_distribution("gaussian"), RandomStream(8, 4))
    b = generate_sparse(30, 5, get_distribution("gaussian"), RandomStream(8, 4))
    np.testing.assert_array_equal(a.values, b.values)


def test_generate_sparse_edge_cases():
    s = generate_sparse(10, 0, get_distribution("gaussian"), RandomStream(1))
    assert s.k == 0 and not s.values.any()
    s = generate_sparse(10, 10, get_distribution("gaussian"), RandomStream(1))
    assert s.k == 10
    with pytest.raises(ValueError):
        generate_sparse(10, 11, get_distribution("gaussian"), RandomStream(1))


def test_support_uniform():
    # each index should be chosen with probability k/n
    counts = np.zeros(10)
    for t in range(4000):
        counts[generate_sparse(10, 3, get_distribution("gaussian"), RandomStream(2, t)).support] += 1
    np.testing.assert_allclose(counts / 4000, 0.3, atol=0.03)

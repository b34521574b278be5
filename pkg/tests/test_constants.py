import math

import numpy as np
import pytest
from scipy.integrate import quad

from kinkflow.constants import beta_integrals, compute_beta, gamma_from_gaps, toda_constants

SQ2 = math.sqrt(2)


def _w(x):
    return math.tanh(x / SQ2)


def _wp(x):
    return 1.0 / (SQ2 * math.cosh(x / SQ2) ** 2)


def test_integrals_against_adaptive_quadrature():
    num = quad(lambda x: 6 * math.exp(SQ2 * x) * (1 - _w(x) ** 2) * _wp(x), -60, 60, epsabs=1e-13, limit=400)[0]
    den = quad(lambda x: _wp(x) ** 2, -60, 60, epsabs=1e-13, limit=400)[0]
    got = beta_integrals(1e-10)
    assert got.numerator == pytest.approx(num, abs=1e-10)
    assert got.denominator == pytest.approx(den, abs=1e-10)
    assert got.numerator == pytest.approx(16.0, abs=1e-10)
    assert got.denominator == pytest.approx(2 * SQ2 / 3, abs=1e-10)


def test_tail_bounds_and_truncation_stability():
    a = beta_integrals(1e-10, half_width=40)
    b = beta_integrals(1e-10, half_width=80)
    assert max(a.tail_bound_numerator, a.tail_bound_denominator) < 1e-10
    assert abs(a.numerator - b.numerator) < 1e-12
    assert abs(a.denominator - b.denominator) < 1e-12


def test_tighter_tolerance_widens_interval():
    assert beta_integrals(1e-30).half_width > 40


def test_beta_golden_and_errors():
    assert compute_beta(1e-10) == pytest.approx(12 * SQ2, abs=1e-8)
    with pytest.raises(ValueError):
        compute_beta(0.0)


def test_k2_constants():
    c = toda_constants(2, compute_beta())
    assert c.e.tolist() == [1.0]
    assert c.b.tolist() == [0.0] or abs(c.b[0]) < 1e-15
    assert np.all(c.gamma == 0)


def test_k4_constants():
    c = toda_constants(4, 12 * SQ2)
    assert c.e.tolist() == [3.0, 4.0, 3.0]
    assert np.allclose(c.b, [-math.log(3) / SQ2, -math.log(4) / SQ2, -math.log(3) / SQ2], atol=1e-15, rtol=0)
    assert c.gamma[0] == pytest.approx(math.log(36) / (2 * SQ2), abs=1e-14)
    assert c.gamma[1] == pytest.approx(math.log(4) / (2 * SQ2), abs=1e-14)
    assert c.gamma[2] == -c.gamma[1] and c.gamma[3] == -c.gamma[0]


@pytest.mark.parametrize("k", [2, 4, 6, 8, 10])
def test_symmetries_and_tridiagonal_identity(k):
    c = toda_constants(k, 12 * SQ2)
    assert np.max(np.abs(c.b - c.b[::-1])) < 1e-14
    assert np.max(np.abs(c.gamma + c.gamma[::-1])) < 1e-14
    assert np.all(c.a > 0)
    l = np.arange(1, k)
    assert np.array_equal(c.e, (l * (k - l)).astype(float))
    C = 2 * np.eye(k - 1) - np.eye(k - 1, k=1) - np.eye(k - 1, k=-1)
    assert np.allclose(C @ c.e, 2.0, atol=1e-12, rtol=0)


def test_gamma_convention_middle_term():
    b = np.array([1.0, 2.0, 5.0, 2.0, 1.0])
    g = gamma_from_gaps(b)
    assert g[2] == -0.5 * 5.0
    assert g[0] == -0.5 * b[0:5].sum()


def test_paper_normalization_offsets_by_log_two_beta():
    beta = 12 * SQ2
    ours = toda_constants(4, beta)
    printed = toda_constants(4, beta, "paper")
    assert np.allclose(printed.b - ours.b, math.log(2 * beta) / SQ2, atol=1e-14, rtol=0)


@pytest.mark.parametrize(
    "args", [(3, 1.0), (0, 1.0), (4, 0.0), (4, -1.0)],
)
def test_invalid_inputs(args):
    with pytest.raises(ValueError):
        toda_constants(*args)


def test_unknown_normalization():
    with pytest.raises(ValueError):
        toda_constants(2, 1.0, "other")


def test_as_dict_keys():
    d = toda_constants(2, 1.0).as_dict()
    assert list(d) == ["k", "beta", "c_log", "normalization", "b", "gamma", "a", "gap_exponentials"]

"""Binomial tail math against rational and enumeration oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from framemark import InfeasibleError, binomial_tail, fpr_of_tau, select_k, select_tau


def rational_tail(n: int, p: Fraction, m: int) -> Fraction:
    """Exact Pr(B >= m) in rational arithmetic."""
    if m <= 0:
        return Fraction(1)
    if m > n:
        return Fraction(0)
    q = 1 - p
    return sum(
        (math.comb(n, k) * p**k * q**(n - k) for k in range(m, n + 1)),
        start=Fraction(0),
    )


def popcount_tail_half(n: int, m: int) -> float:
    """Pr(B >= m) at p=1/2 by enumerating all 2^n equally likely outcomes."""
    if m <= 0:
        return 1.0
    if m > n:
        return 0.0
    outcomes = np.arange(2**n, dtype=np.uint64)
    ones = np.bitwise_count(outcomes)
    return int(np.count_nonzero(ones >= m)) / 2**n


def test_tail_trivial_examples():
    assert binomial_tail(2, 0.5, 1) == pytest.approx(0.75, abs=1e-15)
    assert binomial_tail(17, 0.0, 1) == 0.0
    assert binomial_tail(5, 0.3, 0) == 1.0
    assert binomial_tail(5, 0.3, 6) == 0.0
    assert binomial_tail(4, 1.0, 3) == 1.0


def test_tail_matches_enumeration_spot():
    want = popcount_tail_half(20, 15)
    assert binomial_tail(20, 0.5, 15) == pytest.approx(want, abs=1e-12)


def test_tail_matches_enumeration_small_n_all_m():
    for n in range(0, 13):
        for m in range(0, n + 2):
            want = popcount_tail_half(n, m)
            assert binomial_tail(n, 0.5, m) == pytest.approx(want, abs=1e-12), (n, m)


def test_tail_matches_rational_various_p():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(1, 60))
        m = int(rng.integers(0, n + 2))
        p = Fraction(int(rng.integers(0, 33)), 32)
        want = float(rational_tail(n, p, m))
        assert binomial_tail(n, float(p), m) == pytest.approx(want, abs=1e-12)


def test_tail_monotone_in_m_and_p():
    for n in (1, 7, 24):
        tails = [binomial_tail(n, 0.37, m) for m in range(n + 2)]
        assert all(a >= b - 1e-15 for a, b in zip(tails, tails[1:]))
        for m in (0, n // 2, n):
            over_p = [binomial_tail(n, p, m) for p in np.linspace(0, 1, 21)]
            assert all(a <= b + 1e-12 for a, b in zip(over_p, over_p[1:]))


def test_tail_rejects_bad_arguments():
    with pytest.raises(ValueError):
        binomial_tail(4, -0.1, 1)
    with pytest.raises(ValueError):
        binomial_tail(4, 1.1, 1)
    with pytest.raises(ValueError):
        binomial_tail(4, 0.5, 6)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=48),
    num=st.integers(min_value=0, max_value=64),
    m_frac=st.floats(min_value=0.0, max_value=1.0),
)
def test_tail_rational_property(n, num, m_frac):
    p = Fraction(num, 64)
    m = round(m_frac * (n + 1))
    want = float(rational_tail(n, p, m))
    assert abs(binomial_tail(n, float(p), m) - want) <= 1e-12


def test_fpr_of_tau_paper_values():
    assert fpr_of_tau(96, Fraction(67, 96)) < 1e-4
    assert fpr_of_tau(32, Fraction(27, 32)) < 1e-4
    assert fpr_of_tau(32, Fraction(26, 32)) >= 1e-4


def test_fpr_of_tau_matches_rational():
    for n, m in [(96, 67), (32, 27), (32, 26), (10, 6)]:
        want = float(rational_tail(n, Fraction(1, 2), m))
        assert fpr_of_tau(n, Fraction(m, n)) == pytest.approx(want, abs=1e-12)


def test_fpr_of_tau_range_and_validation():
    for n in (4, 9, 33):
        for m in range(n // 2 + 1, n + 1):
            value = fpr_of_tau(n, Fraction(m, n))
            assert 0.0 <= value <= 0.5
    with pytest.raises(ValueError):
        fpr_of_tau(8, Fraction(1, 2))
    with pytest.raises(ValueError):
        fpr_of_tau(8, Fraction(9, 8))


def test_select_tau_paper_values_and_minimality():
    assert select_tau(96, 1e-4) == Fraction(67, 96)
    assert select_tau(32, 1e-4) == Fraction(27, 32)
    # one step lower violates the bound
    assert fpr_of_tau(96, Fraction(66, 96)) >= 1e-4
    assert fpr_of_tau(32, Fraction(26, 32)) >= 1e-4


def test_select_tau_tiny_n():
    assert select_tau(1, 0.6) == Fraction(1, 1)
    with pytest.raises(InfeasibleError):
        select_tau(1, 0.4)  # Pr(B >= 1) = 0.5 is not < 0.4


def test_select_tau_minimality_generic():
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = int(rng.integers(4, 120))
        eta = float(10 ** rng.uniform(-6, -1))
        try:
            tau = select_tau(n, eta)
        except InfeasibleError:
            assert binomial_tail(n, 0.5, n) >= eta
            continue
        m = int(tau * n)
        assert binomial_tail(n, 0.5, m) < eta
        assert binomial_tail(n, 0.5, m - 1) >= eta


def test_select_k_examples():
    assert select_k(9, 0.0, 1e-4) == 1
    with pytest.raises(InfeasibleError):
        select_k(5, 0.9, 1e-4)  # tail at m=5 is 0.9^5 ~ 0.59


def test_select_k_cross_checked_by_enumeration():
    p = fpr_of_tau(32, Fraction(27, 32))
    k = select_k(14, p, 1e-4)
    tails = [float(rational_tail(14, Fraction(p).limit_denominator(10**15), m))
             for m in range(16)]
    want = min(m for m in range(16) if tails[m] <= 1e-4)
    assert k == want
    assert k == 2


def test_select_k_minimality_generic():
    rng = np.random.default_rng(5)
    for _ in range(25):
        f = int(rng.integers(1, 40))
        p = float(rng.uniform(0, 0.3))
        eta = float(10 ** rng.uniform(-5, -1))
        try:
            k = select_k(f, p, eta)
        except InfeasibleError:
            assert binomial_tail(f, p, f) > eta
            continue
        assert binomial_tail(f, p, k) <= eta
        if k > 0:
            assert binomial_tail(f, p, k - 1) > eta

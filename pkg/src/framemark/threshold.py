"""Exact binomial tail math for picking detection thresholds.

The bitwise accuracy of a decoded watermark on unwatermarked content is a
scaled Binomial(n, 1/2), so the per-frame threshold tau and the
detection-threshold frame count k both reduce to binomial tail bounds.
Tails are computed by a term recurrence in 64-bit floats with Kahan
summation, which stays within 1e-12 of rational arithmetic for n <= 96.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import InfeasibleError


def binomial_tail(n: int, p: float, m: int) -> float:
    """Pr(B >= m) for B ~ Binomial(n, p); m=0 gives 1, m=n+1 gives 0."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if not 0 <= m <= n + 1:
        raise ValueError(f"m must be in [0, {n + 1}], got {m}")
    if m == 0:
        return 1.0
    if m == n + 1:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0

    # First term C(n, m) p^m q^(n-m) via logs, then the upward recurrence
    # term_{k+1} = term_k * (n-k)/(k+1) * p/q, Kahan-compensated.
    q = 1.0 - p
    log_term = (
        math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)
        + m * math.log(p) + (n - m) * math.log(q)
    )
    term = math.exp(log_term)
    ratio = p / q
    total = 0.0
    carry = 0.0
    for k in range(m, n + 1):
        y = term - carry
        t = total + y
        carry = (t - total) - y
        total = t
        term *= (n - k) / (k + 1) * ratio
    return min(total, 1.0)


def fpr_of_tau(n: int, tau) -> float:
    """Theoretical false-positive rate of the rule BA >= tau on random bits."""
    tau = Fraction(tau)
    if not Fraction(1, 2) < tau <= 1:
        raise ValueError(f"tau must be in (1/2, 1], got {tau}")
    m = math.ceil(tau * n)
    return binomial_tail(n, 0.5, m)


def select_tau(n: int, eta: float) -> Fraction:
    """Smallest threshold m/n whose false-positive bound is strictly below eta."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must be in (0, 1), got {eta}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    for m in range(0, n + 1):
        if binomial_tail(n, 0.5, m) < eta:
            return Fraction(m, n)
    raise InfeasibleError(
        f"no threshold achieves FPR < {eta} for n={n}; tail at m=n is {0.5 ** n}"
    )


def select_k(frame_count: int, p: float, eta: float = 1e-4) -> int:
    """Smallest frame count k with Pr(Binomial(F, p) >= k) <= eta."""
    if frame_count < 1:
        raise ValueError(f"frame count must be >= 1, got {frame_count}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must be in (0, 1), got {eta}")
    for m in range(0, frame_count + 1):
        if binomial_tail(frame_count, p, m) <= eta:
            return m
    raise InfeasibleError(
        f"no frame threshold achieves FPR <= {eta} for F={frame_count}, p={p}"
    )

"""The confluent hypergeometric limit function 0F1(;1;z) and double factorials.

Every integral representation of a kernel factor has 0F1(;1;z) as its
integrand.  For real arguments it reduces to modified / ordinary Bessel
functions of order zero::

    0F1(;1;z) = I0(2 sqrt(z))      z >= 0
    0F1(;1;z) = J0(2 sqrt(-z))     z <  0

which is what the vectorized :func:`hyp0f1_one` uses.  The defining power
series is available as :func:`hyp0f1_series` for cross-checks.
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import DomainError, HypergeometricError, ConfigError

__all__ = ["HypEvalPolicy", "hyp0f1_one", "hyp0f1_series", "double_factorial"]


@dataclass(frozen=True)
class HypEvalPolicy:
    series_tolerance: float = 1e-15
    max_terms: int = 500

    def __post_init__(self):
        if not self.series_tolerance > 0:
            raise ConfigError("series_tolerance must be positive")
        if self.max_terms < 1:
            raise ConfigError("max_terms must be at least 1")


DEFAULT_POLICY = HypEvalPolicy()


def hyp0f1_one(z):
    """Evaluate 0F1(;1;z) for real ``z`` (scalar or array) via Bessel identities.

    Overflows to ``inf`` for z above roughly 1.26e5, where I0(2 sqrt z)
    exceeds the double range.
    """
    z = np.asarray(z, dtype=float)
    root = 2.0 * np.sqrt(np.abs(z))
    out = np.where(z >= 0, sp.i0(root), sp.j0(root))
    return out if out.ndim else float(out)


def hyp0f1_series(z: float, policy: HypEvalPolicy = DEFAULT_POLICY, exact: bool = False) -> float:
    """Sum z**k / (k!)**2 directly with term recursion.

    In floating point the alternating series (z < 0) loses about
    log10(max term) digits to cancellation, roughly 5 digits at z = -30.
    ``exact=True`` sums the terms as rationals (the float ``z`` is exact)
    and rounds once at the end, which makes the result a reference value.
    """
    z = float(z)
    if not math.isfinite(z):
        raise DomainError("z must be finite")
    if exact:
        zq = Fraction(z)
        tol = Fraction(policy.series_tolerance) / 100
        term = partial = Fraction(1)
        for k in range(1, policy.max_terms + 1):
            term *= zq / (k * k)
            partial += term
            if k * k > abs(z) and abs(term) <= tol * abs(partial):
                return float(partial)
        raise HypergeometricError(z, policy.max_terms)
    term = 1.0
    terms = [term]
    partial = 1.0
    for k in range(1, policy.max_terms + 1):
        term *= z / (k * k)
        terms.append(term)
        partial += term
        # terms only start shrinking once k exceeds sqrt|z|
        if k * k > abs(z) and abs(term) <= policy.series_tolerance * abs(partial):
            return math.fsum(terms)
    raise HypergeometricError(z, policy.max_terms)


def double_factorial(n: int) -> int:
    """n!! with the conventions (-1)!! = 0!! = 1."""
    n = int(n)
    if n < -1:
        raise DomainError(f"double factorial undefined for n={n}")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out

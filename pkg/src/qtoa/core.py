"""Physical parameters, potentials and classical arrival times."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainError, SeriesDivergenceError
from .special import double_factorial

__all__ = [
    "PhysicalParams",
    "Free",
    "Harmonic",
    "Sinusoidal",
    "Polynomial",
    "Potential",
    "PhaseSpacePoint",
    "potential_eval",
    "classical_toa_harmonic",
    "ltoa_series",
    "LTOAResult",
]


@dataclass(frozen=True)
class PhysicalParams:
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ConfigError("mass must be positive")
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ConfigError("hbar must be positive")


@dataclass(frozen=True)
class PhaseSpacePoint:
    q: float
    p: float


class _PotentialBase:
    """Shared behaviour.  Subclasses implement ``__call__`` (vectorized),
    ``is_even`` and ``reflected`` (the potential V(-q))."""

    def polynomial_coefficients(self) -> np.ndarray:
        raise DomainError(f"{type(self).__name__} has no finite polynomial form")


@dataclass(frozen=True)
class Free(_PotentialBase):
    def __call__(self, q):
        return np.zeros_like(np.asarray(q, dtype=float))

    @property
    def is_even(self) -> bool:
        return True

    def reflected(self):
        return self

    def polynomial_coefficients(self):
        return np.zeros(1)


@dataclass(frozen=True)
class Harmonic(_PotentialBase):
    """V(q) = mass * omega**2 * q**2 / 2."""

    omega: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ConfigError("omega must be positive")
        if not self.mass > 0:
            raise ConfigError("mass must be positive")

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        return 0.5 * self.mass * self.omega**2 * q * q

    @property
    def is_even(self) -> bool:
        return True

    def reflected(self):
        return self

    def polynomial_coefficients(self):
        return np.array([0.0, 0.0, 0.5 * self.mass * self.omega**2])


@dataclass(frozen=True)
class Sinusoidal(_PotentialBase):
    """V(q) = amplitude * sin(wavenumber * q)."""

    amplitude: float = 1.0
    wavenumber: float = 1.0

    def __call__(self, q):
        return self.amplitude * np.sin(self.wavenumber * np.asarray(q, dtype=float))

    @property
    def is_even(self) -> bool:
        return self.amplitude == 0 or self.wavenumber == 0

    def reflected(self):
        return Sinusoidal(-self.amplitude, self.wavenumber)


@dataclass(frozen=True)
class Polynomial(_PotentialBase):
    """V(q) = sum_n coefficients[n] * q**n."""

    coefficients: tuple = field(default=(0.0,))

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ConfigError("polynomial potential needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ConfigError("polynomial coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        return np.polynomial.polynomial.polyval(q, self.coefficients)

    @property
    def is_even(self) -> bool:
        return all(c == 0 for c in self.coefficients[1::2])

    def reflected(self):
        return Polynomial(tuple(c if n % 2 == 0 else -c for n, c in enumerate(self.coefficients)))

    def polynomial_coefficients(self):
        return np.array(self.coefficients)


Potential = Union[Free, Harmonic, Sinusoidal, Polynomial]


def potential_eval(V: Potential, q: float) -> float:
    if not math.isfinite(q):
        raise DomainError("q must be finite")
    return float(V(q))


def classical_toa_harmonic(params: PhysicalParams, omega: float, point: PhaseSpacePoint) -> float:
    """First arrival time at the origin for the oscillator, principal branch."""
    if point.p == 0:
        raise DomainError("stationary-turning input: p = 0")
    return -math.atan(params.mass * omega * point.q / point.p) / omega


@dataclass(frozen=True)
class LTOAResult:
    value: float
    error: float
    terms: tuple

    def __iter__(self):
        return iter((self.value, self.error))


def ltoa_series(
    params: PhysicalParams,
    V: Potential,
    x: float,
    point: PhaseSpacePoint,
    k_max: int,
    epsabs: float = 1e-12,
) -> LTOAResult:
    """Local time of arrival at ``x``: the expansion of the classical arrival
    time about the free arrival time, truncated after order ``k_max``.

    Inner integrals of (V(q) - V(s))**k are done by adaptive quadrature, so
    any potential works.  The returned error is the magnitude of the last
    included term.  Three consecutive non-shrinking nonzero terms raise
    :class:`SeriesDivergenceError`.
    """
    q, p = point.q, point.p
    if p == 0:
        raise DomainError("stationary-turning input: p = 0")
    if k_max < 0:
        raise DomainError("k_max must be non-negative")
    mu = params.mass
    vq = float(V(q))
    terms = []
    rising = 0
    for k in range(k_max + 1):
        if k == 0:
            inner = q - x
        else:
            inner, _ = integrate.quad(
                lambda s, k=k: (vq - float(V(s))) ** k, x, q, epsabs=epsabs, epsrel=1e-12, limit=200
            )
        coeff = (-1) ** k * double_factorial(2 * k - 1) / math.factorial(k)
        term = -coeff * mu ** (k + 1) / p ** (2 * k + 1) * inner
        if terms and abs(term) >= abs(terms[-1]) > 0:
            rising += 1
            if rising >= 3:
                raise SeriesDivergenceError(
                    f"series diverging at this phase-space point (q={q}, p={p}, k={k})"
                )
        else:
            rising = 0
        terms.append(term)
    return LTOAResult(math.fsum(terms), abs(terms[-1]), tuple(terms))

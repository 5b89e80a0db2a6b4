"""Kernel factors T_Q(q, q') and operator kernels for quantized arrival-time operators.

Every quantization of the local time of arrival yields an integral operator
with kernel ``(mu / i hbar) T_Q(q, q') sgn(q - q')``; orderings differ only in
the real symmetric kernel factor ``T_Q``.  This module evaluates ``T_Q``

* by adaptive quadrature of the 0F1 integral representations (Weyl,
  simple-symmetric, Born-Jordan; any potential),
* in closed form for the harmonic oscillator,
* through the truncated J_k series for arbitrary coefficient orderings on
  polynomial potentials,

and multiplies by a deformation Omega(q - q') when requested.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence, Union

import numpy as np

from .core import Free, Harmonic, PhysicalParams, Potential
from .errors import ConfigError, DomainError, KernelOverflowError, QuadratureError, SeriesDivergenceError
from .quadrature import DEFAULT_QUAD, QuadPolicy, integrate_batch
from .special import hyp0f1_one

__all__ = [
    "Ordering",
    "GeneralPolynomial",
    "Deformation",
    "Deformed",
    "QuantizationScheme",
    "quadratic_deformation",
    "quantizing_polynomial",
    "kernel_factor",
    "kernel_factor_harmonic_closed",
    "KernelFactor",
    "OperatorKernel",
    "assemble_kernel",
    "moment_coefficients",
    "scheme_name",
]

EPS_DIAG = 1e-8
# exp() overflows just above 709.78
_LOG_MAX = 709.0
_CHUNK = {"weyl": 1 << 16, "symmetric": 1 << 15, "born_jordan": 1 << 11}


class Ordering(str, Enum):
    WEYL = "weyl"
    SYMMETRIC = "symmetric"
    BORN_JORDAN = "born_jordan"


@dataclass(frozen=True)
class GeneralPolynomial:
    """Ordering rule given by coefficient rows a_j^(n), j = 0..n.

    ``rows`` is either a callable ``n -> sequence of n+1 numbers`` or an
    explicit sequence of rows (order n uses ``rows[n]``).  Rows must satisfy
    a_j = conj(a_{n-j}) and have nonzero sum.
    """

    rows: Union[Callable[[int], Sequence[complex]], Sequence[Sequence[complex]]]
    name: str = "general"

    def __post_init__(self):
        for n in range(min(8, self._available_orders())):
            self.coefficients(n)

    def _available_orders(self) -> int:
        return 10**9 if callable(self.rows) else len(self.rows)

    def coefficients(self, n: int) -> np.ndarray:
        if n < 0:
            raise DomainError("order must be non-negative")
        if callable(self.rows):
            row = self.rows(n)
        else:
            if n >= len(self.rows):
                raise DomainError(f"no coefficient row for order {n}")
            row = self.rows[n]
        row = np.asarray(row)
        if row.shape != (n + 1,):
            raise ConfigError(f"row {n} must have {n + 1} coefficients")
        if not np.allclose(row, np.conj(row[::-1]), rtol=1e-14, atol=0):
            raise ConfigError(f"row {n} violates a_j = conj(a_(n-j))")
        if row.sum() == 0:
            raise ConfigError(f"row {n} has zero sum")
        if not np.iscomplexobj(row) or np.all(row.imag == 0):
            row = row.real.astype(float)
        return row

    @classmethod
    def weyl(cls):
        return cls(lambda n: [float(math.comb(n, j)) for j in range(n + 1)], "general-weyl")

    @classmethod
    def symmetric(cls):
        return cls(lambda n: [1.0] if n == 0 else [1.0] + [0.0] * (n - 1) + [1.0], "general-symmetric")

    @classmethod
    def born_jordan(cls):
        return cls(lambda n: [1.0] * (n + 1), "general-born-jordan")


@dataclass(frozen=True)
class Deformation:
    """Even smooth factor Omega(x) of the separation x = q - q', Omega(0) = 1."""

    function: Callable = field(compare=False)
    description: str = "deformation"

    def __post_init__(self):
        if abs(float(self.function(0.0)) - 1.0) > 1e-12:
            raise ConfigError("deformation must satisfy Omega(0) = 1")
        probe = np.linspace(0.05, 3.0, 13)
        a = np.asarray(self.function(probe), dtype=float)
        b = np.asarray(self.function(-probe), dtype=float)
        if not np.allclose(a, b, rtol=1e-12, atol=0):
            raise ConfigError("deformation must be even")

    def __call__(self, x):
        return self.function(np.asarray(x, dtype=float))


def quadratic_deformation(alpha: float) -> Deformation:
    """Omega(x) = 1 + alpha x**2."""
    alpha = float(alpha)
    return Deformation(lambda x: 1.0 + alpha * np.square(x), f"1+{alpha:g}x^2")


@dataclass(frozen=True)
class Deformed:
    base: "QuantizationScheme"
    deformation: Deformation


QuantizationScheme = Union[Ordering, GeneralPolynomial, Deformed]


def scheme_name(scheme) -> str:
    if isinstance(scheme, Ordering):
        return scheme.value
    if isinstance(scheme, GeneralPolynomial):
        return scheme.name
    if isinstance(scheme, Deformed):
        return f"{scheme_name(scheme.base)}*[{scheme.deformation.description}]"
    raise TypeError(f"not a quantization scheme: {scheme!r}")


def _base_ordering(scheme):
    while isinstance(scheme, Deformed):
        scheme = scheme.base
    return scheme


def _omega(scheme, x):
    out = 1.0
    while isinstance(scheme, Deformed):
        out = out * scheme.deformation(x)
        scheme = scheme.base
    return out


# ---------------------------------------------------------------------------
# quantizing polynomials


def quantizing_polynomial(scheme: QuantizationScheme, n: int, q, qp, eps_diag: float = EPS_DIAG):
    """P_n(q|q') for the scheme; reduces to q**n on the diagonal."""
    if n < 0:
        raise DomainError("order must be non-negative")
    q = np.asarray(q, dtype=float)
    qp = np.asarray(qp, dtype=float)
    if isinstance(scheme, Deformed):
        return quantizing_polynomial(scheme.base, n, q, qp, eps_diag) * _omega(scheme, q - qp)
    if scheme is Ordering.WEYL:
        return (0.5 * (q + qp)) ** n
    if scheme is Ordering.SYMMETRIC:
        return 0.5 * (q**n + qp**n)
    if scheme is Ordering.BORN_JORDAN:
        x = q - qp
        near = np.abs(x) < eps_diag
        with np.errstate(divide="ignore", invalid="ignore"):
            closed = (q ** (n + 1) - qp ** (n + 1)) / ((n + 1) * np.where(near, 1.0, x))
        summed = sum(q**j * qp ** (n - j) for j in range(n + 1)) / (n + 1)
        return np.where(near, summed, closed)
    if isinstance(scheme, GeneralPolynomial):
        row = scheme.coefficients(n)
        acc = sum(row[j] * q**j * qp ** (n - j) for j in range(n + 1))
        return acc / row.sum()
    raise TypeError(f"not a quantization scheme: {scheme!r}")


# ---------------------------------------------------------------------------
# integral representations


def _coupling(params: PhysicalParams, x):
    return params.mass * x * x / (2.0 * params.hbar**2)


def _weyl_integral(V, params, q, qp, policy):
    m = 0.5 * (q + qp)
    c = _coupling(params, q - qp)
    vm = V(m)

    def integrand(s, k):
        return hyp0f1_one(c[k] * (vm[k] - V(s)))

    return 0.5 * integrate_batch(integrand, np.zeros_like(m), m, policy)


def _symmetric_integral(V, params, q, qp, policy):
    c = _coupling(params, q - qp)
    ends = np.concatenate([q, qp])
    cc = np.concatenate([c, c])
    vend = V(ends)

    def integrand(s, k):
        return hyp0f1_one(cc[k] * (vend[k] - V(s)))

    both = integrate_batch(integrand, np.zeros_like(ends), ends, policy)
    n = q.size
    return 0.25 * (both[:n] + both[n:])


def _inner_policy(policy: QuadPolicy) -> QuadPolicy:
    return QuadPolicy(policy.epsabs / 10, policy.epsrel / 10, policy.max_depth, policy.max_intervals)


def _bj_inner(V, c, s, policy):
    """g(s) = int_0^s 0F1(;1; c (V(s) - V(u))) du for paired arrays c, s."""
    vs = V(s)

    def integrand(u, j):
        return hyp0f1_one(c[j] * (vs[j] - V(u)))

    return integrate_batch(integrand, np.zeros_like(s), s, policy)


def _born_jordan_integral(V, params, q, qp, policy, eps_diag):
    # The difference of the two double integrals over 2(q - q') equals half
    # the mean of g over [q', q]; write s = q' + t (q - q') with t in [0, 1].
    x = q - qp
    c = _coupling(params, x)
    inner = _inner_policy(policy)
    out = np.empty_like(q)
    near = np.abs(x) < eps_diag
    if near.any():
        out[near] = 0.5 * _bj_inner(V, c[near], 0.5 * (q[near] + qp[near]), inner)
    far = ~near
    if far.any():
        qf, xf, cf = qp[far], x[far], c[far]

        def outer(t, k):
            return _bj_inner(V, cf[k], qf[k] + t * xf[k], inner)

        n = qf.size
        out[far] = 0.5 * integrate_batch(outer, np.zeros(n), np.ones(n), policy)
    return out


def kernel_factor(
    scheme: QuantizationScheme,
    V: Potential,
    params: PhysicalParams,
    q,
    qp,
    policy: QuadPolicy = DEFAULT_QUAD,
    eps_diag: float = EPS_DIAG,
    k_max: int = 400,
):
    """Kernel factor from the integral (or, for general orderings, series) representation.

    ``q`` and ``qp`` broadcast against each other.  Named orderings always use
    quadrature here, whatever the potential; see :class:`KernelFactor` for
    automatic use of closed forms.
    """
    q, qp = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(qp, dtype=float))
    shape = q.shape
    qf, qpf = q.ravel(), qp.ravel()
    if not (np.all(np.isfinite(qf)) and np.all(np.isfinite(qpf))):
        raise DomainError("kernel arguments must be finite")
    base = _base_ordering(scheme)
    if isinstance(base, GeneralPolynomial):
        out = _general_series(base, V, params, qf, qpf, k_max=k_max)
    elif isinstance(base, Ordering):
        out = np.empty(qf.size)
        step = _CHUNK[base.value]
        for start in range(0, qf.size, step):
            sl = slice(start, start + step)
            a, b = qf[sl], qpf[sl]
            try:
                if base is Ordering.WEYL:
                    out[sl] = _weyl_integral(V, params, a, b, policy)
                elif base is Ordering.SYMMETRIC:
                    out[sl] = _symmetric_integral(V, params, a, b, policy)
                else:
                    out[sl] = _born_jordan_integral(V, params, a, b, policy, eps_diag)
            except QuadratureError as exc:
                # report the position in the caller's flattened pair list
                index = None if exc.index is None else start + exc.index % a.size
                raise QuadratureError(str(exc), index, exc.interval, exc.error) from exc
    else:
        raise TypeError(f"not a quantization scheme: {scheme!r}")
    out = out * _omega(scheme, qf - qpf)
    return out.reshape(shape) if shape else out[()]


# ---------------------------------------------------------------------------
# general orderings through the J_k series


def moment_coefficients(coeffs, k: int) -> np.ndarray:
    """Coefficients a_n(k) with int_0^q (V(q) - V(s))**k ds = sum_n a_n(k) q**n.

    Uses s = q u: the integrand becomes q**(k+1)-free powers of
    B_u(q) = sum_m v_m (1 - u**m) q**m, integrated over u by Gauss-Legendre
    exactly.  This avoids the alternating binomial sums of a direct
    expansion.  Returned array is indexed by n (a_0 = 0).
    """
    v = np.asarray(coeffs, dtype=float)
    d = max(len(v) - 1, 0)
    out = np.zeros(k * d + 2)
    if k == 0:
        out[1] = 1.0
        return out
    if d == 0:
        return out
    nodes, weights = np.polynomial.legendre.leggauss(k * d // 2 + 2)
    u = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    powers = np.arange(len(v))
    acc = np.zeros(k * d + 1)
    for ui, wi in zip(u, w):
        base = v * (1.0 - ui**powers)
        acc += wi * np.polynomial.polynomial.polypow(base, k)[: k * d + 1]
    # int_0^q ... ds = q * int_0^1 B_u(q)**k du
    out[1:] = acc
    return out


def _general_series(scheme: GeneralPolynomial, V, params, q, qp, k_max=400, tol=1e-16):
    coeffs = V.polynomial_coefficients()
    c = _coupling(params, q - qp)
    total = np.zeros(q.size, dtype=complex if _row_is_complex(scheme) else float)
    cache = {}

    def P(n):
        if n not in cache:
            cache[n] = quantizing_polynomial(scheme, n, q, qp)
        return cache[n]

    quiet = 0
    ck = np.ones_like(c)
    for k in range(k_max + 1):
        if k:
            ck = ck * c / (k * k)
        a = moment_coefficients(coeffs, k)
        J = sum(a[n] * P(n) for n in range(1, len(a)) if a[n] != 0)
        if np.isscalar(J) and J == 0:
            term = np.zeros_like(total)
        else:
            term = 0.5 * ck * J
        total = total + term
        scale = np.maximum(np.abs(total), 1e-300)
        if not np.all(np.isfinite(total)):
            raise SeriesDivergenceError("J_k series overflowed")
        if k > 0 and np.all(np.abs(term) <= tol * scale):
            quiet += 1
            if quiet >= 2:
                return total
        else:
            quiet = 0
    raise SeriesDivergenceError(f"J_k series not converged after k_max={k_max} terms")


def _row_is_complex(scheme: GeneralPolynomial) -> bool:
    return any(np.iscomplexobj(scheme.coefficients(n)) for n in range(1, 4))


# ---------------------------------------------------------------------------
# harmonic oscillator closed forms


def _scaled_sinh(a, shift):
    # np.sinh keeps small arguments accurate; shifted values only arise
    # for |a| > 350 where exp(-|a|) is negligible
    big = 0.5 * np.sign(a) * np.exp(np.abs(a) - shift)
    return np.where(shift > 0, big, np.sinh(np.where(shift > 0, 0.0, a)))


def _scaled_cosh(a, shift):
    big = 0.5 * np.exp(np.abs(a) - shift)
    return np.where(shift > 0, big, np.cosh(np.where(shift > 0, 0.0, a)))


def _finish(scaled, shift, args):
    """scaled * exp(shift), refusing results beyond the double range."""
    with np.errstate(divide="ignore"):
        logmag = shift + np.log(np.abs(scaled))
    bad = np.isfinite(logmag) & (logmag > _LOG_MAX)
    if np.any(bad):
        raise KernelOverflowError(float(np.max(np.abs(args)[bad])))
    return scaled * np.exp(shift)


def kernel_factor_harmonic_closed(
    scheme: QuantizationScheme,
    params: PhysicalParams,
    omega: float,
    q,
    qp,
    eps_diag: float = EPS_DIAG,
):
    """Closed-form oscillator kernel factors (sinh/cosh forms).

    Near the diagonal (|q - q'| < eps_diag) the removable singularities are
    replaced by their Taylor expansions.  Arguments above 700 are handled in
    log space; unrepresentable results raise :class:`KernelOverflowError`.
    """
    base = _base_ordering(scheme)
    if not isinstance(base, Ordering):
        raise DomainError("closed forms exist only for the Weyl, symmetric and Born-Jordan orderings")
    q, qp = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(qp, dtype=float))
    c = params.mass * omega / params.hbar
    x = q - qp
    s = q + qp
    near = np.abs(x) < eps_diag
    xs = np.where(near, 1.0, x)
    with np.errstate(over="ignore", invalid="ignore"):
        if base is Ordering.WEYL:
            a = 0.5 * c * xs * s
            shift = np.maximum(np.abs(a) - 700.0, 0.0)
            num = _scaled_sinh(a, shift)
            far = _finish(num / (2.0 * c * xs), shift, a)
            an = 0.5 * c * x * s
            series = 0.25 * s * (1.0 + an * an / 6.0)
        elif base is Ordering.SYMMETRIC:
            a, b = c * q * xs, c * qp * xs
            # sinh a + sinh b = 2 sinh((a+b)/2) cosh((a-b)/2); the direct
            # sum cancels as q' -> -q
            hp, hm = 0.5 * c * xs * s, 0.5 * c * xs * xs
            sp = np.maximum(np.abs(hp) - 350.0, 0.0)
            sm = np.maximum(hm - 350.0, 0.0)
            shift = sp + sm
            num = 2.0 * _scaled_sinh(hp, sp) * _scaled_cosh(hm, sm)
            far = _finish(num / (4.0 * c * xs), shift, np.maximum(np.abs(a), np.abs(b)))
            series = 0.25 * s + c * c * x * x * (q**3 + qp**3) / 24.0
        else:
            a, b = c * q * xs, c * qp * xs
            # cosh a - cosh b = 2 sinh((a+b)/2) sinh((a-b)/2); the direct
            # difference cancels catastrophically as q' -> q
            hp, hm = 0.5 * c * xs * s, 0.5 * c * xs * xs
            sp = np.maximum(np.abs(hp) - 350.0, 0.0)
            sm = np.maximum(np.abs(hm) - 350.0, 0.0)
            shift = sp + sm
            num = 2.0 * _scaled_sinh(hp, sp) * _scaled_sinh(hm, sm)
            far = _finish(num / (2.0 * c * c * xs**3), shift, np.maximum(np.abs(a), np.abs(b)))
            series = 0.25 * s + c * c * x * x * s * (q * q + qp * qp) / 48.0
    out = np.where(near, series, far) * _omega(scheme, x)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# kernel objects


@dataclass(frozen=True)
class KernelFactor:
    """Evaluator for T_Q(q, q') bound to a scheme, potential and parameters.

    ``method`` is ``"auto"`` (closed form for free/harmonic potentials with a
    named ordering, quadrature otherwise), ``"closed"`` or ``"quadrature"``.
    """

    scheme: QuantizationScheme
    potential: Potential
    params: PhysicalParams = PhysicalParams()
    method: str = "auto"
    quad: QuadPolicy = DEFAULT_QUAD
    eps_diag: float = EPS_DIAG

    def __post_init__(self):
        if self.method not in ("auto", "closed", "quadrature"):
            raise ConfigError(f"unknown kernel method {self.method!r}")
        if self.method == "closed" and not self.has_closed_form:
            raise ConfigError("no closed form for this scheme/potential")

    @property
    def has_closed_form(self) -> bool:
        return isinstance(_base_ordering(self.scheme), Ordering) and isinstance(self.potential, (Free, Harmonic))

    @property
    def uses_closed_form(self) -> bool:
        return self.method == "closed" or (self.method == "auto" and self.has_closed_form)

    def __call__(self, q, qp):
        if self.uses_closed_form:
            q, qp = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(qp, dtype=float))
            if isinstance(self.potential, Free):
                out = 0.25 * (q + qp) * _omega(self.scheme, q - qp)
                return out if out.ndim else float(out)
            return kernel_factor_harmonic_closed(
                self.scheme, self.params, self.potential.omega, q, qp, self.eps_diag
            )
        return kernel_factor(self.scheme, self.potential, self.params, q, qp, self.quad, self.eps_diag)

    def with_potential(self, potential):
        return KernelFactor(self.scheme, potential, self.params, self.method, self.quad, self.eps_diag)

    def with_scheme(self, scheme):
        return KernelFactor(scheme, self.potential, self.params, self.method, self.quad, self.eps_diag)

    def describe(self) -> str:
        how = "closed" if self.uses_closed_form else "quadrature"
        return f"{scheme_name(self.scheme)} / {self.potential!r} / {how}"


@dataclass(frozen=True)
class OperatorKernel:
    """K(q, q') = -i (mu/hbar) T_Q(q, q') sgn(q - q'), with sgn(0) = 0."""

    factor: KernelFactor
    params: PhysicalParams

    def __call__(self, q, qp):
        q, qp = np.broadcast_arrays(np.asarray(q, dtype=float), np.asarray(qp, dtype=float))
        T = self.factor(q, qp)
        out = -1j * (self.params.mass / self.params.hbar) * T * np.sign(q - qp)
        return out if np.ndim(out) else complex(out)

    def describe(self) -> str:
        return self.factor.describe()


def assemble_kernel(factor: KernelFactor, params: PhysicalParams | None = None) -> OperatorKernel:
    return OperatorKernel(factor, params if params is not None else factor.params)

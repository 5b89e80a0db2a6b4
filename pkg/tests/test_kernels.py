import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtoa.core import Free, Harmonic, PhysicalParams, Polynomial, Sinusoidal
from qtoa.errors import ConfigError, DomainError, KernelOverflowError, QuadratureError
from qtoa.kernels import (
    Deformation,
    Deformed,
    GeneralPolynomial,
    KernelFactor,
    Ordering,
    assemble_kernel,
    kernel_factor,
    kernel_factor_harmonic_closed,
    moment_coefficients,
    quadratic_deformation,
    quantizing_polynomial,
)
from qtoa.quadrature import QuadPolicy

UNIT = PhysicalParams()
NAMED = list(Ordering)


def test_quantizing_polynomial_examples():
    assert quantizing_polynomial(Ordering.WEYL, 1, 2.0, 0.0) == 1.0
    assert quantizing_polynomial(Ordering.SYMMETRIC, 2, 1.0, 3.0) == 5.0
    assert quantizing_polynomial(Ordering.BORN_JORDAN, 2, 1.0, 1.0) == 1.0


@pytest.mark.parametrize("scheme", NAMED + [GeneralPolynomial.weyl(), GeneralPolynomial([[1], [1, 1], [1, 4, 1], [2, 1, 1, 2]])])
def test_quantizing_polynomial_diagonal(scheme):
    q = np.linspace(-2, 2, 9)
    for n in range(4):
        assert np.allclose(quantizing_polynomial(scheme, n, q, q), q**n, rtol=1e-14, atol=1e-14)


def test_born_jordan_polynomial_near_diagonal():
    q, qp = 1.3, 1.3 + 1e-10
    summed = sum(q**j * qp ** (3 - j) for j in range(4)) / 4
    assert quantizing_polynomial(Ordering.BORN_JORDAN, 3, q, qp) == pytest.approx(summed, rel=1e-15)


def test_general_rows_reproduce_named_orderings():
    q = np.linspace(-2, 2, 7)
    Q, P = np.meshgrid(q, q)
    pairs = [(GeneralPolynomial.weyl(), Ordering.WEYL), (GeneralPolynomial.symmetric(), Ordering.SYMMETRIC),
             (GeneralPolynomial.born_jordan(), Ordering.BORN_JORDAN)]
    for general, named in pairs:
        for n in range(6):
            assert np.allclose(quantizing_polynomial(general, n, Q, P), quantizing_polynomial(named, n, Q, P), rtol=1e-13, atol=1e-13)


def test_general_row_validation():
    with pytest.raises(ConfigError, match="conj"):
        GeneralPolynomial([[1], [1, 2]])
    with pytest.raises(ConfigError, match="zero sum"):
        GeneralPolynomial([[1], [1, 1], [1, -2, 1]])
    with pytest.raises(ConfigError, match="coefficients"):
        GeneralPolynomial([[1], [1, 1, 1]])


def test_deformation_validation():
    with pytest.raises(ConfigError):
        Deformation(lambda x: 2.0 + 0 * x, "bad origin")
    with pytest.raises(ConfigError):
        Deformation(lambda x: 1.0 + x, "odd")
    d = quadratic_deformation(3.0)
    assert d(0.0) == 1.0
    assert d(2.0) == 13.0


def test_free_particle_examples():
    for scheme in NAMED:
        assert kernel_factor(scheme, Free(), UNIT, 1.0, 3.0) == pytest.approx(1.0, abs=1e-12)
        assert kernel_factor(scheme, Harmonic(), UNIT, 0.8, 0.8) == pytest.approx(0.4, abs=1e-12)


def test_weyl_harmonic_example():
    expected = 0.5 * math.sinh(0.5)
    assert kernel_factor(Ordering.WEYL, Harmonic(), UNIT, 1.0, 0.0) == pytest.approx(expected, rel=1e-9)
    assert kernel_factor_harmonic_closed(Ordering.WEYL, UNIT, 1.0, 1.0, 0.0) == pytest.approx(0.2605477, abs=5e-8)
    assert kernel_factor_harmonic_closed(Ordering.WEYL, UNIT, 1.0, 1.0, -1.0) == 0.0


@pytest.mark.parametrize("scheme", NAMED)
def test_closed_form_diagonal(scheme):
    assert kernel_factor_harmonic_closed(scheme, UNIT, 1.0, 0.8, 0.8) == pytest.approx(0.4, abs=1e-15)


@pytest.mark.parametrize("scheme", NAMED)
def test_closed_form_series_branch_is_continuous(scheme):
    q = 1.7
    inside = kernel_factor_harmonic_closed(scheme, UNIT, 1.0, q, q + 0.9e-8)
    outside = kernel_factor_harmonic_closed(scheme, UNIT, 1.0, q, q + 1.2e-8)
    assert inside == pytest.approx(outside, rel=1e-7)


def test_closed_forms_against_multiprecision():
    mp.mp.dps = 40
    for q, qp in [(1.0, -0.3), (2.5, 1.1), (-2.9, 0.4)]:
        x = mp.mpf(q) - mp.mpf(qp)
        Q, P = mp.mpf(q), mp.mpf(qp)
        w = mp.sinh(x * (Q + P) / 2) / (2 * x)
        s = (mp.sinh(Q * x) + mp.sinh(P * x)) / (4 * x)
        b = (mp.cosh(Q * x) - mp.cosh(P * x)) / (2 * x**3)
        for scheme, ref in zip(NAMED, (w, s, b)):
            assert kernel_factor_harmonic_closed(scheme, UNIT, 1.0, q, qp) == pytest.approx(float(ref), rel=1e-13)


def test_born_jordan_closed_form_close_to_diagonal():
    # the literal cosh difference loses every digit here; the product form must not
    mp.mp.dps = 50
    for q, x in [(1.7, 2e-8), (4.0, 1e-6), (-3.0, 1e-4)]:
        Q, P = mp.mpf(q), mp.mpf(q - x)
        X = Q - P
        ref = (mp.cosh(Q * X) - mp.cosh(P * X)) / (2 * X**3)
        got = kernel_factor_harmonic_closed(Ordering.BORN_JORDAN, UNIT, 1.0, q, q - x)
        assert got == pytest.approx(float(ref), rel=1e-9)


def test_symmetric_closed_form_close_to_antidiagonal():
    mp.mp.dps = 50
    for q in (2.4, 1.3, -2.9):
        qp = -q * (1 - 2e-16) if q != 1.3 else -1.3 + 1e-9
        Q, P = mp.mpf(q), mp.mpf(qp)
        X = Q - P
        ref = (mp.sinh(Q * X) + mp.sinh(P * X)) / (4 * X)
        got = kernel_factor_harmonic_closed(Ordering.SYMMETRIC, UNIT, 1.0, q, qp)
        assert got == pytest.approx(float(ref), rel=1e-9)


def test_born_jordan_closed_form_log_space():
    mp.mp.dps = 30
    Q, P = mp.mpf("26.7"), mp.mpf("-0.1")
    ref = (mp.cosh(Q * (Q - P)) - mp.cosh(P * (Q - P))) / (2 * (Q - P) ** 3)
    got = kernel_factor_harmonic_closed(Ordering.BORN_JORDAN, UNIT, 1.0, 26.7, -0.1)
    assert got == pytest.approx(float(ref), rel=1e-11)


def test_closed_form_log_space_and_overflow():
    mp.mp.dps = 30
    # argument 703: beyond exp's comfortable range, result still representable
    got = kernel_factor_harmonic_closed(Ordering.WEYL, UNIT, 1.0, 37.5, 0.0)
    ref = mp.sinh(mp.mpf(37.5) ** 2 / 2) / (2 * 37.5)
    assert got == pytest.approx(float(ref), rel=1e-12)
    with pytest.raises(KernelOverflowError) as info:
        kernel_factor_harmonic_closed(Ordering.WEYL, UNIT, 1.0, 60.0, 0.0)
    assert info.value.argument == pytest.approx(1800.0)


def test_closed_form_rejects_general_scheme():
    with pytest.raises(DomainError):
        kernel_factor_harmonic_closed(GeneralPolynomial.weyl(), UNIT, 1.0, 1.0, 0.0)


POTENTIALS = [Free(), Harmonic(), Sinusoidal(1.0, 1.0), Polynomial((0.3, -0.5, 0.2, 0.1, 0.05))]


@pytest.mark.parametrize("V", POTENTIALS, ids=lambda V: type(V).__name__)
@pytest.mark.parametrize("scheme", NAMED)
def test_symmetry_and_diagonal_on_random_points(V, scheme):
    rng = np.random.default_rng(7)
    q = rng.uniform(-2, 2, 12)
    Q, P = np.meshgrid(q, q, indexing="ij")
    T = kernel_factor(scheme, V, UNIT, Q, P)
    assert np.max(np.abs(T - T.T)) < 1e-10
    assert np.max(np.abs(kernel_factor(scheme, V, UNIT, q, q) - q / 2)) < 1e-10


def test_born_jordan_near_diagonal_limit():
    V = Sinusoidal(1.0, 1.0)
    near = kernel_factor(Ordering.BORN_JORDAN, V, UNIT, 1.2, 1.2 + 5e-9)
    off = kernel_factor(Ordering.BORN_JORDAN, V, UNIT, 1.2, 1.2 + 2e-8)
    assert near == pytest.approx(0.6, abs=1e-8)
    assert near == pytest.approx(off, abs=1e-8)


def test_deformed_factor_multiplies():
    d = quadratic_deformation(5.0)
    base = kernel_factor(Ordering.WEYL, Harmonic(), UNIT, 1.0, -0.5)
    assert kernel_factor(Deformed(Ordering.WEYL, d), Harmonic(), UNIT, 1.0, -0.5) == pytest.approx(base * (1 + 5 * 1.5**2), rel=1e-12)
    f = KernelFactor(Deformed(Ordering.SYMMETRIC, d), Harmonic(), UNIT)
    assert f.uses_closed_form
    assert f(1.0, -0.5) == pytest.approx(kernel_factor_harmonic_closed(Ordering.SYMMETRIC, UNIT, 1.0, 1.0, -0.5) * 12.25)


def test_moment_coefficients_against_quadrature():
    coeffs = np.array([0.2, -0.4, 1.0, 0.3])
    from scipy import integrate

    V = lambda s: np.polynomial.polynomial.polyval(s, coeffs)
    for k in range(5):
        a = moment_coefficients(coeffs, k)
        for q in (-1.3, 0.7, 2.0):
            direct, _ = integrate.quad(lambda s: (V(q) - V(s)) ** k, 0.0, q, epsabs=1e-13, epsrel=1e-12)
            assert np.polynomial.polynomial.polyval(q, a) == pytest.approx(direct, rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("general, named", [(GeneralPolynomial.weyl(), Ordering.WEYL),
                                             (GeneralPolynomial.symmetric(), Ordering.SYMMETRIC),
                                             (GeneralPolynomial.born_jordan(), Ordering.BORN_JORDAN)])
def test_general_series_reproduces_closed_forms(general, named):
    q = np.linspace(-3, 3, 9)
    Q, P = np.meshgrid(q, q, indexing="ij")
    series = kernel_factor(general, Harmonic(), UNIT, Q, P)
    closed = kernel_factor_harmonic_closed(named, UNIT, 1.0, Q, P)
    assert np.max(np.abs(series - closed) / np.maximum(1.0, np.abs(closed))) < 1e-10


def test_general_series_on_quartic_matches_weyl_quadrature():
    V = Polynomial((0.0, 0.0, 0.5, 0.0, 0.1))
    q = np.linspace(-1.5, 1.5, 5)
    Q, P = np.meshgrid(q, q, indexing="ij")
    assert np.allclose(kernel_factor(GeneralPolynomial.weyl(), V, UNIT, Q, P), kernel_factor(Ordering.WEYL, V, UNIT, Q, P), rtol=1e-8, atol=1e-10)


def test_general_series_needs_polynomial_potential():
    with pytest.raises(DomainError):
        kernel_factor(GeneralPolynomial.weyl(), Sinusoidal(), UNIT, 1.0, 0.0)


def test_quadrature_failure_reports_worst_interval():
    with pytest.raises(QuadratureError) as info:
        kernel_factor(Ordering.WEYL, Sinusoidal(1.0, 50.0), UNIT, np.array([9.0, 0.5]), np.array([-8.0, 0.0]),
                      policy=QuadPolicy(epsabs=1e-14, epsrel=1e-14, max_depth=2))
    assert info.value.interval is not None


def test_kernel_factor_method_selection():
    f = KernelFactor(Ordering.WEYL, Harmonic(), UNIT)
    assert f.uses_closed_form
    assert not KernelFactor(Ordering.WEYL, Harmonic(), UNIT, method="quadrature").uses_closed_form
    with pytest.raises(ConfigError):
        KernelFactor(Ordering.WEYL, Sinusoidal(), UNIT, method="closed")
    with pytest.raises(ConfigError):
        KernelFactor(Ordering.WEYL, Harmonic(), UNIT, method="magic")


def test_operator_kernel_examples():
    K = assemble_kernel(KernelFactor(Ordering.WEYL, Harmonic(), UNIT))
    assert K(0.8, 0.8) == 0
    assert K(1.0, 0.0) == pytest.approx(np.conj(K(0.0, 1.0)))
    assert K(1.0, 0.0).real == 0
    free = assemble_kernel(KernelFactor(Ordering.WEYL, Free(), UNIT))
    # T = (q+q')/4 = 1 at (3, 1)
    assert free(3.0, 1.0) == pytest.approx(-1j)


@pytest.mark.parametrize("V", POTENTIALS[1:], ids=lambda V: type(V).__name__)
def test_operator_kernel_hermitian_and_imaginary(V):
    K = assemble_kernel(KernelFactor(Ordering.BORN_JORDAN, V, UNIT))
    q = np.linspace(-2, 2, 11)
    Q, P = np.meshgrid(q, q, indexing="ij")
    M = K(Q, P)
    assert np.max(np.abs(M - M.conj().T)) < 1e-10
    assert np.all(M.real == 0)
    assert np.all(np.diag(M) == 0)


@settings(max_examples=60, deadline=None)
@given(q=st.floats(-3, 3), qp=st.floats(-3, 3), scheme=st.sampled_from(NAMED))
def test_harmonic_factor_symmetric_and_matches_closed_form(q, qp, scheme):
    quad = kernel_factor(scheme, Harmonic(), UNIT, q, qp)
    assert quad == pytest.approx(kernel_factor(scheme, Harmonic(), UNIT, qp, q), rel=1e-12, abs=1e-14)
    closed = kernel_factor_harmonic_closed(scheme, UNIT, 1.0, q, qp)
    assert quad == pytest.approx(closed, rel=1e-8, abs=1e-10)

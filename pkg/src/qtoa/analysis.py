"""Arrival, conjugacy, parity and deformation diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import PhysicalParams, Potential
from .errors import NoArrivalError, NumericalError, QTOAError
from .kernels import Deformed, KernelFactor, OperatorKernel, assemble_kernel, quadratic_deformation
from .propagator import EvolutionConfig, ObservableSeries, WavefunctionState, evolve_and_record, evolve_to
from .spectral import (
    Classification,
    SpatialGrid,
    SpectralDecomposition,
    build_operator_matrix,
    classify_eigenfunction,
    solve_spectrum,
)

__all__ = [
    "ArrivalReport",
    "arrival_report",
    "ConjugacyReport",
    "tke_residual",
    "parity_kernel_residual",
    "ReflectionCheck",
    "reflected_potential_eigen_check",
    "DensityProfile",
    "density_profile",
    "coalescence_time",
    "run_arrival",
    "SweepEntry",
    "deformation_sweep",
]


# ---------------------------------------------------------------------------
# arrival


@dataclass(frozen=True)
class ArrivalReport:
    eigenvalue: float
    t_cross: float | None
    t_minvar: float
    min_variance: float
    cross_deviation: float | None
    minvar_deviation: float
    mean_q_at_tau: float
    classification: str | None = None
    coalescence: float | None = None

    def to_dict(self) -> dict:
        return {
            "eigenvalue": self.eigenvalue,
            "t_cross": self.t_cross,
            "t_minvar": self.t_minvar,
            "min_variance": self.min_variance,
            "cross_deviation": self.cross_deviation,
            "minvar_deviation": self.minvar_deviation,
            "mean_q_at_tau": self.mean_q_at_tau,
            "classification": self.classification,
            "coalescence_time": self.coalescence,
        }


def _crossing_nearest(times, values, target):
    """Linearly interpolated zero crossing of ``values`` closest to ``target``."""
    s = np.sign(values)
    best = None
    for i in range(len(values) - 1):
        a, b = values[i], values[i + 1]
        if a == 0:
            t = times[i]
        elif s[i] * s[i + 1] < 0:
            t = times[i] + (times[i + 1] - times[i]) * a / (a - b)
        else:
            continue
        if best is None or abs(t - target) < abs(best - target):
            best = t
    if values[-1] == 0 and (best is None or abs(times[-1] - target) < abs(best - target)):
        best = times[-1]
    return best


def arrival_report(
    series: ObservableSeries,
    tau: float,
    arrival_point: float = 0.0,
    classification=None,
    symmetric_tolerance: float = 1e-6,
) -> ArrivalReport:
    """Crossing time of <q> and minimum-variance time, compared with ``tau``.

    The crossing is omitted when <q> - arrival_point vanishes identically
    (states symmetric about the arrival point), i.e. stays below
    ``symmetric_tolerance`` times the initial position spread.  The variance minimum is
    refined by a parabola through the discrete minimum and its neighbours.
    """
    t = np.asarray(series.times, dtype=float)
    if t.size < 3:
        raise ValueError("arrival analysis needs at least 3 samples")
    shifted = np.asarray(series.mean_q) - arrival_point
    scale = math.sqrt(max(float(series.var_q[0]), 0.0)) or 1.0
    if np.max(np.abs(shifted)) <= symmetric_tolerance * scale:
        t_cross = None
    else:
        t_cross = _crossing_nearest(t, shifted, tau)

    var = np.asarray(series.var_q, dtype=float)
    j = int(np.argmin(var))
    if j == 0 or j == var.size - 1:
        raise NoArrivalError(
            f"position variance has no interior minimum in [{t[0]:.6g}, {t[-1]:.6g}] (minimum at the window edge)"
        )
    y0, y1, y2 = var[j - 1], var[j], var[j + 1]
    h = t[j + 1] - t[j]
    curvature = y0 - 2 * y1 + y2
    if curvature > 0:
        shift = 0.5 * (y0 - y2) / curvature
        t_min = t[j] + shift * h
        v_min = y1 - 0.25 * (y0 - y2) * shift
    else:
        t_min, v_min = t[j], y1
    mean_at_tau = float(np.interp(tau, t, series.mean_q))
    if isinstance(classification, Classification):
        classification = classification.value
    return ArrivalReport(
        eigenvalue=float(tau),
        t_cross=None if t_cross is None else float(t_cross),
        t_minvar=float(t_min),
        min_variance=float(v_min),
        cross_deviation=None if t_cross is None else abs(t_cross - tau) / abs(tau),
        minvar_deviation=abs(t_min - tau) / abs(tau),
        mean_q_at_tau=mean_at_tau,
        classification=classification,
        coalescence=coalescence_time(series, arrival_point) if series.density is not None else None,
    )


def _two_highest_peaks(density, q):
    inner = (density[1:-1] >= density[:-2]) & (density[1:-1] > density[2:])
    idx = np.flatnonzero(inner) + 1
    if idx.size < 2:
        return None
    top = idx[np.argsort(density[idx])[-2:]]
    return q[top]


def coalescence_time(series: ObservableSeries, arrival_point: float = 0.0) -> float | None:
    """Time at which the two highest density maxima are closest together.

    Returns None when the snapshots never show two maxima.
    """
    if series.density is None or series.grid is None:
        return None
    best, when = math.inf, None
    for t, d in zip(series.times, series.density):
        peaks = _two_highest_peaks(d, series.grid.points)
        if peaks is None:
            continue
        gap = abs(peaks[1] - peaks[0])
        if gap < best:
            best, when = gap, float(t)
    return when


@dataclass(frozen=True)
class DensityProfile:
    peak: float
    peak_position: float
    fwhm: float


def density_profile(psi, grid: SpatialGrid) -> DensityProfile:
    """Height, location and full width at half maximum of the main density peak."""
    d = np.abs(np.asarray(psi)) ** 2
    q = grid.points
    j = int(np.argmax(d))
    half = 0.5 * d[j]
    left = j
    while left > 0 and d[left] > half:
        left -= 1
    right = j
    while right < d.size - 1 and d[right] > half:
        right += 1

    def cross(a, b):
        if d[a] == d[b]:
            return q[a]
        return q[a] + (half - d[a]) * (q[b] - q[a]) / (d[b] - d[a])

    ql = cross(left, left + 1) if d[left] <= half else q[0]
    qr = cross(right - 1, right) if d[right] <= half else q[-1]
    return DensityProfile(float(d[j]), float(q[j]), float(qr - ql))


# ---------------------------------------------------------------------------
# conjugacy


@dataclass(frozen=True)
class ConjugacyReport:
    residual: float
    diagonal_error: float
    antidiagonal_error: float
    step: float


def tke_residual(
    factor: KernelFactor,
    V: Potential,
    params: PhysicalParams,
    box: tuple = (-2.0, 2.0),
    h: float = 1e-3,
    samples: int = 15,
) -> ConjugacyReport:
    """Central-difference residual of the time kernel equation.

    R = -(hbar^2/2mu) T_qq + (hbar^2/2mu) T_q'q' + (V(q) - V(q')) T on a
    ``samples`` x ``samples`` grid over ``box`` squared, together with the
    diagonal conditions T(q,q) = q/2 and T(q,-q) = 0.
    """
    lo, hi = box
    s = np.linspace(lo, hi, samples)
    Q, P = np.meshgrid(s, s, indexing="ij")
    T0 = factor(Q, P)
    Tqq = (factor(Q + h, P) - 2 * T0 + factor(Q - h, P)) / h**2
    Tpp = (factor(Q, P + h) - 2 * T0 + factor(Q, P - h)) / h**2
    c = params.hbar**2 / (2 * params.mass)
    R = -c * Tqq + c * Tpp + (V(Q) - V(P)) * T0
    diagonal = np.max(np.abs(factor(s, s) - s / 2))
    antidiagonal = np.max(np.abs(factor(s, -s)))
    return ConjugacyReport(float(np.max(np.abs(R))), float(diagonal), float(antidiagonal), float(h))


# ---------------------------------------------------------------------------
# parity


def parity_kernel_residual(kernel: OperatorKernel, grid: SpatialGrid, matrix=None) -> float:
    """max |K(-q_i, -q_j) - K(q_i, q_j)| over grid pairs.

    The grid is parity-closed, so K at reflected points is K at reflected
    indices; a prebuilt operator matrix may be supplied to avoid
    re-evaluating the kernel.
    """
    if matrix is None:
        Q, P = np.meshgrid(grid.points, grid.points, indexing="ij")
        K = kernel(Q, P)
    else:
        K = getattr(matrix, "matrix", matrix) / grid.spacing
    return float(np.max(np.abs(K[::-1, ::-1] - K)))


@dataclass(frozen=True)
class ReflectionCheck:
    eigenvalue_mismatch: float
    min_overlap: float
    scale: float

    @property
    def worst(self) -> float:
        return max(self.eigenvalue_mismatch / self.scale, 1.0 - self.min_overlap)


def reflected_potential_eigen_check(
    V: Potential,
    factor: KernelFactor,
    grid: SpatialGrid,
    spectrum: SpectralDecomposition | None = None,
) -> ReflectionCheck:
    """Compare spectra of the operators for V(q) and V(-q).

    Eigenvalues should coincide and each reflected eigenfunction Pi psi of
    the first operator should be an eigenfunction of the second.  The
    eigenvalue mismatch is absolute; ``scale`` = max(1, max |tau|) is the
    natural unit for it.
    """
    plus = spectrum if spectrum is not None else _spectrum(factor.with_potential(V), grid)
    if V.is_even:
        return ReflectionCheck(0.0, 1.0, max(1.0, float(np.max(np.abs(plus.eigenvalues)))))
    minus = _spectrum(factor.with_potential(V.reflected()), grid)
    mismatch = float(np.max(np.abs(plus.eigenvalues - minus.eigenvalues)))
    overlaps = np.abs(np.sum(np.conj(minus.vectors) * plus.vectors[::-1, :], axis=0)) * grid.spacing
    scale = max(1.0, float(np.max(np.abs(plus.eigenvalues))))
    return ReflectionCheck(mismatch, float(np.min(overlaps)), scale)


def _spectrum(factor: KernelFactor, grid: SpatialGrid, classification_reference: str = "local"):
    return solve_spectrum(build_operator_matrix(assemble_kernel(factor), grid), classification_reference=classification_reference)


# ---------------------------------------------------------------------------
# pipeline helpers


def run_arrival(
    psi,
    tau: float,
    grid: SpatialGrid,
    V: Potential,
    params: PhysicalParams,
    dt: float | None = None,
    horizon: float = 3.0,
    min_samples: int = 500,
    record_density: bool = False,
    arrival_point: float = 0.0,
    classification=None,
    emit_warnings: bool = True,
):
    """Evolve an eigenfunction for ``horizon * tau`` and analyse its arrival.

    Returns (series, report, profile) where ``profile`` describes the
    density at the minimum-variance time.  ``report`` and ``profile`` are
    None when no arrival is detected; the series is always returned.
    """
    tau = float(tau)
    if dt is None:
        dt = 1e-5
    steps = max(int(math.ceil(horizon * abs(tau) / dt)), 2)
    stride = max(1, steps // min_samples)
    state = WavefunctionState(grid, np.asarray(psi, dtype=complex))
    series = evolve_and_record(state, V, params, EvolutionConfig(dt, steps, stride, record_density, emit_warnings=emit_warnings))
    if classification is None:
        classification = classify_eigenfunction(psi, grid, arrival_point)
    try:
        report = arrival_report(series, tau, arrival_point, classification)
    except NoArrivalError:
        return series, None, None
    at_min = evolve_to(state, V, params, report.t_minvar, dt)
    return series, report, density_profile(at_min.psi, grid)


@dataclass(frozen=True)
class SweepEntry:
    alpha: float
    eigenvalue: float | None
    overlap: float
    tracked: bool
    report: ArrivalReport | None
    profile: object | None
    note: str = ""

    @property
    def deviation(self) -> float:
        return math.inf if self.report is None else self.report.minvar_deviation

    @property
    def degraded(self) -> bool:
        """Arrival no longer discernible: no variance minimum, large
        deviation, or the density peak away from the arrival point."""
        if self.report is None:
            return True
        off_peak = self.profile is not None and abs(self.profile.peak_position) > self.profile.fwhm
        return self.report.minvar_deviation > 0.25 or off_peak


def deformation_sweep(
    factor: KernelFactor,
    alphas,
    grid: SpatialGrid,
    reference_psi,
    dt: float | None = None,
    horizon: float = 3.0,
    tracking_threshold: float = 0.5,
    reference_tau: float | None = None,
):
    """Arrival analysis of the eigenfunction matching ``reference_psi`` for
    each deformation 1 + alpha x^2 of the factor's scheme.

    Matching is by maximal overlap |<psi_ref|psi_alpha>| over the
    eigenfunctions whose eigenvalue has the sign of ``reference_tau`` (all
    of them when it is None).  Entries whose best overlap is below
    ``tracking_threshold`` are flagged untracked; the eigenfunction whose
    eigenvalue is closest to ``reference_tau`` is then evolved instead.
    """
    params = factor.params
    V = factor.potential
    ref = np.asarray(reference_psi, dtype=complex)
    out = []
    for alpha in alphas:
        alpha = float(alpha)
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        scheme = factor.scheme if alpha == 0 else Deformed(factor.scheme, quadratic_deformation(alpha))
        try:
            spec = _spectrum(factor.with_scheme(scheme), grid)
        except QTOAError as exc:
            out.append(SweepEntry(alpha, None, 0.0, False, None, None, f"spectrum failed: {exc}"))
            continue
        overlaps = np.abs(spec.vectors.conj().T @ ref) * grid.spacing
        if reference_tau is not None:
            overlaps = np.where(np.sign(spec.eigenvalues) == np.sign(reference_tau), overlaps, -1.0)
        k = int(np.argmax(overlaps))
        tau = float(spec.eigenvalues[k])
        tracked = bool(overlaps[k] >= tracking_threshold)
        notes = [] if tracked else ["eigenfunction tracking lost"]
        if not tracked and reference_tau is not None:
            # nothing resembles the reference any more; compare at a similar time scale
            k = int(np.argmin(np.where(overlaps >= 0, np.abs(spec.eigenvalues - reference_tau), np.inf)))
            tau = float(spec.eigenvalues[k])
            notes.append("evolving the eigenfunction with the nearest eigenvalue")
        try:
            _, report, profile = run_arrival(spec.vectors[:, k], tau, grid, V, params, dt, horizon, emit_warnings=False)
        except NumericalError as exc:
            notes.append(f"evolution failed: {exc}")
            out.append(SweepEntry(alpha, tau, float(overlaps[k]), tracked, None, None, "; ".join(notes)))
            continue
        if report is None:
            notes.append("no arrival detected")
        out.append(SweepEntry(alpha, tau, float(overlaps[k]), tracked, report, profile, "; ".join(notes)))
    return out

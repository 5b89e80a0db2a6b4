"""Strang split-operator propagation on a periodic box.

The kinetic step is diagonal in the discrete Fourier basis with momenta
k_n = 2 pi n / (2l), n in [-N/2, N/2); the potential step is diagonal on
the grid.  Each step is

    psi <- exp(-i V dt / 2 hbar) F^-1 exp(-i hbar k^2 dt / 2 mu) F exp(-i V dt / 2 hbar) psi
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import PhysicalParams, Potential
from .errors import ConfigError, NormDriftError
from .spectral import SpatialGrid

__all__ = [
    "WavefunctionState",
    "EvolutionConfig",
    "ObservableSeries",
    "momenta",
    "split_step",
    "evolve_and_record",
    "evolve_to",
    "gaussian_state",
    "observables",
    "edge_mass",
]

EDGE_FRACTION = 0.05


@dataclass(frozen=True)
class WavefunctionState:
    grid: SpatialGrid
    psi: np.ndarray = field(repr=False)
    time: float = 0.0

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.spacing)


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    steps: int
    stride: int = 1
    record_density: bool = False
    norm_tolerance: float = 1e-6
    emit_warnings: bool = True

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt must be positive")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative")
        if self.stride < 1:
            raise ConfigError("stride must be at least 1")


@dataclass
class ObservableSeries:
    times: np.ndarray
    mean_q: np.ndarray
    var_q: np.ndarray
    norm: np.ndarray
    density: np.ndarray | None = None
    grid: SpatialGrid | None = None
    warnings: list = field(default_factory=list)
    max_edge_mass: float = 0.0


def momenta(grid: SpatialGrid) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(grid.count, grid.spacing)


def _phases(grid, V, params, dt):
    k = momenta(grid)
    kinetic = np.exp(-0.5j * params.hbar * k * k * dt / params.mass)
    half_potential = np.exp(-0.5j * np.asarray(V(grid.points), dtype=float) * dt / params.hbar)
    return kinetic, half_potential


def _step(psi, kinetic, half_potential):
    return half_potential * np.fft.ifft(kinetic * np.fft.fft(half_potential * psi))


def split_step(state: WavefunctionState, V: Potential, params: PhysicalParams, dt: float) -> WavefunctionState:
    kinetic, half_potential = _phases(state.grid, V, params, dt)
    return WavefunctionState(state.grid, _step(state.psi, kinetic, half_potential), state.time + dt)


def observables(psi, grid: SpatialGrid):
    """(norm, <q>, Var q) of a grid wavefunction."""
    d = np.abs(psi) ** 2 * grid.spacing
    q = grid.points
    norm = float(d.sum())
    mean = float(q @ d) / norm
    var = float((q * q) @ d) / norm - mean * mean
    return norm, mean, max(var, 0.0)


def edge_mass(psi, grid: SpatialGrid, fraction: float = EDGE_FRACTION) -> float:
    """Probability in the outer ``fraction`` of the box (both ends)."""
    outer = np.abs(grid.points) > (1.0 - fraction) * grid.half_length
    return float(np.sum(np.abs(psi[outer]) ** 2) * grid.spacing)


def evolve_and_record(
    state: WavefunctionState,
    V: Potential,
    params: PhysicalParams,
    config: EvolutionConfig,
) -> ObservableSeries:
    """Propagate ``config.steps`` steps, recording every ``config.stride``.

    Aborts with :class:`NormDriftError` when the norm drifts by more than
    ``config.norm_tolerance``.  Probability arriving at the box edges (where
    periodic wraparound would corrupt the dynamics) raises a warning once
    the edge mass exceeds its initial value by 1e-6.
    """
    grid = state.grid
    kinetic, half_potential = _phases(grid, V, params, config.dt)
    psi = np.array(state.psi, dtype=complex)
    norm0 = state.norm()
    edge0 = edge_mass(psi, grid)
    max_edge = edge0
    times, means, variances, norms, densities = [], [], [], [], []
    messages = []

    def record(t):
        nonlocal max_edge
        n, m, v = observables(psi, grid)
        times.append(t)
        means.append(m)
        variances.append(v)
        norms.append(n)
        if config.record_density:
            densities.append(np.abs(psi) ** 2)
        if not abs(n - norm0) <= config.norm_tolerance:  # NaN counts as drift
            raise NormDriftError(f"norm drifted from {norm0:.17g} to {n:.17g} at t={t:.6g}")
        e = edge_mass(psi, grid)
        if e > max_edge:
            max_edge = e
            if e - edge0 > 1e-6 and not messages:
                msg = f"probability {e:.3g} reached the outer box edges at t={t:.6g} (initially {edge0:.3g})"
                messages.append(msg)
                if config.emit_warnings:
                    warnings.warn(msg, RuntimeWarning, stacklevel=3)

    record(state.time)
    for s in range(1, config.steps + 1):
        psi = _step(psi, kinetic, half_potential)
        if s % config.stride == 0 or s == config.steps:
            record(state.time + s * config.dt)
    return ObservableSeries(
        np.array(times),
        np.array(means),
        np.array(variances),
        np.array(norms),
        np.array(densities) if config.record_density else None,
        grid,
        messages,
        max_edge,
    )


def evolve_to(state: WavefunctionState, V: Potential, params: PhysicalParams, t: float, dt: float) -> WavefunctionState:
    """State at time ``t``; the last step is shortened to land exactly."""
    span = t - state.time
    if span < 0:
        raise ConfigError("cannot evolve backwards")
    steps = int(math.floor(span / dt))
    psi = np.array(state.psi, dtype=complex)
    if steps:
        kinetic, half_potential = _phases(state.grid, V, params, dt)
        for _ in range(steps):
            psi = _step(psi, kinetic, half_potential)
    rest = span - steps * dt
    if rest > 1e-15 * max(1.0, abs(t)):
        kinetic, half_potential = _phases(state.grid, V, params, rest)
        psi = _step(psi, kinetic, half_potential)
    return WavefunctionState(state.grid, psi, t)


def gaussian_state(grid: SpatialGrid, center: float = 0.0, width: float = 1.0, momentum: float = 0.0, hbar: float = 1.0):
    """Normalized Gaussian with position spread ``width`` (sigma of |psi|^2)."""
    q = grid.points
    psi = np.exp(-((q - center) ** 2) / (4.0 * width**2) + 1j * momentum * q / hbar)
    psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * grid.spacing)
    return WavefunctionState(grid, psi, 0.0)

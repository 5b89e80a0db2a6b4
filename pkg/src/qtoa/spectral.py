"""Coarse-grained arrival-time operators: grid, Nystrom matrix, spectrum.

The operator is confined to [-l, l] and discretized on a uniform midpoint
grid.  Uniform weights make the Nystrom matrix ``M_ij = Delta K(q_i, q_j)``
Hermitian without symmetrization, and the same grid feeds the FFT
propagator directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .core import PhysicalParams
from .errors import ConfigError, NumericalError, QuadratureError
from .kernels import OperatorKernel

__all__ = [
    "SpatialGrid",
    "build_grid",
    "OperatorMatrix",
    "build_operator_matrix",
    "Classification",
    "EigenPair",
    "SpectralDecomposition",
    "solve_spectrum",
    "classify_eigenfunction",
    "parity_overlap",
    "edge_momentum_ratio",
    "select_eigenpairs",
]

_ROW_BLOCK_PAIRS = 1 << 15


@dataclass(frozen=True)
class SpatialGrid:
    half_length: float
    count: int
    points: np.ndarray = field(repr=False, compare=False)
    spacing: float

    @property
    def length(self) -> float:
        return 2.0 * self.half_length

    def reflect_index(self, i):
        """Index of the grid point -q_i."""
        return self.count - 1 - np.asarray(i)

    def reflect(self, values):
        """Values of f(-q) given values of f on the grid."""
        return np.asarray(values)[..., ::-1]


def build_grid(l: float, N: int) -> SpatialGrid:
    """Midpoint grid q_i = -l + (i + 1/2) Delta, Delta = 2l/N."""
    if not (isinstance(l, (int, float)) and math.isfinite(l) and l > 0):
        raise ConfigError("l must be positive")
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)):
        raise ConfigError("N must be an integer")
    if N < 2 or N % 2:
        raise ConfigError("N must be even and at least 2")
    N = int(N)
    spacing = 2.0 * l / N
    # symmetric construction keeps q_(N-1-i) == -q_i bit for bit
    half = (np.arange(N // 2) + 0.5) * spacing
    points = np.concatenate([-half[::-1], half])
    return SpatialGrid(float(l), N, points, spacing)


@dataclass(frozen=True)
class OperatorMatrix:
    matrix: np.ndarray = field(repr=False)
    grid: SpatialGrid
    description: str = ""

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def build_operator_matrix(kernel: OperatorKernel, grid: SpatialGrid) -> OperatorMatrix:
    """Nystrom matrix of the kernel on the grid.

    Only the strict upper triangle is evaluated; the lower triangle is its
    conjugate transpose and the diagonal is zero (sgn(0) = 0).  Kernel
    failures are re-raised naming the offending (i, j) pair.
    """
    q = grid.points
    N = grid.count
    iu, ju = np.triu_indices(N, k=1)
    upper = np.empty(iu.size, dtype=complex)
    step = _ROW_BLOCK_PAIRS
    for start in range(0, iu.size, step):
        sl = slice(start, start + step)
        try:
            upper[sl] = kernel(q[iu[sl]], q[ju[sl]])
        except QuadratureError as exc:
            where = ""
            if exc.index is not None:
                k = start + exc.index
                where = f" at grid pair (i={iu[k]}, j={ju[k]})"
            raise NumericalError(f"kernel evaluation failed{where}: {exc}") from exc
        except NumericalError as exc:
            i, j, exc = _first_failing_pair(kernel, q, iu[sl], ju[sl], exc)
            raise NumericalError(f"kernel evaluation failed at grid pair (i={i}, j={j}): {exc}") from exc
    if not np.all(np.isfinite(upper)):
        k = int(np.flatnonzero(~np.isfinite(upper))[0])
        raise NumericalError(f"non-finite kernel value at grid pair (i={iu[k]}, j={ju[k]})")
    # K is purely imaginary; keep the real part exactly zero
    values = 1j * (grid.spacing * upper.imag)
    M = np.zeros((N, N), dtype=complex)
    M[iu, ju] = values
    M[ju, iu] = np.conj(values)
    return OperatorMatrix(M, grid, kernel.describe() if hasattr(kernel, "describe") else "")


def _first_failing_pair(kernel, q, iu, ju, error):
    # error path only: locate the pair by halving the block
    lo, hi = 0, iu.size
    while hi - lo > 1:
        mid = (lo + hi) // 2
        try:
            kernel(q[iu[lo:mid]], q[ju[lo:mid]])
        except NumericalError as exc:
            hi, error = mid, exc
        else:
            lo = mid
    return int(iu[lo]), int(ju[lo]), error


class Classification(str, Enum):
    NODAL = "nodal"
    ANTINODAL = "antinodal"
    UNCLASSIFIED = "unclassified"


def _density_at(psi, grid: SpatialGrid, q0: float) -> float:
    return float(np.interp(q0, grid.points, np.abs(psi) ** 2))


def classify_eigenfunction(
    psi,
    grid: SpatialGrid,
    arrival_point: float = 0.0,
    reference: str = "local",
    nodal_below: float = 0.05,
    antinodal_above: float = 0.5,
    window: float = 0.1,
) -> Classification:
    """Nodal / antinodal classification of |psi|^2 at the arrival point.

    The interpolated density at the arrival point is compared with a
    reference density.  ``reference="global"`` uses the global maximum of
    |psi|^2.  The default ``"local"`` uses the maximum within
    ``window * l`` of the arrival point: arrival-time eigenfunctions on a
    finite box grow towards the edges, so the global maximum says little
    about the shape near the arrival point.
    """
    if isinstance(psi, EigenPair):
        psi = psi.psi
    density = np.abs(np.asarray(psi)) ** 2
    d0 = _density_at(psi, grid, arrival_point)
    if reference == "global":
        ref = float(density.max())
    elif reference == "local":
        near = np.abs(grid.points - arrival_point) <= window * grid.half_length
        ref = max(d0, float(density[near].max()) if near.any() else 0.0)
    else:
        raise ConfigError(f"unknown classification reference {reference!r}")
    if ref == 0:
        return Classification.UNCLASSIFIED
    ratio = d0 / ref
    if ratio < nodal_below:
        return Classification.NODAL
    if ratio > antinodal_above:
        return Classification.ANTINODAL
    return Classification.UNCLASSIFIED


def parity_overlap(psi, grid: SpatialGrid) -> complex:
    """<psi | Pi psi> with (Pi psi)(q) = psi(-q)."""
    if isinstance(psi, EigenPair):
        psi = psi.psi
    psi = np.asarray(psi)
    return complex(np.vdot(psi, psi[::-1]) * grid.spacing)


@dataclass(frozen=True)
class EigenPair:
    index: int
    eigenvalue: float
    psi: np.ndarray = field(repr=False, compare=False)
    classification: Classification
    parity: complex


@dataclass(frozen=True)
class SpectralDecomposition(Sequence):
    """Eigenpairs sorted by eigenvalue; also indexable like a list."""

    eigenvalues: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    grid: SpatialGrid
    arrival_point: float = 0.0
    classification_reference: str = "local"

    def __len__(self):
        return self.eigenvalues.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        i = range(len(self))[i]
        psi = self.vectors[:, i]
        return EigenPair(
            i,
            float(self.eigenvalues[i]),
            psi,
            classify_eigenfunction(psi, self.grid, self.arrival_point, self.classification_reference),
            parity_overlap(psi, self.grid),
        )

    def orthonormality_residual(self) -> float:
        G = self.vectors.conj().T @ self.vectors * self.grid.spacing
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))

    def pairing_residual(self) -> float:
        """max |tau_k + tau_(N-1-k)| over max |tau|."""
        w = self.eigenvalues
        return float(np.max(np.abs(w + w[::-1])) / max(np.max(np.abs(w)), np.finfo(float).tiny))


def solve_spectrum(
    M: OperatorMatrix,
    arrival_point: float = 0.0,
    classification_reference: str = "local",
    hermitian_tolerance: float = 1e-12,
) -> SpectralDecomposition:
    """Full eigendecomposition of a Hermitian operator matrix.

    Eigenfunctions are scaled so sum |psi_i|^2 Delta = 1 and rotated so the
    component of largest magnitude is real and positive.
    """
    A = M.matrix
    scale = max(float(np.max(np.abs(A))), 1.0)
    if M.hermiticity_residual() > hermitian_tolerance * scale:
        raise NumericalError("operator matrix is not Hermitian")
    try:
        w, v = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    big = np.argmax(np.abs(v), axis=0)
    lead = v[big, np.arange(v.shape[1])]
    v = v * (np.abs(lead) / lead)[None, :]
    v[big, np.arange(v.shape[1])] = np.abs(lead)
    norms = np.sqrt(np.sum(np.abs(v) ** 2, axis=0) * M.grid.spacing)
    v = v / norms[None, :]
    return SpectralDecomposition(w, v, M.grid, arrival_point, classification_reference)


def edge_momentum_ratio(tau: float, grid: SpatialGrid, params: PhysicalParams) -> float:
    """Free-particle momentum needed to reach the arrival point from the box
    edge in time |tau|, as a fraction of the grid's Nyquist momentum."""
    nyquist = math.pi * params.hbar / grid.spacing
    return params.mass * grid.half_length / (abs(tau) * nyquist) if tau else math.inf


def select_eigenpairs(
    spectrum: SpectralDecomposition,
    params: PhysicalParams,
    kind: Classification | str | None = None,
    count: int = 3,
    max_edge_ratio: float = 0.25,
) -> list[EigenPair]:
    """Smallest positive eigenvalues whose eigenfunctions the grid resolves.

    Eigenvalues below the resolution limit belong to grid-scale
    eigenvectors dominated by Nyquist-frequency content; they are skipped.
    """
    kind = None if kind is None else Classification(kind)
    out = []
    for i in np.flatnonzero(spectrum.eigenvalues > 0):
        tau = spectrum.eigenvalues[i]
        if edge_momentum_ratio(tau, spectrum.grid, params) > max_edge_ratio:
            continue
        pair = spectrum[int(i)]
        if kind is None or pair.classification is kind:
            out.append(pair)
            if len(out) == count:
                break
    return out

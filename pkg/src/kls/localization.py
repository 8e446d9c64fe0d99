"""Delay recovery and anchor-free relative positioning.

The measured phase-difference matrix splits into a skew-symmetric part
driven by pulse start-time offsets and a symmetric part driven by
propagation delays. The symmetric part converts to pairwise delays, the
delays to distances, and classical multidimensional scaling turns those
into relative coordinates that an orthogonal Procrustes fit aligns with a
reference for error reporting.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .core import SPEED_OF_LIGHT


class DecomposedPhases(NamedTuple):
    """Skew-symmetric (timing) and symmetric (delay) parts of a phase matrix."""

    skew: np.ndarray
    symmetric: np.ndarray


def decompose(matrix) -> DecomposedPhases:
    """Split a square phase-difference matrix into timing and delay parts.

    ``skew = (m - m.T) / 2`` is bitwise skew-symmetric and
    ``symmetric = (m + m.T) / 2`` bitwise symmetric, because each mirrored
    entry pair comes from the same rounded operations. Their sum reproduces
    the input to within one rounding of each entry (bitwise whenever the
    entry pair sums and differences are exactly representable).
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return DecomposedPhases(0.5 * (m - m.T), 0.5 * (m + m.T))


def delays_from_symmetric(symmetric, sampling_factor: int, own_duration: float) -> np.ndarray:
    """Invert the symmetric phase part into pairwise delays (seconds).

    Each entry scales by ``sampling_factor * own_duration / (2 pi)``; the
    diagonal is forced to zero.
    """
    if own_duration <= 0.0:
        raise ValueError("own_duration must be positive")
    if sampling_factor < 1:
        raise ValueError("sampling_factor must be at least 1")
    sym = np.asarray(symmetric, dtype=float)
    delays = sym * (sampling_factor * own_duration / math.tau)
    np.fill_diagonal(delays, 0.0)
    return delays


class MdsResult(NamedTuple):
    coords: np.ndarray  # (dim, P); columns sum to zero
    clamped_mass: float  # |negative eigenvalue| mass / total |eigenvalue| mass


def classical_mds(delays, dim: int = 3) -> MdsResult:
    """Classical (Torgerson) multidimensional scaling of a delay matrix.

    Delays convert to distances at the speed of light (absolute values
    guard against slightly negative pre-convergence estimates), the squared
    distance matrix is double-centred, and the top ``dim`` eigenpairs give
    centred relative coordinates. Equal eigenvalues keep their
    eigendecomposition order; negative ones clamp to zero and are reported
    through ``clamped_mass`` as a quality flag.
    """
    d = np.asarray(delays, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"expected a square delay matrix, got shape {d.shape}")
    if not np.allclose(d, d.T, rtol=1e-9, atol=0.0):
        raise ValueError("delay matrix must be symmetric")
    n = d.shape[0]
    dist2 = (np.abs(d) * SPEED_OF_LIGHT) ** 2
    centering = np.eye(n) - 1.0 / n
    gram = -0.5 * centering @ dist2 @ centering
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(-evals, kind="stable")
    evals = evals[order]
    evecs = evecs[:, order]
    total = float(np.abs(evals).sum())
    clamped = float(np.abs(evals[evals < 0.0]).sum() / total) if total > 0.0 else 0.0
    k = min(dim, n)
    scale = np.sqrt(np.clip(evals[:k], 0.0, None))
    coords = np.zeros((dim, n))
    coords[:k] = scale[:, None] * evecs[:, :k].T
    return MdsResult(coords, clamped)


def procrustes_align(reference, estimate) -> np.ndarray:
    """Orthogonal matrix R minimising ``||reference - R @ estimate||_F``.

    Schönemann's SVD solution over the full orthogonal group; reflections
    are allowed because distance-only coordinates cannot resolve chirality.
    Both point sets are expected centred. Rank-zero input yields the
    identity.
    """
    ref = np.asarray(reference, dtype=float)
    est = np.asarray(estimate, dtype=float)
    if ref.shape != est.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {est.shape}")
    cross = ref @ est.T
    if not cross.any():
        return np.eye(ref.shape[0])
    u, _, vt = np.linalg.svd(cross)
    return u @ vt


def relative_position_error(reference, estimate) -> float:
    """Frobenius mismatch of centred, optimally rotated estimates, relative.

    Invariant under any orthogonal transform or translation of the
    estimate. Raises for a reference with no spatial extent.
    """
    ref = np.asarray(reference, dtype=float)
    est = np.asarray(estimate, dtype=float)
    ref_c = ref - ref.mean(axis=1, keepdims=True)
    est_c = est - est.mean(axis=1, keepdims=True)
    denom = float(np.linalg.norm(ref_c))
    if denom == 0.0:
        raise ValueError("reference positions have no spatial extent")
    rotation = procrustes_align(ref_c, est_c)
    return float(np.linalg.norm(ref_c - rotation @ est_c) / denom)

"""Dense complex tensor kernels: truncated SVD, anti-Hermitian matrix
exponentials, and pairwise tensor contraction.

These are thin, contract-checked wrappers around LAPACK via numpy/scipy.
All functions are pure; inputs are never modified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class SvdResult:
    """Truncated singular value decomposition m ~= u @ diag(s) @ vh.

    Attributes:
        u: Left singular vectors, one orthonormal column per kept value.
        s: Kept singular values, descending and nonnegative.
        vh: Right singular vectors as rows (orthonormal).
        discarded_weight: Sum of squared dropped singular values.
    """

    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return self.s.shape[0]


def _checked_svd(m: np.ndarray):
    # gesdd is fastest but can fail to converge on rare inputs; fall back to
    # the slower, more robust gesvd driver.
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def svd_truncate(m: np.ndarray, max_rank: int, cutoff: float) -> SvdResult:
    """SVD of a complex matrix, truncated by rank cap and relative cutoff.

    Singular values below ``cutoff * s_max`` are dropped, as is anything
    beyond ``max_rank``; at least one value is always kept.

    Args:
        m: Two-dimensional array with finite entries.
        max_rank: Maximum number of singular values to keep (>= 1).
        cutoff: Relative threshold with respect to the largest singular
            value (>= 0).

    Returns:
        The truncated factors and the discarded squared weight.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if max_rank < 1:
        raise ValueError(f"max_rank must be >= 1, got {max_rank}")
    if cutoff < 0:
        raise ValueError(f"cutoff must be >= 0, got {cutoff}")
    if not np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag)):
        raise ValueError("matrix contains non-finite entries")

    u, s, vh = _checked_svd(m)
    if s[0] > 0.0:
        keep = int(np.count_nonzero(s > cutoff * s[0]))
    else:
        keep = 0
    keep = max(1, min(keep, max_rank))
    discarded = float(np.sum(s[keep:] ** 2))
    return SvdResult(
        u=np.ascontiguousarray(u[:, :keep]),
        s=s[:keep].copy(),
        vh=np.ascontiguousarray(vh[:keep]),
        discarded_weight=discarded,
    )


def expm_antihermitian(g: np.ndarray) -> np.ndarray:
    """Unitary exponential exp(g) of an anti-Hermitian generator.

    Computed by diagonalizing the Hermitian matrix i*g, so the result is
    unitary by construction: exp(g) = V exp(-i lambda) V^dagger.

    Args:
        g: Square matrix with g^dagger = -g (to 1e-10, relative to the
            largest entry).

    Returns:
        The unitary matrix exp(g).
    """
    g = np.asarray(g, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    if not np.all(np.isfinite(g.real)) and np.all(np.isfinite(g.imag)):
        raise ValueError("generator contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(g)))) if g.size else 1.0
    if np.max(np.abs(g + g.conj().T)) > 1e-10 * scale:
        raise ValueError("generator is not anti-Hermitian within tolerance")

    h = 1j * g  # Hermitian
    eigval, eigvec = np.linalg.eigh(0.5 * (h + h.conj().T))
    phases = np.exp(-1j * eigval)
    return (eigvec * phases) @ eigvec.conj().T


def contract(a: np.ndarray, b: np.ndarray, paired_indices) -> np.ndarray:
    """Contract tensors a and b over the given (axis_a, axis_b) pairs.

    The result carries the remaining axes of ``a`` followed by the
    remaining axes of ``b``, in their original order.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    pairs = [(int(ia), int(ib)) for ia, ib in paired_indices]
    for ia, ib in pairs:
        if not (-a.ndim <= ia < a.ndim) or not (-b.ndim <= ib < b.ndim):
            raise ValueError(f"axis pair ({ia}, {ib}) out of range")
        if a.shape[ia] != b.shape[ib]:
            raise ValueError(
                f"dimension mismatch on pair ({ia}, {ib}): "
                f"{a.shape[ia]} vs {b.shape[ib]}"
            )
    axes_a = [p[0] for p in pairs]
    axes_b = [p[1] for p in pairs]
    return np.tensordot(a, b, axes=(axes_a, axes_b))

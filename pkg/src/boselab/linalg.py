"""Dense complex linear-algebra primitives used by every other module.

Hermitian eigendecomposition, Hermitian-generated matrix exponentials and the
unitary discrete Fourier transform on a ring.  All functions are pure and
operate on immutable inputs; LAPACK does the heavy lifting.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

HERMITICITY_ATOL = 1e-12


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    return a


def check_hermitian(a, atol: float = HERMITICITY_ATOL) -> np.ndarray:
    """Return `a` as a complex array after verifying a = a^dagger within `atol`."""
    a = _as_square(a)
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > atol:
        raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return a


def eig_hermitian(a, atol: float = HERMITICITY_ATOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector columns).  The reconstruction
    V diag(w) V^dagger matches the input to ~1e-10 * ||a||; within a degenerate
    cluster only the spanned subspace is meaningful.
    """
    a = check_hermitian(a, atol)
    w, v = np.linalg.eigh(a)
    return w, v


def expm_hermitian_scaled(a, z: complex, atol: float = HERMITICITY_ATOL) -> np.ndarray:
    """exp(z * a) for Hermitian `a` via spectral decomposition.

    For purely imaginary z the result is unitary; for negative real z it is a
    positive contraction.
    """
    w, v = eig_hermitian(a, atol)
    return (v * np.exp(z * w)) @ v.conj().T


def _check_ring_length(n: int) -> None:
    if n <= 0:
        raise ValidationError("ring transform needs a non-empty array")
    if n & (n - 1):
        raise ValidationError(f"ring length must be a power of two, got {n}")


def fft_ring(values) -> np.ndarray:
    """Unitary DFT of samples on a ring grid (length must be a power of two)."""
    values = np.asarray(values, dtype=complex)
    _check_ring_length(values.shape[-1])
    return np.fft.fft(values, norm="ortho")


def ifft_ring(values) -> np.ndarray:
    """Inverse of :func:`fft_ring`."""
    values = np.asarray(values, dtype=complex)
    _check_ring_length(values.shape[-1])
    return np.fft.ifft(values, norm="ortho")

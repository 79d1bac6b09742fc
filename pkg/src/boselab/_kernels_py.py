"""Pure-numpy implementation of the hot per-bond kernels.

Fallback backend; the compiled module in ``_kernels_cy`` exposes the same
functions.  Both must stay numerically interchangeable (see test_kernels).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def spectra_from_thetas(thetas, row_weights):
    """Blockwise reduced-density-matrix spectra.

    For each theta block (rows x cols) and row weight vector w, diagonalize
    rho = (w theta)^dagger (w theta).  Returns two lists: eigenvalues in
    descending order and the matching eigenvector columns.
    """
    vals_out, vecs_out = [], []
    for theta, w in zip(thetas, row_weights):
        weighted = theta * w[:, None]
        rho = weighted.conj().T @ weighted
        vals, vecs = np.linalg.eigh(rho)
        vals_out.append(vals[::-1].copy())
        vecs_out.append(vecs[:, ::-1].copy())
    return vals_out, vecs_out

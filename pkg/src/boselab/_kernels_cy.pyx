# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-bond kernels: row-weighted Gram matrices and their spectra.

Same contract as _kernels_py; selected at import time by _backend.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

BACKEND = "cython"

ctypedef double complex zcomplex


cdef int _gram_eigh(zcomplex* a, int m, int n, double* w) nogil:
    """Eigendecomposition of rho = a^H a for a C-ordered (m x n) block.

    On entry `a` holds the weighted theta block; a scratch Gram matrix is
    diagonalized with zheevd and its eigenvectors are written back into the
    first n*n entries of `a` in C order, columns = eigenvectors ascending.
    Returns LAPACK info (0 on success).
    """
    cdef zcomplex* rho = <zcomplex*> malloc(<size_t> n * n * sizeof(zcomplex))
    if rho == NULL:
        return -1000
    cdef zcomplex one = 1.0
    cdef zcomplex zero = 0.0
    # C-order a(m, n) is Fortran-order a_f(n, m) = a^T.
    # zgemm('N','C') -> a_f a_f^H = a^T conj(a) = conj(a^H a) = conj(rho),
    # stored Fortran = rho in C order read as rho^T = conj(rho): consistent.
    zgemm("N", "C", &n, &n, &m, &one, a, &n, a, &n, &zero, rho, &n)

    cdef int info = 0
    cdef int lwork = -1, lrwork = -1, liwork = -1
    cdef zcomplex work_q
    cdef double rwork_q
    cdef int iwork_q
    zheevd("V", "L", &n, rho, &n, w, &work_q, &lwork, &rwork_q, &lrwork,
           &iwork_q, &liwork, &info)
    if info != 0:
        free(rho)
        return info
    lwork = <int> work_q.real
    lrwork = <int> rwork_q
    liwork = iwork_q
    cdef zcomplex* work = <zcomplex*> malloc(<size_t> lwork * sizeof(zcomplex))
    cdef double* rwork = <double*> malloc(<size_t> lrwork * sizeof(double))
    cdef int* iwork = <int*> malloc(<size_t> liwork * sizeof(int))
    if work == NULL or rwork == NULL or iwork == NULL:
        free(rho); free(work); free(rwork); free(iwork)
        return -1000
    zheevd("V", "L", &n, rho, &n, w, work, &lwork, rwork, &lrwork,
           iwork, &liwork, &info)
    cdef int i, j
    if info == 0:
        # rho now holds eigenvectors of conj(a^H a) in Fortran columns, i.e.
        # conj(v_k).  Write conj back so the C-order rows of `a` become the
        # eigenvectors v_k of a^H a (ascending).
        for i in range(n):
            for j in range(n):
                a[i * n + j] = rho[i * n + j].conjugate()
    free(rho); free(work); free(rwork); free(iwork)
    return info


def spectra_from_thetas(list thetas, list row_weights):
    """Blockwise reduced-density-matrix spectra (descending), compiled path."""
    cdef list vals_out = [], vecs_out = []
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] theta
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] buf
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals
    cdef int m, n, i, j, info
    cdef zcomplex* pbuf
    for idx in range(len(thetas)):
        theta = np.ascontiguousarray(thetas[idx], dtype=np.complex128)
        w = np.ascontiguousarray(row_weights[idx], dtype=np.float64)
        m = theta.shape[0]
        n = theta.shape[1]
        if m >= n:
            buf = np.empty((m, n), dtype=np.complex128)
        else:
            # eigenvector write-back needs n*n scratch inside the same buffer
            buf = np.empty((n, n), dtype=np.complex128)
        for i in range(m):
            for j in range(n):
                buf[i, j] = theta[i, j] * w[i]
        vals = np.empty(n, dtype=np.float64)
        pbuf = <zcomplex*> buf.data
        with nogil:
            info = _gram_eigh(pbuf, m, n, <double*> vals.data)
        if info != 0:
            raise RuntimeError(f"zheevd failed with info={info}")
        # rows 0..n-1 of buf are eigenvectors ascending; emit descending columns
        vecs = np.ascontiguousarray(np.asarray(buf)[:n, :n][::-1].T)
        vals_out.append(vals[::-1].copy())
        vecs_out.append(vecs)
    return vals_out, vecs_out

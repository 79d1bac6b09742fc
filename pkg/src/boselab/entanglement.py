"""Entanglement functionals on the two terminal sites of a chain.

The end-pair reduced density matrix is built by sweeping a support tensor
across the traced-out interior, one site at a time, with particle-number
bookkeeping keeping everything block-sparse: rho blocks are labeled by the
complement (interior) charge, partial-transpose blocks by the difference
n_1 - n_N, the unique linear invariant of the index swap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResourceError, ValidationError
from .mps import CanonicalMps

NEGATIVITY_DUST = 1e-12
DEFAULT_SUPPORT_BUDGET = 1 << 25  # complex entries in the sweep support tensor


@dataclass
class EndPairRdm:
    """Block-sparse rho_{1N}: complement charge -> (pair labels, Hermitian block)."""

    total: int                      # bosons in the chain
    blocks: dict                    # Q_c -> (list[(n1, nN)], ndarray)

    def trace(self) -> float:
        return float(sum(np.trace(mat).real for _, mat in self.blocks.values()))

    def purity(self) -> float:
        return float(sum(np.trace(mat @ mat).real for _, mat in self.blocks.values()))

    def validate(self, atol: float = 1e-10) -> None:
        if abs(self.trace() - 1.0) > atol:
            raise ValidationError(f"rdm trace {self.trace()} deviates from 1")
        for qc, (labels, mat) in self.blocks.items():
            if np.max(np.abs(mat - mat.conj().T)) > atol:
                raise ValidationError(f"block Q_c={qc} is not Hermitian")
            if np.linalg.eigvalsh(mat).min() < -1e-10:
                raise ValidationError(f"block Q_c={qc} is not positive semidefinite")

    def to_json_dict(self) -> dict:
        out = {"total": self.total, "blocks": []}
        for qc in sorted(self.blocks):
            labels, mat = self.blocks[qc]
            out["blocks"].append({
                "complement_charge": int(qc),
                "labels": [list(p) for p in labels],
                "real": mat.real.tolist(),
                "imag": mat.imag.tolist(),
            })
        return out


@dataclass
class PartialTransposeRdm:
    """Partial transpose of an EndPairRdm, blocked by q = n1 - nN."""

    total: int
    blocks: dict                    # q -> (list[(n1, nN)], ndarray)

    def trace(self) -> float:
        return float(sum(np.trace(mat).real for _, mat in self.blocks.values()))

    def spectrum(self) -> np.ndarray:
        vals = [np.linalg.eigvalsh(mat) for _, mat in self.blocks.values()]
        return np.sort(np.concatenate(vals))


def end_pair_rdm(state: CanonicalMps,
                 support_budget: int = DEFAULT_SUPPORT_BUDGET) -> EndPairRdm:
    """Reduced density matrix of the first and last site.

    Sweeps the interior transfer tensors into a support array indexed by
    (bond-1 pair, bond-k pair); raises ResourceError if that array would
    exceed support_budget complex entries.
    """
    n = state.n_sites
    if n < 3:
        raise ValidationError("end-pair reduction needs at least 3 sites")
    d = state.local_dim
    mats = [state._site_matrices(k) for k in range(n)]
    a_edge = mats[0][0]           # (chi1, d)
    chi1 = a_edge.shape[0]
    # support tensor V[b1, b1', bk, bk'] starts as the identity at bond 1
    v = np.einsum("ac,bd->abcd", np.eye(chi1, dtype=complex),
                  np.eye(chi1, dtype=complex))
    for k in range(1, n - 1):
        t = mats[k]
        if chi1 * chi1 * t.shape[1] ** 2 > support_budget:
            raise ResourceError("end-pair support tensor exceeds memory budget")
        v = np.einsum("abcd,cmi,dni->abmn", v, t, t.conj(), optimize=True)
    b_edge = mats[n - 1][:, 0, :]  # (chiL, d)
    rho = np.einsum("ax,abcd,by,cm,dn->xmyn",
                    a_edge, v, a_edge.conj(), b_edge, b_edge.conj(),
                    optimize=True)
    # rho[n1, nN, n1', nN'] -> blocks by pair total P = n1 + nN
    m = state.total
    blocks = {}
    for p in range(0, min(2 * (d - 1), m) + 1):
        labels = [(n1, p - n1) for n1 in range(max(0, p - d + 1), min(d - 1, p) + 1)]
        size = len(labels)
        mat = np.empty((size, size), dtype=complex)
        for r, (n1, nn) in enumerate(labels):
            for c, (n1p, nnp) in enumerate(labels):
                mat[r, c] = rho[n1, nn, n1p, nnp]
        if np.max(np.abs(mat)) < 1e-300:
            continue
        blocks[m - p] = (labels, mat)
    return EndPairRdm(total=m, blocks=blocks)


def partial_transpose(rdm: EndPairRdm) -> PartialTransposeRdm:
    """eta[(n1,nN),(n1',nN')] = rho[(n1,nN'),(n1',nN)], regrouped by n1 - nN."""
    entries = {}
    for qc, (labels, mat) in rdm.blocks.items():
        for r, (a, b) in enumerate(labels):
            for c, (cc, e) in enumerate(labels):
                # source rho[(a,b),(cc,e)] lands at eta[(a,e),(cc,b)]
                entries.setdefault(a - e, {})[((a, e), (cc, b))] = mat[r, c]
    blocks = {}
    for q, items in entries.items():
        labels = sorted({row for row, _ in items} | {col for _, col in items})
        pos = {lab: i for i, lab in enumerate(labels)}
        mat = np.zeros((len(labels), len(labels)), dtype=complex)
        for (row, col), val in items.items():
            mat[pos[row], pos[col]] = val
        blocks[q] = (labels, mat)
    return PartialTransposeRdm(total=rdm.total, blocks=blocks)


def log_negativity(rdm) -> float:
    """E_N = log2(1 - 2 sum of negative partial-transpose eigenvalues).

    Accepts an EndPairRdm (transposed internally) or a PartialTransposeRdm.
    Eigenvalue dust above -1e-12 counts as zero; genuine negativity never
    gets clamped.
    """
    if isinstance(rdm, EndPairRdm):
        rdm = partial_transpose(rdm)
    neg = 0.0
    for _, mat in rdm.blocks.values():
        vals = np.linalg.eigvalsh(mat)
        neg += vals[vals < -NEGATIVITY_DUST].sum()
    return float(np.log2(1.0 - 2.0 * neg))


def zeta(state: CanonicalMps) -> float:
    """Fraction of the bosons sitting on the two terminal sites."""
    n = state.n_sites
    return float((state.expectation_number(0) + state.expectation_number(n - 1))
                 / state.total)


def epsilon_ab(rdm: EndPairRdm) -> float:
    """Splitter witness tr(a_1^dag a_N rho); positive signals entanglement.

    Matches the measured particle excess in one splitter output when the
    terminals are saturated; returns the real part of the coherence sum.
    """
    acc = 0.0 + 0.0j
    for qc, (labels, mat) in rdm.blocks.items():
        pos = {lab: i for i, lab in enumerate(labels)}
        for c, (n1, nn) in enumerate(labels):
            target = (n1 + 1, nn - 1)
            if target in pos:
                acc += mat[c, pos[target]] * np.sqrt((n1 + 1) * nn)
    return float(acc.real)

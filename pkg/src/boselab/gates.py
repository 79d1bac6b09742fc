"""Number-conserving gates on one site or a pair of adjacent sites.

A two-site gate is stored as one dense block per pair charge Q = i + j, acting
on the basis {(i, j) : i + j = Q, 0 <= i, j < d} ordered by ascending i.  This
makes charge conservation structural rather than something to verify.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .linalg import expm_hermitian_scaled

UNITARITY_ATOL = 1e-10


def pair_basis(d: int, q: int) -> list[tuple[int, int]]:
    """Occupation pairs (i, j) with i + j = q, ascending in i."""
    return [(i, q - i) for i in range(max(0, q - d + 1), min(d - 1, q) + 1)]


class TwoSiteGate:
    """Charge-blocked operator on two adjacent local spaces of dimension d."""

    def __init__(self, d: int, blocks: dict[int, np.ndarray], bond: int | None = None):
        self.d = int(d)
        self.bond = bond
        self.blocks = {}
        for q, mat in blocks.items():
            n = len(pair_basis(d, q))
            if n == 0:
                raise ValidationError(f"pair charge {q} impossible for d={d}")
            mat = np.asarray(mat, dtype=complex)
            if mat.shape != (n, n):
                raise ValidationError(
                    f"block Q={q} has shape {mat.shape}, expected {(n, n)}"
                )
            self.blocks[int(q)] = mat

    def block(self, q: int) -> np.ndarray:
        """Block for pair charge q; identity if the gate never touches it."""
        if q not in self.blocks:
            n = len(pair_basis(self.d, q))
            self.blocks[q] = np.eye(n, dtype=complex)
        return self.blocks[q]

    def is_unitary(self, atol: float = UNITARITY_ATOL) -> bool:
        for mat in self.blocks.values():
            dev = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
            if dev > atol:
                return False
        return True

    def require_unitary(self, atol: float = UNITARITY_ATOL) -> "TwoSiteGate":
        if not self.is_unitary(atol):
            raise ValidationError("gate blocks are not unitary")
        return self

    def to_dense(self) -> np.ndarray:
        """Dense d^2 x d^2 matrix in the basis |i, j> -> index i*d + j."""
        d = self.d
        out = np.zeros((d * d, d * d), dtype=complex)
        for q in range(0, 2 * d - 1):
            basis = pair_basis(d, q)
            blk = self.block(q)
            for r, (i1, j1) in enumerate(basis):
                for c, (i2, j2) in enumerate(basis):
                    out[i1 * d + j1, i2 * d + j2] = blk[r, c]
        return out

    @classmethod
    def from_dense(cls, d: int, mat, bond: int | None = None,
                   atol: float = 1e-12) -> "TwoSiteGate":
        """Split a dense two-site matrix into charge blocks.

        Raises ValidationError if the matrix couples different pair charges.
        """
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (d * d, d * d):
            raise ValidationError(f"dense gate must be {d*d}x{d*d}")
        charge_of = np.array([i + j for i in range(d) for j in range(d)])
        blocks = {}
        leak = 0.0
        for q in range(0, 2 * d - 1):
            sel = np.flatnonzero(charge_of == q)
            blocks[q] = mat[np.ix_(sel, sel)]
            other = np.flatnonzero(charge_of != q)
            if other.size:
                leak = max(leak, np.max(np.abs(mat[np.ix_(sel, other)])))
        if leak > atol:
            raise ValidationError(
                f"gate violates charge conservation (leak {leak:.3e})"
            )
        return cls(d, blocks, bond)

    @classmethod
    def from_pair_hamiltonian(cls, d: int, herm_blocks: dict[int, np.ndarray],
                              z: complex, bond: int | None = None) -> "TwoSiteGate":
        """exp(z * h) blockwise for a charge-blocked Hermitian pair operator."""
        return cls(d, {q: expm_hermitian_scaled(h, z) for q, h in herm_blocks.items()},
                   bond)


def number_operator(d: int) -> np.ndarray:
    return np.diag(np.arange(d, dtype=float))


def lowering_operator(d: int) -> np.ndarray:
    """Bosonic annihilation operator truncated to d levels."""
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)


def phase_gate(d: int, theta: float) -> np.ndarray:
    """One-site phases e^{-i theta n} as a length-d vector."""
    return np.exp(-1j * theta * np.arange(d))


def current_blocks(d: int, phi: float) -> dict[int, np.ndarray]:
    """Hermitian pair blocks of phi * Q_hat with Q = (a2^dag a1 - a1^dag a2)/(2i).

    Exponentiating with z = -i gives the current (beam-splitter) unitary that
    rotates the pair of creation-operator coefficients by phi/2.
    """
    a = lowering_operator(d)
    # kron(A, B) puts A on the first site of the pair: a2^dag a1 = kron(a, adag)
    q_dense = (np.kron(a, a.conj().T) - np.kron(a.conj().T, a)) / 2j
    charge_of = np.array([i + j for i in range(d) for j in range(d)])
    blocks = {}
    for q in range(0, 2 * d - 1):
        sel = np.flatnonzero(charge_of == q)
        blocks[q] = phi * q_dense[np.ix_(sel, sel)]
    return blocks


def current_gate(d: int, phi: float, bond: int | None = None) -> TwoSiteGate:
    """Two-site current unitary e^{-i phi Q_hat}."""
    return TwoSiteGate.from_pair_hamiltonian(d, current_blocks(d, phi), -1j, bond)


def random_number_conserving_gate(d: int, rng: np.random.Generator,
                                  bond: int | None = None) -> TwoSiteGate:
    """Haar-ish random unitary per charge block (test utility)."""
    blocks = {}
    for q in range(0, 2 * d - 1):
        n = len(pair_basis(d, q))
        h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = (h + h.conj().T) / 2
        blocks[q] = expm_hermitian_scaled(h, -1j)
    return TwoSiteGate(d, blocks, bond)

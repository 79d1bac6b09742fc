"""Bose-Hubbard chain specification and number-conserving gate construction.

H = sum_k U_k/2 n_k(n_k - 1) - sum_k J_k (a_{k+1}^dag a_k + a_k^dag a_{k+1})
  + sum_k mu_k n_k, energies in recoil units E_R.

On-site terms are distributed onto the adjacent bonds with weight 1/2 for
interior sites and weight 1 on the single bond touching a terminal, so the
bond generators sum to H exactly.  Optional per-site diagonal extras (tables
over occupation) carry the perturbation potentials used in the quench runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .gates import TwoSiteGate, lowering_operator, pair_basis

# experimental lattice constants for J(V0), from the standard 1D calibration
LATTICE_A = 1.397
LATTICE_B = 1.051
LATTICE_C = 2.121


def hopping_profile(kind: str, n_sites: int, lam: float = 2.0) -> np.ndarray:
    """Bond hoppings J_k for k = 1..N-1.

    'PTH' gives J_k = (lam/2) sqrt(k (N-k)), the profile with exact
    mirror-reflection at t = pi/lam; 'CH' gives the constant profile J_k = 1.
    """
    if n_sites < 2:
        raise ValidationError("need at least two sites for a hopping profile")
    kind = kind.upper()
    k = np.arange(1, n_sites)
    if kind == "PTH":
        if lam <= 0:
            raise ValidationError("PTH scale must be positive")
        return (lam / 2.0) * np.sqrt(k * (n_sites - k))
    if kind == "CH":
        return np.ones(n_sites - 1)
    raise ValidationError(f"unknown hopping kind {kind!r}")


@dataclass
class BhChainSpec:
    """Couplings of an open Bose-Hubbard chain (energies in E_R)."""

    repulsions: np.ndarray       # U_k, length N
    hoppings: np.ndarray         # J_k, length N-1
    potentials: np.ndarray       # mu_k, length N
    site_diagonals: np.ndarray | None = field(default=None)  # (N, d) extras

    def __post_init__(self):
        self.repulsions = np.asarray(self.repulsions, dtype=float)
        self.hoppings = np.asarray(self.hoppings, dtype=float)
        self.potentials = np.asarray(self.potentials, dtype=float)
        n = self.repulsions.shape[0]
        if self.hoppings.shape != (n - 1,) or self.potentials.shape != (n,):
            raise ValidationError("coupling array lengths are inconsistent")
        for arr in (self.repulsions, self.hoppings, self.potentials):
            if not np.all(np.isfinite(arr)):
                raise ValidationError("couplings must be finite")
        if self.site_diagonals is not None:
            self.site_diagonals = np.asarray(self.site_diagonals, dtype=float)
            if self.site_diagonals.ndim != 2 or self.site_diagonals.shape[0] != n:
                raise ValidationError("site_diagonals must have shape (N, d)")

    @property
    def n_sites(self) -> int:
        return len(self.repulsions)

    @classmethod
    def uniform(cls, n_sites: int, u: float, j, mu: float = 0.0) -> "BhChainSpec":
        j_arr = np.full(n_sites - 1, j) if np.isscalar(j) else np.asarray(j, float)
        return cls(np.full(n_sites, u), j_arr, np.full(n_sites, mu))

    def with_perturbation(self, tables: np.ndarray) -> "BhChainSpec":
        """Copy of the spec with per-site diagonal tables added."""
        extra = np.asarray(tables, dtype=float)
        if self.site_diagonals is not None:
            extra = extra + self.site_diagonals
        return BhChainSpec(self.repulsions, self.hoppings, self.potentials, extra)

    def content_key(self) -> tuple:
        parts = [self.repulsions.tobytes(), self.hoppings.tobytes(),
                 self.potentials.tobytes()]
        if self.site_diagonals is not None:
            parts.append(self.site_diagonals.tobytes())
        return tuple(parts)

    def _site_diag(self, k: int, d: int) -> np.ndarray:
        n = np.arange(d, dtype=float)
        diag = 0.5 * self.repulsions[k] * n * (n - 1) + self.potentials[k] * n
        if self.site_diagonals is not None:
            if self.site_diagonals.shape[1] < d:
                raise ValidationError("site_diagonals table shorter than local dim")
            diag = diag + self.site_diagonals[k, :d]
        return diag

    def bond_blocks(self, bond: int, d: int) -> dict[int, np.ndarray]:
        """Hermitian pair-charge blocks of the bond generator.

        Interior on-site terms enter with weight 1/2, terminal ones with
        weight 1, so that the sum of bond generators reproduces H exactly.
        """
        n_sites = self.n_sites
        if not 0 <= bond < n_sites - 1:
            raise ValidationError(f"bond {bond} out of range")
        wl = 1.0 if bond == 0 else 0.5
        wr = 1.0 if bond == n_sites - 2 else 0.5
        diag_l = wl * self._site_diag(bond, d)
        diag_r = wr * self._site_diag(bond + 1, d)
        a = lowering_operator(d)
        sqrt_n = np.sqrt(np.arange(1, d, dtype=float))
        j = self.hoppings[bond]
        blocks = {}
        for q in range(0, 2 * d - 1):
            basis = pair_basis(d, q)
            m = len(basis)
            h = np.zeros((m, m), dtype=complex)
            for r, (i1, j1) in enumerate(basis):
                h[r, r] = diag_l[i1] + diag_r[j1]
                # -J a_{k+1}^dag a_k moves one boson right: (i1, j1)->(i1-1, j1+1)
                if i1 > 0 and j1 + 1 < d:
                    c = r - 1  # basis ordered by ascending left occupation
                    amp = -j * sqrt_n[i1 - 1] * sqrt_n[j1]
                    h[c, r] += amp
                    h[r, c] += amp
            blocks[q] = h
        return blocks

    def dense_hamiltonian_2site(self, d: int) -> np.ndarray:
        """Full H for N=2 in the product basis (testing hook)."""
        if self.n_sites != 2:
            raise ValidationError("only defined for N=2")
        a = lowering_operator(d)
        eye = np.eye(d)
        h = (np.kron(np.diag(self._site_diag(0, d)), eye)
             + np.kron(eye, np.diag(self._site_diag(1, d)))
             - self.hoppings[0] * (np.kron(a, a.conj().T) + np.kron(a.conj().T, a)))
        return h


def build_gate(spec: BhChainSpec, bond: int, z: complex, d: int) -> TwoSiteGate:
    """Blockwise exp(z * h_bond); unitary for z = -i dt, contraction for z = -dtau."""
    return TwoSiteGate.from_pair_hamiltonian(d, spec.bond_blocks(bond, d), z, bond)


def trotter_schedule(n_sites: int, order: int = 2) -> list[tuple[int, float]]:
    """Second-order sweep: odd-pair bonds at half weight, even-pair bonds full.

    Bonds are 0-based; bond b couples sites (b, b+1).  The first/last groups
    are the pairs (1,2), (3,4), ... in 1-based labels, i.e. even 0-based bonds.
    For N=2 the two half applications merge into a single full one.
    """
    if order != 2:
        raise ValidationError("only the second-order schedule is implemented")
    if n_sites < 2:
        raise ValidationError("need at least two sites")
    odd = list(range(0, n_sites - 1, 2))
    even = list(range(1, n_sites - 1, 2))
    if not even:
        return [(b, 1.0) for b in odd]
    return ([(b, 0.5) for b in odd] + [(b, 1.0) for b in even]
            + [(b, 0.5) for b in odd])


def perturbation_profile(n_sites: int, n0: float, eps: float,
                         d: int) -> np.ndarray:
    """Per-site diagonal tables h_j(n) of the boson-balance perturbation.

    Intermediate sites get eps * k * n with k the distance to the closest
    terminal; terminals get eps * (-n^2 + ((N+1)/2 + 2 n0) n), which balances
    the energy of moving bosons from the middle onto the ends step by step.
    Returns an (N, d) array; all entries zero for eps = 0.
    """
    if n_sites < 2:
        raise ValidationError("need at least two sites")
    x = np.arange(d, dtype=float)
    tables = np.zeros((n_sites, d))
    c2 = -eps
    c1 = ((n_sites + 1) / 2.0 + 2.0 * n0) * eps
    for site in range(n_sites):
        if site in (0, n_sites - 1):
            tables[site] = c2 * x**2 + c1 * x
        else:
            k = min(site, n_sites - 1 - site)
            tables[site] = eps * k * x
    return tables


def lattice_params(v0: float, v_perp: float, a_s: float, d: float) -> tuple[float, float]:
    """(J, U) in units of E_R from optical-lattice depths.

    J = A (V0/E_R)^B exp(-C sqrt(V0/E_R)) with A=1.397, B=1.051, C=2.121;
    U = 2 a_s / d * sqrt(2 pi V_perp) * V0^(1/4), all depths in E_R.
    """
    if min(v0, v_perp, a_s, d) <= 0:
        raise ValidationError("lattice parameters must be positive")
    j = LATTICE_A * v0**LATTICE_B * np.exp(-LATTICE_C * np.sqrt(v0))
    u = (2.0 * a_s / d) * np.sqrt(2.0 * np.pi * v_perp) * v0**0.25
    return float(j), float(u)

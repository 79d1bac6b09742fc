"""Vidal canonical form for a bosonic chain with exact particle-number symmetry.

State data per site n: Gamma[n][alpha, beta, i] (left bond, right bond, local
occupation) and per bond b: Schmidt values lambda[b] (descending) plus integer
charges S[b][alpha] = bosons contained in the block to the right of the bond.
An entry Gamma[n][a, b, i] can be nonzero only when S[n][a] == i + S[n+1][b];
the boundary bonds hold a single ancillary vector with lambda = 1 and charges
M (left edge) and 0 (right edge).

Two-site updates follow the reduced-density-matrix route: build the two-site
coefficient tensor blockwise per new bond charge, diagonalize the right-block
RDM of each charge block, truncate the combined spectrum, and recover the new
Gamma tensors by projection.  Local dimension is fixed at d = M + 1, which is
exact for a closed chain of M bosons.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from ._backend import spectra_from_thetas
from .errors import NumericalError, ResourceError, ValidationError
from .gates import TwoSiteGate

DEFAULT_TRUNC_REL = 1e-14
# Schmidt values come from eigenvalues of a Gram matrix, so anything below
# sqrt(machine epsilon) of the total weight is unresolvable noise; retaining
# such channels poisons later updates through the lambda divisions.
EIG_NOISE_REL = 1e-15
DEFAULT_DENSE_LIMIT = 1 << 21
UNITARITY_ONE_SITE = 1e-10


def occupation_basis(n_sites: int, total: int) -> list[tuple[int, ...]]:
    """All occupation tuples of length n_sites summing to total (lexicographic)."""
    out: list[tuple[int, ...]] = []

    def rec(prefix, rem, sites):
        if sites == 1:
            out.append(tuple(prefix) + (rem,))
            return
        for n in range(rem + 1):
            rec(prefix + [n], rem - n, sites - 1)

    rec([], total, n_sites)
    return out


def _sectors(charges: np.ndarray) -> dict[int, np.ndarray]:
    """Charge value -> ascending index array."""
    out: dict[int, np.ndarray] = {}
    for val in np.unique(charges):
        out[int(val)] = np.flatnonzero(charges == val)
    return out


@dataclass
class UpdateInfo:
    """Bookkeeping returned by a two-site update."""

    norm: float            # norm of the evolved (pre-truncation) two-site state
    truncated_weight: float  # discarded probability weight, relative
    chi: int               # retained bond dimension
    capped: bool = False   # True when chi_max discarded above-threshold values


class CanonicalMps:
    """Pure state of N sites and M bosons in Vidal canonical form."""

    def __init__(self, gammas, lambdas, charges, total, chi_max=None,
                 trunc_rel=DEFAULT_TRUNC_REL):
        self.gammas = gammas
        self.lambdas = lambdas
        self.charges = charges
        self.total = int(total)
        self.chi_max = chi_max
        self.trunc_rel = float(trunc_rel)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_product_fock(cls, occupations, chi_max=None,
                          trunc_rel=DEFAULT_TRUNC_REL,
                          local_dim=None) -> "CanonicalMps":
        """Product Fock state; local_dim defaults to M+1 (exact for M bosons).

        A larger local_dim leaves headroom for later creation operators, as
        used by the two-sum folding pipeline.
        """
        occ = [int(x) for x in occupations]
        if any(x < 0 for x in occ):
            raise ValidationError("occupations must be non-negative")
        n = len(occ)
        if n < 1:
            raise ValidationError("need at least one site")
        total = sum(occ)
        d = total + 1 if local_dim is None else int(local_dim)
        if d < total + 1:
            raise ValidationError("local_dim too small for the boson count")
        gammas = []
        charges = [np.array([total], dtype=np.int64)]
        lambdas = [np.array([1.0])]
        right = total
        for k in range(n):
            g = np.zeros((1, 1, d), dtype=complex)
            g[0, 0, occ[k]] = 1.0
            gammas.append(g)
            right -= occ[k]
            charges.append(np.array([right], dtype=np.int64))
            lambdas.append(np.array([1.0]))
        return cls(gammas, lambdas, charges, total, chi_max, trunc_rel)

    def copy(self) -> "CanonicalMps":
        return CanonicalMps(
            [g.copy() for g in self.gammas],
            [l.copy() for l in self.lambdas],
            [c.copy() for c in self.charges],
            self.total, self.chi_max, self.trunc_rel,
        )

    # -- simple views ------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.gammas)

    @property
    def local_dim(self) -> int:
        return self.gammas[0].shape[2]

    @property
    def chi(self) -> int:
        """Largest bond dimension over interior bonds."""
        if self.n_sites == 1:
            return 1
        return max(len(l) for l in self.lambdas[1:-1])

    def schmidt_spectrum(self, bond: int) -> np.ndarray:
        """Schmidt values on the cut between sites bond and bond+1."""
        self._check_bond(bond)
        return self.lambdas[bond + 1].copy()

    def block_entropy(self, bond: int) -> float:
        """von Neumann entropy (bits) of either block at the given cut."""
        lam2 = self.schmidt_spectrum(bond) ** 2
        lam2 = lam2[lam2 > 0]
        return float(-(lam2 * np.log2(lam2)).sum())

    def _check_bond(self, bond: int) -> None:
        if not 0 <= bond < self.n_sites - 1:
            raise ValidationError(f"bond {bond} out of range for N={self.n_sites}")

    def _check_site(self, site: int) -> None:
        if not 0 <= site < self.n_sites:
            raise ValidationError(f"site {site} out of range for N={self.n_sites}")

    # -- local expectation values -------------------------------------------

    def site_distribution(self, site: int) -> np.ndarray:
        """Probabilities of finding 0..d-1 bosons on the site."""
        self._check_site(site)
        g = self.gammas[site]
        wl = self.lambdas[site] ** 2
        wr = self.lambdas[site + 1] ** 2
        return np.einsum("a,abi,abi,b->i", wl, g.conj(), g, wr).real

    def expectation_number(self, site: int) -> float:
        p = self.site_distribution(site)
        return float(p @ np.arange(self.local_dim))

    def fluctuation(self, site: int) -> float:
        p = self.site_distribution(site)
        n = np.arange(self.local_dim)
        var = float(p @ n**2) - float(p @ n) ** 2
        return float(np.sqrt(max(var, 0.0)))

    def occupation_profile(self) -> np.ndarray:
        return np.array([self.expectation_number(k) for k in range(self.n_sites)])

    # -- global contractions -------------------------------------------------

    def _site_matrices(self, n: int) -> np.ndarray:
        """Gamma with the right bond lambda absorbed (last site keeps none)."""
        g = self.gammas[n]
        if n == self.n_sites - 1:
            return g
        return g * self.lambdas[n + 1][None, :, None]

    def overlap(self, other: "CanonicalMps") -> complex:
        """<self|other> including the left-edge lambdas (both are 1)."""
        if (self.n_sites, self.total) != (other.n_sites, other.total):
            raise ValidationError("states must share N and M")
        L = np.ones((1, 1), dtype=complex)
        for n in range(self.n_sites):
            a = self._site_matrices(n)
            b = other._site_matrices(n)
            nxt = np.zeros((a.shape[1], b.shape[1]), dtype=complex)
            for i in range(self.local_dim):
                nxt += a[:, :, i].conj().T @ L @ b[:, :, i]
            L = nxt
        return complex(L[0, 0])

    def norm(self) -> float:
        return float(np.sqrt(abs(self.overlap(self))))

    def to_dense(self, max_basis: int = DEFAULT_DENSE_LIMIT):
        """Amplitudes over occupation_basis(N, M), normalized.

        Raises ResourceError when the basis would exceed max_basis states.
        """
        n, m = self.n_sites, self.total
        size = comb(m + n - 1, n - 1)
        if size > max_basis:
            raise ResourceError(f"dense basis of {size} states exceeds {max_basis}")
        basis = occupation_basis(n, m)
        amps = np.empty(size, dtype=complex)
        mats = [self._site_matrices(k) for k in range(n)]
        for idx, occ in enumerate(basis):
            v = np.ones((1, 1), dtype=complex)
            for k, i in enumerate(occ):
                v = v @ mats[k][:, :, i]
            amps[idx] = v[0, 0]
        return basis, amps

    def validate(self, atol: float = 1e-8) -> None:
        """Assert canonical-form invariants; raises ValidationError."""
        for b in range(1, self.n_sites):
            s = float((self.lambdas[b] ** 2).sum())
            if abs(s - 1.0) > 1e-10:
                raise ValidationError(f"bond {b}: sum lambda^2 = {s}")
            if np.any(np.diff(self.lambdas[b]) > 1e-12):
                raise ValidationError(f"bond {b}: lambdas not descending")
        for n in range(self.n_sites):
            g = self.gammas[n]
            sl = self.charges[n][:, None, None]
            sr = self.charges[n + 1][None, :, None]
            i = np.arange(self.local_dim)[None, None, :]
            bad = np.abs(g) * (sl != i + sr)
            if bad.size and bad.max() > 1e-12:
                raise ValidationError(f"site {n}: charge-inconsistent Gamma entry")
        nrm = self.norm()
        if abs(nrm - 1.0) > atol:
            raise ValidationError(f"state norm {nrm} deviates from 1")

    # -- updates ---------------------------------------------------------------

    def apply_one_site(self, site: int, phases) -> None:
        """Apply a number-conserving one-site unitary (occupation phases).

        Accepts a length-d phase vector or a d x d matrix that must be
        diagonal; only Gamma[site] changes.
        """
        self._check_site(site)
        d = self.local_dim
        phases = np.asarray(phases, dtype=complex)
        if phases.ndim == 2:
            if phases.shape != (d, d):
                raise ValidationError("one-site gate has wrong shape")
            off = phases - np.diag(np.diag(phases))
            if off.size and np.max(np.abs(off)) > 1e-12:
                raise ValidationError("one-site gate must be diagonal in occupation")
            phases = np.diag(phases)
        if phases.shape != (d,):
            raise ValidationError("phase vector has wrong length")
        if np.max(np.abs(np.abs(phases) - 1.0)) > UNITARITY_ONE_SITE:
            raise ValidationError("one-site gate is not unitary")
        self.gammas[site] = self.gammas[site] * phases[None, None, :]

    def apply_two_site(self, bond: int, gate: TwoSiteGate) -> UpdateInfo:
        """Apply a charge-blocked gate to sites (bond, bond+1).

        Only Gamma[bond], Gamma[bond+1] and the central lambda/charges change.
        The evolved Schmidt spectrum comes from blockwise diagonalization of
        the right-block reduced density matrix; values below trunc_rel times
        the largest are dropped, then chi_max caps the count (ties broken by
        lower charge, then lower original position).  The state is
        renormalized; the pre-truncation norm is returned for imaginary-time
        energy bookkeeping.
        """
        self._check_bond(bond)
        d = self.local_dim
        if gate.d != d:
            raise ValidationError("gate local dimension mismatch")
        n = bond
        gl, gr = self.gammas[n], self.gammas[n + 1]
        lam_l, lam_c, lam_r = self.lambdas[n], self.lambdas[n + 1], self.lambdas[n + 2]
        sec_l = _sectors(self.charges[n])
        sec_c = _sectors(self.charges[n + 1])
        sec_r = _sectors(self.charges[n + 2])

        # phi tensors per (a, c): left lambdas excluded, central/right included
        contrib: dict[int, list] = {}
        for a, ia in sec_l.items():
            for c, ic in sec_r.items():
                q = a - c
                if q < 0 or q > 2 * (d - 1):
                    continue
                s_hi = min(a, c + d - 1)
                s_lo = max(c, a - d + 1)
                s_full = list(range(s_hi, s_lo - 1, -1))  # ascending i' = a - s
                pieces = []
                cols = []
                for pos, s in enumerate(s_full):
                    im = sec_c.get(s)
                    if im is None:
                        continue
                    i, j = a - s, s - c
                    tl = gl[np.ix_(ia, im, [i])][:, :, 0] * lam_c[im][None, :]
                    tr = gr[np.ix_(im, ic, [j])][:, :, 0] * lam_r[ic][None, :]
                    pieces.append(tl @ tr)
                    cols.append(pos)
                if not pieces:
                    continue
                t_in = np.stack(pieces, axis=1)  # (nL, ns_in, nR)
                g_block = gate.block(q)
                t_out = np.tensordot(g_block[:, cols], t_in, axes=(1, 1))
                t_out = t_out.transpose(1, 0, 2)  # (nL, ns_full, nR)
                for pos, s_new in enumerate(s_full):
                    blk = np.ascontiguousarray(t_out[:, pos, :])
                    if not np.any(blk):
                        continue
                    contrib.setdefault(s_new, []).append((a, c, blk))

        if not contrib:
            raise NumericalError("two-site update produced an empty state")

        # assemble per new-charge theta blocks
        b_vals = sorted(contrib)
        thetas, weights, row_specs, col_specs = [], [], [], []
        for b in b_vals:
            entries = contrib[b]
            a_set = sorted({a for a, _, _ in entries})
            c_set = sorted({c for _, c, _ in entries})
            row_ofs, col_ofs = {}, {}
            r = 0
            for a in a_set:
                row_ofs[a] = r
                r += len(sec_l[a])
            ccount = 0
            for c in c_set:
                col_ofs[c] = ccount
                ccount += len(sec_r[c])
            theta = np.zeros((r, ccount), dtype=complex)
            wrow = np.empty(r)
            for a in a_set:
                wrow[row_ofs[a]:row_ofs[a] + len(sec_l[a])] = lam_l[sec_l[a]]
            for a, c, blk in entries:
                theta[row_ofs[a]:row_ofs[a] + blk.shape[0],
                      col_ofs[c]:col_ofs[c] + blk.shape[1]] = blk
            thetas.append(theta)
            weights.append(wrow)
            row_specs.append((a_set, row_ofs))
            col_specs.append((c_set, col_ofs))

        vals_list, vecs_list = spectra_from_thetas(thetas, weights)

        total_weight = float(sum(v.sum() for v in vals_list))
        candidates = []  # (lambda, b_index, column, orig)
        orig = 0
        for bi, vals in enumerate(vals_list):
            for col, p in enumerate(vals):
                lam = np.sqrt(p) if p > 0 else 0.0
                candidates.append((lam, bi, col, orig))
                orig += 1
        lam_max = max(c[0] for c in candidates)
        if lam_max <= 0:
            raise NumericalError("post-truncation Schmidt spectrum is empty")
        thr = max(self.trunc_rel * lam_max,
                  np.sqrt(EIG_NOISE_REL * total_weight))
        kept = [c for c in candidates if c[0] >= thr]
        kept.sort(key=lambda c: (-c[0], b_vals[c[1]], c[3]))
        capped = self.chi_max is not None and len(kept) > self.chi_max
        if capped:
            kept = kept[: self.chi_max]
        if not kept:
            raise NumericalError("post-truncation Schmidt spectrum is empty")

        lam_new = np.array([c[0] for c in kept])
        kept_weight = float((lam_new**2).sum())
        scale = np.sqrt(kept_weight)
        lam_new /= scale
        charges_new = np.array([b_vals[c[1]] for c in kept], dtype=np.int64)

        chi_l, chi_r = gl.shape[0], gr.shape[1]
        k = len(kept)
        gl_new = np.zeros((chi_l, k, d), dtype=complex)
        gr_new = np.zeros((k, chi_r, d), dtype=complex)
        # per-block projections, gathered per kept vector
        for pos, (lam, bi, col, _) in enumerate(kept):
            b = b_vals[bi]
            w_col = vecs_list[bi][:, col]
            phi = thetas[bi]  # no left lambdas, so no division by them
            x = phi @ w_col  # (rows,)
            sqrt_p = lam     # raw Schmidt value of the evolved two-site state
            a_set, row_ofs = row_specs[bi]
            for a in a_set:
                ia = sec_l[a]
                sl = slice(row_ofs[a], row_ofs[a] + len(ia))
                gl_new[ia, pos, a - b] = x[sl] / sqrt_p
            c_set, col_ofs = col_specs[bi]
            for c in c_set:
                ic = sec_r[c]
                sl = slice(col_ofs[c], col_ofs[c] + len(ic))
                gr_new[pos, ic, b - c] = w_col[sl].conj() / lam_r[ic]

        self.gammas[n] = gl_new
        self.gammas[n + 1] = gr_new
        self.lambdas[n + 1] = lam_new
        self.charges[n + 1] = charges_new
        return UpdateInfo(
            norm=float(np.sqrt(total_weight)),
            truncated_weight=max(0.0, 1.0 - kept_weight / total_weight),
            chi=k,
            capped=capped,
        )

    def two_site_expectation(self, bond: int, herm_blocks: dict[int, np.ndarray]) -> float:
        """<psi| h |psi> for a charge-blocked Hermitian pair operator at bond."""
        self._check_bond(bond)
        d = self.local_dim
        n = bond
        gl, gr = self.gammas[n], self.gammas[n + 1]
        lam_l, lam_c, lam_r = self.lambdas[n], self.lambdas[n + 1], self.lambdas[n + 2]
        sec_l = _sectors(self.charges[n])
        sec_c = _sectors(self.charges[n + 1])
        sec_r = _sectors(self.charges[n + 2])
        acc = 0.0
        for a, ia in sec_l.items():
            for c, ic in sec_r.items():
                q = a - c
                if q < 0 or q > 2 * (d - 1) or q not in herm_blocks:
                    continue
                s_hi = min(a, c + d - 1)
                s_lo = max(c, a - d + 1)
                s_full = list(range(s_hi, s_lo - 1, -1))
                pieces, cols = [], []
                for pos, s in enumerate(s_full):
                    im = sec_c.get(s)
                    if im is None:
                        continue
                    i, j = a - s, s - c
                    tl = (gl[np.ix_(ia, im, [i])][:, :, 0]
                          * lam_c[im][None, :]) * lam_l[ia][:, None]
                    tr = gr[np.ix_(im, ic, [j])][:, :, 0] * lam_r[ic][None, :]
                    pieces.append(tl @ tr)
                    cols.append(pos)
                if not pieces:
                    continue
                t_in = np.stack(pieces, axis=1)
                h = herm_blocks[q][np.ix_(cols, cols)]
                t_h = np.tensordot(h, t_in, axes=(1, 1)).transpose(1, 0, 2)
                acc += np.vdot(t_in, t_h).real
        return float(acc)


def total_number(state: CanonicalMps) -> float:
    """Sum of site occupation expectations (must equal M)."""
    return float(state.occupation_profile().sum())

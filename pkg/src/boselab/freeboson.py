"""Exact treatment of quadratic boson chains and the state-folding pipeline.

A quadratic chain is fixed by a Hermitian single-particle matrix R; the
creation-operator coefficients obey d/dt alpha = -i R alpha, so everything
first-moment follows from the propagator exp(-i R t).  Condensate states
(sum_k c_k a_k^dag)^M |0> are injected into MPS form by folding: per-site
phases make the coefficients real, then nearest-neighbour current rotations
sweep the weight onto site 1; applying the inverse operations in reverse
order to |M,0,...,0> rebuilds the state with canonical tensors throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import atan2, lgamma

import numpy as np

from .entanglement import end_pair_rdm, log_negativity
from .errors import ValidationError
from .gates import current_gate, phase_gate
from .linalg import check_hermitian, expm_hermitian_scaled
from .mps import CanonicalMps

# defaults of the long-range trapped-chain runs (energies in E_R)
TRAP_OMEGA = 0.00046
TRAP_XI = 0.3
BARRIER_HEIGHT = 1000.0


@dataclass
class RMatrix:
    """Hermitian single-particle matrix with a provenance tag."""

    matrix: np.ndarray
    tag: str

    def __post_init__(self):
        self.matrix = check_hermitian(self.matrix)

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]


def build_r(variant: str, n_sites: int, **params) -> RMatrix:
    """Construct the single-particle matrix of a named chain variant.

    trap: diagonal Omega (i - center)^2 plus all-to-all hopping Xi / |i - j|
      (center is a 0-based site index, default the 1-based site N/2).
    barrier: trap plus a high diagonal wall on the sites strictly between
      the 1-based bounds barrier_between = (lo, hi).
    pth_central: mirror-symmetric hopping (lam/2) sqrt(k (N - k)) with an
      interaction mu on the two central diagonal entries (N even).
    angular: lam * J_x in the site basis plus the localized diagonal
      eps * exp(-beta m^2), with site k holding the azimuthal label
      m = j - k (0-based) and j = (N - 1) / 2.
    """
    if n_sites < 2:
        raise ValidationError("need at least two sites")
    idx = np.arange(n_sites)
    if variant in ("trap", "barrier"):
        omega = params.get("omega", TRAP_OMEGA)
        xi = params.get("xi", TRAP_XI)
        center = params.get("center", n_sites // 2 - 1)
        r = np.zeros((n_sites, n_sites))
        r[idx, idx] = omega * (idx - center) ** 2
        for i in range(n_sites):
            for j in range(i + 1, n_sites):
                r[i, j] = r[j, i] = xi / (j - i)
        if variant == "barrier":
            height = params.get("height", BARRIER_HEIGHT)
            lo, hi = params.get("barrier_between", (45, 55))
            inside = (idx + 1 > lo) & (idx + 1 < hi)
            r[idx[inside], idx[inside]] += height
        return RMatrix(r, variant)
    if variant == "pth_central":
        lam = params.get("lam", 1.0)
        mu = params.get("mu", 0.0)
        if n_sites % 2:
            raise ValidationError("pth_central expects an even chain")
        r = np.zeros((n_sites, n_sites))
        k = np.arange(1, n_sites)
        j_hop = (lam / 2.0) * np.sqrt(k * (n_sites - k))
        r[idx[:-1], idx[1:]] = j_hop
        r[idx[1:], idx[:-1]] = j_hop
        half = n_sites // 2
        r[half - 1, half - 1] = mu
        r[half, half] = mu
        return RMatrix(r, variant)
    if variant == "angular":
        lam = params.get("lam", 1.0)
        eps = params.get("eps", 0.0)
        beta = params.get("beta", 0.0)
        j = (n_sites - 1) / 2.0
        m = j - idx
        r = np.zeros((n_sites, n_sites))
        # <m|J_x|m'> = sqrt(j(j+1) - m m')/2 on the super/subdiagonal
        off = 0.5 * np.sqrt(j * (j + 1) - m[:-1] * m[1:])
        r[idx[:-1], idx[1:]] = lam * off
        r[idx[1:], idx[:-1]] = lam * off
        r[idx, idx] = eps * np.exp(-beta * m**2)
        return RMatrix(r, variant)
    raise ValidationError(f"unknown R-matrix variant {variant!r}")


def propagate(r: RMatrix, t: float) -> np.ndarray:
    """Unitary exp(-i R t)."""
    return expm_hermitian_scaled(r.matrix, -1j * t)


def evolve_coefficients(r: RMatrix, coeffs, t: float) -> np.ndarray:
    """Mode coefficients of (sum c_k a_k^dag) after evolving for time t.

    The Heisenberg flow of the creation operators maps the coefficient
    vector to exp(-i R t) c.
    """
    u = propagate(r, t)
    return u @ np.asarray(coeffs, dtype=complex)


def ground_mode(r: RMatrix) -> np.ndarray:
    """Normalized lowest eigenvector of R, largest entry made real positive."""
    w, v = np.linalg.eigh(r.matrix)
    c = v[:, 0]
    k = np.argmax(np.abs(c))
    c = c * np.exp(-1j * np.angle(c[k]))
    return c / np.linalg.norm(c)


def mode_occupations(coeffs, bosons: int) -> np.ndarray:
    """<n_i> of (sum c_k a_k^dag)^M |0> for a normalized mode."""
    c = np.asarray(coeffs)
    return bosons * np.abs(c) ** 2


def quench_occupations(r_prepare: RMatrix, r_evolve: RMatrix, bosons: int,
                       times) -> np.ndarray:
    """First-moment quench dynamics, shape (len(times), N).

    The chain starts in the condensate of r_prepare's ground mode and evolves
    under r_evolve; quadratic dynamics keeps the state a single-mode
    condensate, so no MPS machinery is needed for occupations.
    """
    c0 = ground_mode(r_prepare)
    out = np.empty((len(times), r_evolve.n_sites))
    for row, t in enumerate(times):
        out[row] = mode_occupations(evolve_coefficients(r_evolve, c0, t), bosons)
    return out


# ---------------------------------------------------------------------------
# state folding

PHASE = "phase"
CURRENT = "current"


@dataclass
class FoldPlan:
    """Ordered folding operations, each ('phase', site, theta) or
    ('current', bond, phi), recorded in forward (reducing) order."""

    n_sites: int
    ops: list

    def __post_init__(self):
        for kind, idx, angle in self.ops:
            if not np.isfinite(angle):
                raise ValidationError("fold angle must be finite")
            if kind == PHASE and not 0 <= idx < self.n_sites:
                raise ValidationError("phase site out of range")
            if kind == CURRENT and not 0 <= idx < self.n_sites - 1:
                raise ValidationError("current bond out of range")


def _rotate_pair(vec: np.ndarray, bond: int, phi: float) -> None:
    c, s = np.cos(phi / 2.0), np.sin(phi / 2.0)
    lo, hi = vec[bond], vec[bond + 1]
    vec[bond] = lo * c + hi * s
    vec[bond + 1] = -lo * s + hi * c


def apply_plan_to_coefficients(plan: FoldPlan, coeffs) -> np.ndarray:
    """Forward action of the plan on a coefficient vector."""
    c = np.asarray(coeffs, dtype=complex).copy()
    for kind, idx, angle in plan.ops:
        if kind == PHASE:
            c[idx] *= np.exp(-1j * angle)
        else:
            _rotate_pair(c, idx, angle)
    return c


def _fold_vector_ops(c: np.ndarray, first_bond: int,
                     phase_sites) -> tuple[list, np.ndarray]:
    """Phases then currents that sweep c onto site `first_bond`; mutates a copy."""
    n = len(c)
    ops = []
    c = c.copy()
    for site in phase_sites:
        theta = atan2(c[site].imag, c[site].real)
        if theta != 0.0:
            ops.append((PHASE, site, theta))
        c[site] = abs(c[site])
    real = c.real.copy()
    for bond in range(n - 2, first_bond - 1, -1):
        phi = 2.0 * atan2(real[bond + 1], real[bond])
        if phi != 0.0:
            ops.append((CURRENT, bond, phi))
        _rotate_pair(real, bond, phi)
    return ops, real.astype(complex)


def fold_single(coeffs) -> FoldPlan:
    """Plan reducing (sum c_k a_k^dag)^M |0> to (a_1^dag)^M |0>.

    Phases cancel arg(c_k); currents with tan(phi/2) = c_{k+1}/c_k sweep the
    weight down from the far end (atan2 handles vanishing pivots: a swap when
    only the upper coefficient is nonzero, nothing when both vanish).
    """
    c = np.asarray(coeffs, dtype=complex)
    if abs(np.linalg.norm(c) - 1.0) > 1e-12:
        raise ValidationError("mode coefficients must be normalized")
    ops, folded = _fold_vector_ops(c, 0, range(len(c)))
    if abs(folded[0] - 1.0) > 1e-10:
        raise ValidationError("folding failed to reach the unit vector")
    return FoldPlan(len(c), ops)


def _apply_inverse_plan(state: CanonicalMps, plan: FoldPlan) -> None:
    d = state.local_dim
    for kind, idx, angle in reversed(plan.ops):
        if kind == PHASE:
            state.apply_one_site(idx, phase_gate(d, -angle))
        else:
            state.apply_two_site(idx, current_gate(d, -angle, idx))


def unfold_into_mps(plan: FoldPlan, bosons: int, n_sites: int,
                    chi_max=None, trunc_rel=1e-14) -> CanonicalMps:
    """Rebuild the folded state in MPS form by inverting the plan on
    |M, 0, ..., 0>."""
    if plan.n_sites != n_sites:
        raise ValidationError("plan was built for a different chain length")
    occ = [bosons] + [0] * (n_sites - 1)
    state = CanonicalMps.from_product_fock(occ, chi_max=chi_max,
                                           trunc_rel=trunc_rel)
    _apply_inverse_plan(state, plan)
    return state


def fold_mode_into_mps(coeffs, bosons: int, chi_max=None,
                       trunc_rel=1e-14) -> CanonicalMps:
    """MPS of the condensate (sum c_k a_k^dag)^M |0>."""
    plan = fold_single(coeffs)
    return unfold_into_mps(plan, bosons, plan.n_sites, chi_max, trunc_rel)


def apply_creation_power(state: CanonicalMps, power: int) -> CanonicalMps:
    """Multiply the state by (a_1^dag)^power and renormalize (in place).

    Valid while all bosons sit on the first two sites (every bond from the
    second one on must hold a single Schmidt vector), which is exactly the
    mid-fold situation: the occupation shift then maps Schmidt vectors to
    orthogonal Schmidt vectors and only the first tensor and bond change.
    """
    if power < 0:
        raise ValidationError("power must be non-negative")
    if power == 0:
        return state
    d = state.local_dim
    for b in range(2, state.n_sites):
        if len(state.lambdas[b]) != 1:
            raise ValidationError(
                "creation power needs trivial bonds beyond the first pair")
    j_occ = state.charges[0][0] - state.charges[1]  # site-1 occupation per vector
    if np.max(j_occ) + power > d - 1:
        raise ValidationError("occupation overflow on the first site")
    # lambda'_g = lambda_g sqrt((j_g + p)! / j_g!), then global renormalization
    log_boost = np.array([
        0.5 * (lgamma(j + power + 1) - lgamma(j + 1)) for j in j_occ
    ])
    lam = state.lambdas[1] * np.exp(log_boost - log_boost.max())
    lam /= np.linalg.norm(lam)
    order = np.argsort(-lam, kind="stable")
    g0 = np.zeros_like(state.gammas[0])
    nonzero = np.nonzero(state.gammas[0])
    for _, g, i in zip(*nonzero):
        g0[0, g, i + power] = state.gammas[0][0, g, i]
    state.gammas[0] = g0[:, order, :]
    state.gammas[1] = state.gammas[1][order, :, :]
    state.lambdas[1] = lam[order]
    state.charges[1] = state.charges[1][order]
    state.charges[0] = state.charges[0] + power
    state.total += power
    return state


def fold_double(c, z, m1: int, m2: int, chi_max=None,
                trunc_rel=1e-14) -> CanonicalMps:
    """MPS of (sum_k c_k a_k^dag)^m2 (sum_l z_l a_l^dag)^m1 |0>, normalized.

    Folds the z sum completely, then the (transformed) c sum down to the
    second site, leaving (a_1^dag)^m2 W (a_1^dag)^m1 |0> with one last current
    W on the first bond; the MPS is built in that order and the inverse
    operations are applied in reverse.
    """
    c = np.asarray(c, dtype=complex).copy()
    z = np.asarray(z, dtype=complex).copy()
    if c.shape != z.shape or c.ndim != 1:
        raise ValidationError("mode vectors must share one length")
    n = len(c)
    for vec in (c, z):
        if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
            raise ValidationError("mode coefficients must be normalized")

    ops = []
    # stage A: fold z fully; every operation also transforms c
    for site in range(n):
        theta = atan2(z[site].imag, z[site].real)
        if theta != 0.0:
            ops.append((PHASE, site, theta))
            c[site] *= np.exp(-1j * theta)
        z[site] = abs(z[site])
    zr = z.real.copy()
    for bond in range(n - 2, -1, -1):
        phi = 2.0 * atan2(zr[bond + 1], zr[bond])
        if phi != 0.0:
            ops.append((CURRENT, bond, phi))
            _rotate_pair(c, bond, phi)
        _rotate_pair(zr, bond, phi)
    # stage B: fold c down to site 2 (phases only beyond site 1)
    for site in range(1, n):
        theta = atan2(c[site].imag, c[site].real)
        if theta != 0.0:
            ops.append((PHASE, site, theta))
        c[site] = abs(c[site])
    for bond in range(n - 2, 0, -1):
        phi = 2.0 * atan2(c[bond + 1].real, c[bond].real)
        if phi != 0.0:
            ops.append((CURRENT, bond, phi))
        _rotate_pair(c, bond, phi)
    # align the residual phase on site 1 (global phase on the z part)
    theta0 = atan2(c[0].imag, c[0].real)
    if theta0 != 0.0:
        ops.append((PHASE, 0, theta0))
        c[0] = abs(c[0])
    w_angle = 2.0 * atan2(c[1].real, c[0].real)
    plan = FoldPlan(n, ops)

    total = m1 + m2
    occ = [m1] + [0] * (n - 1)
    state = CanonicalMps.from_product_fock(occ, chi_max=chi_max,
                                           trunc_rel=trunc_rel,
                                           local_dim=total + 1)
    d = state.local_dim
    if w_angle != 0.0:
        state.apply_two_site(0, current_gate(d, w_angle, 0))
    apply_creation_power(state, m2)
    if w_angle != 0.0:
        state.apply_two_site(0, current_gate(d, -w_angle, 0))
    _apply_inverse_plan(state, plan)
    return state


# ---------------------------------------------------------------------------
# experiments

@dataclass
class CollisionResult:
    mu: float
    collection_fraction: float
    eee: float | None
    chi: int | None


def collision_experiment(n_sites: int, bosons: int, mu: float, lam: float = 1.0,
                         chi_max=None, compute_eee: bool = True,
                         trunc_rel=1e-14) -> CollisionResult:
    """Two boson clouds on the chain ends, transmitted through a central
    interaction, collected at time t = pi/lam (half a transmission period).

    Returns the collected fraction (n_1 + n_N)/M and, when requested, the
    end-pair log-negativity of the folded two-sum state.
    """
    if n_sites % 2 or bosons % 2:
        raise ValidationError("collision setup needs even N and even M")
    r = build_r("pth_central", n_sites, mu=mu, lam=lam)
    t = np.pi / lam
    u = propagate(r, t)
    c = u[:, 0].copy()              # cloud launched from site 1
    zv = u[:, n_sites - 1].copy()   # cloud launched from site N
    half = bosons // 2
    collection = 0.5 * float(abs(c[0]) ** 2 + abs(c[-1]) ** 2
                             + abs(zv[0]) ** 2 + abs(zv[-1]) ** 2)
    eee = None
    chi = None
    if compute_eee:
        state = fold_double(c, zv, half, half, chi_max=chi_max,
                            trunc_rel=trunc_rel)
        eee = log_negativity(end_pair_rdm(state))
        chi = state.chi
    return CollisionResult(mu=mu, collection_fraction=collection, eee=eee, chi=chi)


def transfer_weight_table(j: int, eps: float, beta: float):
    """First-order scattered weights of a cloud launched from site 1.

    After half a period the surviving operator is a_N^dag plus -i eps times a
    weight on every odd site 2q+1; the weights are evaluated with log-Gamma
    so chains up to a few hundred sites cause no overflow.  Returns
    (sites 1-based, complex weights, F values on the integer grid).
    """
    if j < 1:
        raise ValidationError("j must be a positive integer")
    if beta < 0:
        raise ValidationError("beta must be non-negative")
    qs = np.arange(j + 1)
    sites = 2 * qs + 1
    logs = np.empty(j + 1)
    for q in qs:
        logs[q] = (0.5 * (lgamma(2 * j + 1) - lgamma(2 * (j - q) + 1)
                          - lgamma(2 * q + 1))
                   + 2.0 * lgamma(j - q + 0.5) - lgamma(j - q + 1))
    if beta == 0.0:
        power = np.where(qs == j, 0.0, -np.inf)
    else:
        power = (j - qs) * np.log(beta)
    f_vals = np.exp(logs + power)
    weights = -1j * eps * f_vals
    return sites, weights, f_vals


def transfer_f_continuous(j: int, beta: float, q: float) -> float:
    """Continuous envelope F(q) underlying the scattered-weight table."""
    val = (0.5 * (lgamma(2 * j + 1) - lgamma(2 * (j - q) + 1) - lgamma(2 * q + 1))
           + 2.0 * lgamma(j - q + 0.5) - lgamma(j - q + 1))
    if beta == 0.0:
        return 0.0 if q < j else float(np.exp(val))
    return float(np.exp(val + (j - q) * np.log(beta)))


def binomial_entanglement(bosons: int) -> float:
    """Exact end-to-end log-negativity of (a_1^dag + a_2^dag)^M |0>.

    E_N = 2 log2(sum_k s_k) with s_k = sqrt(binom(M, k) / 2^M), evaluated
    with log-Gamma for large M.
    """
    if bosons < 1:
        raise ValidationError("need at least one boson")
    m = bosons
    logs = np.array([
        0.5 * (lgamma(m + 1) - lgamma(k + 1) - lgamma(m - k + 1)) - 0.5 * m * np.log(2)
        for k in range(m + 1)
    ])
    top = logs.max()
    s = np.exp(logs - top).sum()
    return float(2.0 * (top + np.log(s)) / np.log(2.0))

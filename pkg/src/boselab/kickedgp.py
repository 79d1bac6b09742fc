"""Double-kicked ring condensate: split-step GP evolution, the first-order
analytic wave function, Bogoliubov-de-Gennes mode dynamics and stability scans.

Units: length in trap radii, energy in hbar^2/(2 m R^2); the ring coordinate
theta lives on a uniform power-of-two grid and the norm convention is
integral |psi|^2 dtheta = 1.  The condensate is evolved under the raw
double-kick train (phases exp(-+ i k cos theta) at the kick instants); the
modes see the effective once-per-period potential
w(theta) = -i (eps k / 2) cos theta + (eps k^2 / 2) sin^2 theta,
whose anti-Hermitian part is the price of folding two kicks into one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError

DEFAULT_GRID = 128
DEFAULT_DT = 1e-3
RESONANCE_FLOOR = 1e-8


def ring_grid(grid_size: int) -> np.ndarray:
    if grid_size <= 0 or grid_size & (grid_size - 1):
        raise ValidationError("grid size must be a power of two")
    return 2.0 * np.pi * np.arange(grid_size) / grid_size


@dataclass
class GpField:
    """Condensate wave function on the ring; integral |psi|^2 dtheta = 1."""

    values: np.ndarray
    g: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        ring_grid(len(self.values))  # validates power-of-two length

    @classmethod
    def uniform(cls, grid_size: int = DEFAULT_GRID, g: float = 0.0) -> "GpField":
        vals = np.full(grid_size, 1.0 / np.sqrt(2.0 * np.pi), dtype=complex)
        return cls(vals, g)

    @property
    def grid_size(self) -> int:
        return len(self.values)

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.grid_size

    def norm_squared(self) -> float:
        return float((np.abs(self.values) ** 2).sum() * self.dtheta)

    def copy(self) -> "GpField":
        return GpField(self.values.copy(), self.g)


@dataclass
class KickSchedule:
    """Double-kick train: kick, free eps, anti-kick, free beta; period T."""

    k: float
    beta: float
    eps: float
    pairs: int

    def __post_init__(self):
        if not np.isfinite(self.k):
            raise ValidationError("kick strength must be finite")
        if self.eps <= 0 or self.beta <= self.eps:
            raise ValidationError("need 0 < eps < beta")
        if self.pairs < 0:
            raise ValidationError("pairs must be non-negative")

    @property
    def period(self) -> float:
        return self.beta + self.eps


@dataclass
class BdgMode:
    """One (U_j, V_j) excitation pair; indefinite norm <U|U> - <V|V> = 1."""

    j: int
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def from_uniform(cls, j: int, g: float, grid_size: int = DEFAULT_GRID) -> "BdgMode":
        _, _, u_amp, v_amp = bogoliubov_data(j, g)
        theta = ring_grid(grid_size)
        wave = np.exp(1j * j * theta) / np.sqrt(2.0 * np.pi)
        return cls(j, u_amp * wave, v_amp * wave.copy())

    def _dtheta(self) -> float:
        return 2.0 * np.pi / len(self.u)

    def norm_u(self) -> float:
        return float((np.abs(self.u) ** 2).sum() * self._dtheta())

    def norm_v(self) -> float:
        return float((np.abs(self.v) ** 2).sum() * self._dtheta())

    def global_norm(self) -> float:
        return self.norm_u() - self.norm_v()

    def alpha(self) -> float:
        """Norm coordinate: sinh(alpha) = ||V||, cosh(alpha) = ||U||."""
        return float(np.arcsinh(np.sqrt(self.norm_v())))


def bogoliubov_data(j: int, g: float):
    """(zeta_j, eps_j, U_j, V_j) of the uniform-condensate excitation j.

    zeta_j = ((j^2/2) / (j^2/2 + g/pi))^(1/4), eps_j the Bogoliubov energy,
    U_j + V_j = zeta_j and U_j - V_j = 1/zeta_j, so U_j^2 - V_j^2 = 1.
    """
    if j == 0:
        raise ValidationError("the j = 0 mode is the condensate itself")
    if g < 0:
        raise ValidationError("attractive coupling not supported")
    kin = j * j / 2.0
    zeta = (kin / (kin + g / np.pi)) ** 0.25
    energy = np.sqrt(kin * (kin + g / np.pi))
    u = 0.5 * (zeta + 1.0 / zeta)
    v = 0.5 * (zeta - 1.0 / zeta)
    return float(zeta), float(energy), float(u), float(v)


# ---------------------------------------------------------------------------
# split-step propagation

class _Stepper:
    """Strang splitting on a shared grid for the field and stacked modes."""

    def __init__(self, grid_size: int, g: float):
        self.g = g
        self.modes_j = np.fft.fftfreq(grid_size, d=1.0 / grid_size)
        self.kin = 0.5 * self.modes_j**2

    def half_kinetic_field(self, psi: np.ndarray, dt: float) -> np.ndarray:
        return np.fft.ifft(np.fft.fft(psi) * np.exp(-1j * self.kin * dt / 2.0))

    def half_kinetic_modes(self, u: np.ndarray, v: np.ndarray, dt: float):
        phase = np.exp(-1j * self.kin * dt / 2.0)
        u = np.fft.ifft(np.fft.fft(u, axis=-1) * phase, axis=-1)
        v = np.fft.ifft(np.fft.fft(v, axis=-1) * phase.conj(), axis=-1)
        return u, v

    def coupling_step(self, psi_mid: np.ndarray, u: np.ndarray, v: np.ndarray,
                      dt: float):
        """Exact exponential of the pointwise non-Hermitian coupling block.

        G = [[a, b], [-conj(b), -a]] with a = 2g|psi|^2, b = g psi^2 satisfies
        G^2 = s^2 I, s = sqrt(3) g |psi|^2, so exp(-i dt G) is closed-form and
        preserves |U|^2 - |V|^2 pointwise.
        """
        a = 2.0 * self.g * np.abs(psi_mid) ** 2
        b = self.g * psi_mid**2
        s = np.sqrt(3.0) * self.g * np.abs(psi_mid) ** 2
        cos = np.cos(s * dt)
        sinc = dt * np.sinc(s * dt / np.pi)
        new_u = cos * u - 1j * sinc * (a * u + b * v)
        new_v = cos * v - 1j * sinc * (-b.conj() * u - a * v)
        return new_u, new_v

    def free_interval(self, psi, u, v, duration: float, dt_max: float):
        steps = max(1, int(np.ceil(duration / dt_max)))
        dt = duration / steps
        for _ in range(steps):
            psi = self.half_kinetic_field(psi, dt)
            if u is not None:
                u, v = self.half_kinetic_modes(u, v, dt)
                psi_mid = psi * np.exp(-1j * self.g * np.abs(psi) ** 2 * dt / 2.0)
                u, v = self.coupling_step(psi_mid, u, v, dt)
            psi = psi * np.exp(-1j * self.g * np.abs(psi) ** 2 * dt)
            psi = self.half_kinetic_field(psi, dt)
            if u is not None:
                u, v = self.half_kinetic_modes(u, v, dt)
        return psi, u, v


@dataclass
class KickedRunResult:
    """Stroboscopic record of a kicked run (index 0 = initial state)."""

    snapshots: list = field(default_factory=list)
    energies: np.ndarray | None = None
    nnp_series: np.ndarray | None = None
    mode_v_norms: np.ndarray | None = None   # (pairs+1, n_modes)
    alphas: np.ndarray | None = None
    global_norm_drift: float = 0.0
    final_field: GpField | None = None
    final_modes: list | None = None


def gp_energy(psi_or_field, g: float | None = None) -> float:
    """E = integral psi* (-1/2 d^2/dtheta^2 + g/2 |psi|^2) psi dtheta."""
    if isinstance(psi_or_field, GpField):
        psi = psi_or_field.values
        g = psi_or_field.g if g is None else g
    else:
        psi = np.asarray(psi_or_field, dtype=complex)
        if g is None:
            raise ValidationError("g required for a bare array")
    grid = len(psi)
    dtheta = 2.0 * np.pi / grid
    j = np.fft.fftfreq(grid, d=1.0 / grid)
    d2 = np.fft.ifft(-(j**2) * np.fft.fft(psi))
    val = ((psi.conj() * (-0.5 * d2)).sum()
           + 0.5 * g * (np.abs(psi) ** 4).sum()) * dtheta
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise NumericalError(f"energy has imaginary residue {val.imag:.3e}")
    return float(val.real)


def nnp(modes, psi) -> float:
    """Non-condensed particle number sum_j (<V_j|V_j> - |<psi|V_j>|^2)."""
    if isinstance(psi, GpField):
        psi = psi.values
    dtheta = 2.0 * np.pi / len(psi)
    acc = 0.0
    for mode in modes:
        overlap = (psi.conj() * mode.v).sum() * dtheta
        acc += mode.norm_v() - abs(overlap) ** 2
    return float(acc)


def alpha_rate(mode: BdgMode, psi, g: float) -> float:
    """d alpha_j / dt = -g * integral Im(psi^2 u_j^* v_j) dtheta.

    u, v are the unit-normalized shapes of the mode; vanishing ||V|| leaves
    the rate undefined.
    """
    if isinstance(psi, GpField):
        psi = psi.values
    nu = np.sqrt(mode.norm_u())
    nv = np.sqrt(mode.norm_v())
    if nv == 0.0:
        raise NumericalError("alpha rate undefined for a vanishing V component")
    dtheta = 2.0 * np.pi / len(psi)
    integrand = (psi**2 * (mode.u / nu).conj() * (mode.v / nv)).imag
    return float(-g * integrand.sum() * dtheta)


def kicked_run(field: GpField, schedule: KickSchedule, modes=None,
               dt_max: float = DEFAULT_DT, keep_snapshots: bool = True) -> KickedRunResult:
    """Evolve the condensate (and optionally BdG modes) through the kick train.

    Per period: kick phase exp(-i k cos theta) on the field, free eps,
    anti-kick, free beta; the modes receive the effective complex kick
    exp(-+ i w) once at each period start and share the field's time mesh.
    Records energy, NNP and mode norms after every pair; NaN aborts.
    """
    psi = field.values.copy()
    g = field.g
    grid = len(psi)
    theta = ring_grid(grid)
    stepper = _Stepper(grid, g)
    kick_plus = np.exp(-1j * field_kick_phase(schedule.k, theta))
    kick_minus = kick_plus.conj()
    w_eff = effective_kick(schedule.k, schedule.eps, theta)
    mode_kick_u = np.exp(-1j * w_eff)
    mode_kick_v = np.exp(1j * w_eff)

    have_modes = modes is not None and len(modes) > 0
    if have_modes:
        u = np.stack([m.u for m in modes]).astype(complex)
        v = np.stack([m.v for m in modes]).astype(complex)
    else:
        u = v = None

    result = KickedRunResult()
    energies = [gp_energy(psi, g)]
    nnp_series = []
    v_norms = []
    drift = 0.0
    dtheta = 2.0 * np.pi / grid

    def mode_list():
        if not have_modes:
            return None
        return [BdgMode(m.j, u[i].copy(), v[i].copy())
                for i, m in enumerate(modes)]

    def record_modes():
        nonlocal drift
        if not have_modes:
            return
        nu2 = (np.abs(u) ** 2).sum(axis=1) * dtheta
        nv2 = (np.abs(v) ** 2).sum(axis=1) * dtheta
        v_norms.append(nv2)
        drift = max(drift, float(np.max(np.abs(nu2 - nv2 - 1.0))))
        overlaps = (psi.conj()[None, :] * v).sum(axis=1) * dtheta
        nnp_series.append(float((nv2 - np.abs(overlaps) ** 2).sum()))

    if keep_snapshots:
        result.snapshots.append(psi.copy())
    record_modes()

    for _ in range(schedule.pairs):
        if have_modes:
            u = u * mode_kick_u[None, :]
            v = v * mode_kick_v[None, :]
        psi = psi * kick_plus
        psi, u, v = stepper.free_interval(psi, u, v, schedule.eps, dt_max)
        psi = psi * kick_minus
        psi, u, v = stepper.free_interval(psi, u, v, schedule.beta - schedule.eps,
                                          dt_max)
        if not np.all(np.isfinite(psi.real)) or not np.all(np.isfinite(psi.imag)):
            raise NumericalError("NaN in the condensate field; run aborted")
        if keep_snapshots:
            result.snapshots.append(psi.copy())
        energies.append(gp_energy(psi, g))
        record_modes()

    result.energies = np.array(energies)
    if have_modes:
        result.nnp_series = np.array(nnp_series)
        result.mode_v_norms = np.array(v_norms)
        result.alphas = np.arcsinh(np.sqrt(result.mode_v_norms))
        result.global_norm_drift = drift
        result.final_modes = mode_list()
    result.final_field = GpField(psi, g)
    return result


def field_kick_phase(k: float, theta: np.ndarray) -> np.ndarray:
    return k * np.cos(theta)


def effective_kick(k: float, eps: float, theta: np.ndarray) -> np.ndarray:
    """w(theta) of the folded pair of kicks (complex)."""
    return (-0.5j * eps * k * np.cos(theta)
            + 0.5 * eps * k**2 * np.sin(theta) ** 2)


def gp_evolve(field: GpField, schedule: KickSchedule,
              dt_max: float = DEFAULT_DT) -> KickedRunResult:
    """Condensate-only run; snapshots and energies after each kick pair."""
    return kicked_run(field, schedule, modes=None, dt_max=dt_max)


def bdg_evolve(modes, field: GpField, schedule: KickSchedule,
               dt_max: float = DEFAULT_DT,
               keep_snapshots: bool = False) -> KickedRunResult:
    """Co-evolve BdG modes with the condensate on a shared time mesh."""
    return kicked_run(field, schedule, modes=modes, dt_max=dt_max,
                      keep_snapshots=keep_snapshots)


def analytic_psi(n_pairs: int, k: float, g: float, t_period: float, eps: float,
                 grid_size: int = DEFAULT_GRID) -> GpField:
    """First-order stroboscopic wave function after n_pairs effective kicks.

    psi(theta, N) = (1 + cos-theta and cos-2theta corrections)/sqrt(2 pi) with
    driven-mode amplitudes resonant at omega_j = eps_j T / 2 = multiple of pi;
    a divisor below 1e-8 raises the resonance error.  Reduces to the uniform
    state for eps = 0 or k = 0.
    """
    theta = ring_grid(grid_size)
    base = np.ones(grid_size, dtype=complex)
    if eps != 0.0 and k != 0.0 and n_pairs > 0:
        corr = np.zeros(grid_size, dtype=complex)
        for j, prefactor, pattern in ((1, None, np.cos(theta)),
                                      (2, None, np.cos(2 * theta))):
            zeta, energy, _, _ = bogoliubov_data(j, g)
            omega = 0.5 * energy * t_period
            s = np.sin(omega)
            if abs(s) < RESONANCE_FLOOR:
                raise NumericalError(f"linear resonance: sin(omega_{j}) ~ 0")
            n = n_pairs
            if j == 1:
                amp = (-(eps * k) / (2.0 * s) * np.sin(omega * n)
                       * (np.cos(omega * (n - 1))
                          - 1j / zeta**2 * np.sin(omega * (n - 1))))
            else:
                amp = ((eps * k**2) / (4.0 * s) * np.sin(omega * n)
                       * (zeta**2 * np.sin(omega * (n - 1))
                          + 1j * np.cos(omega * (n - 1))))
            corr = corr + amp * pattern
        base = base + corr
    return GpField(base / np.sqrt(2.0 * np.pi), g)


def driven_amplitudes(n_pairs: int, k: float, g: float, t_period: float,
                      eps: float):
    """(b_1, b_2) mode coefficients after n_pairs kicks (testing hook)."""
    out = []
    for j in (1, 2):
        zeta, energy, _, _ = bogoliubov_data(j, g)
        omega = 0.5 * energy * t_period
        s = np.sin(omega)
        if abs(s) < RESONANCE_FLOOR:
            raise NumericalError(f"linear resonance: sin(omega_{j}) ~ 0")
        phase = np.exp(-1j * omega * (n_pairs - 1)) * np.sin(omega * n_pairs) / s
        if j == 1:
            out.append(-(eps * k) / (4.0 * zeta) * phase)
        else:
            out.append(1j * (eps * k**2) * zeta / 8.0 * phase)
    return tuple(out)


# ---------------------------------------------------------------------------
# stability analysis

@dataclass
class StabilityPoint:
    g: float
    slope: float
    intercept: float
    r_squared: float
    fit_ok: bool


def fit_nnp_growth(nnp_series: np.ndarray, window_fraction: float = 2.0 / 3.0):
    """Least-squares exponential fit of NNP over the trailing window.

    Returns (slope, intercept, r_squared) of log NNP versus pair index.
    """
    series = np.asarray(nnp_series, dtype=float)
    n = len(series)
    start = int(np.floor(n * (1.0 - window_fraction)))
    idx = np.arange(start, n)
    vals = series[start:]
    good = vals > 0
    if good.sum() < 3:
        return 0.0, 0.0, 0.0
    x = idx[good].astype(float)
    y = np.log(vals[good])
    a = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    ss_tot = ((y - y.mean()) ** 2).sum()
    r2 = 1.0 - (resid**2).sum() / ss_tot if ss_tot > 0 else 0.0
    return float(coef[0]), float(coef[1]), float(r2)


def stability_scan(g_values, schedule: KickSchedule, mode_indices=None,
                   grid_size: int = DEFAULT_GRID, dt_max: float = DEFAULT_DT,
                   window_fraction: float = 2.0 / 3.0) -> list[StabilityPoint]:
    """Fitted NNP growth slope for each interaction strength.

    Modes default to j in {+-1, +-2}; stability scans normally raise this so
    higher Bogoliubov modes can resonate with the kick frequency.
    """
    if mode_indices is None:
        mode_indices = [-2, -1, 1, 2]
    points = []
    for g in g_values:
        field = GpField.uniform(grid_size, g)
        modes = [BdgMode.from_uniform(j, g, grid_size) for j in mode_indices]
        run = kicked_run(field, schedule, modes=modes, dt_max=dt_max,
                         keep_snapshots=False)
        slope, intercept, r2 = fit_nnp_growth(run.nnp_series, window_fraction)
        points.append(StabilityPoint(g=float(g), slope=slope,
                                     intercept=intercept, r_squared=r2,
                                     fit_ok=r2 > 0))
    return points


def resonance_locations(g_max: float, t_period: float, j_max: int) -> list[dict]:
    """Couplings g where eps_j(g) * T is a multiple of 2 pi (linear resonance)."""
    out = []
    for j in range(1, j_max + 1):
        kin = j * j / 2.0
        m = 1
        while True:
            target = 2.0 * np.pi * m / t_period
            g = np.pi * (target**2 / kin - kin)
            if g > g_max:
                break
            if g >= 0:
                out.append({"j": j, "m": m, "g": float(g)})
            m += 1
    return sorted(out, key=lambda rec: rec["g"])

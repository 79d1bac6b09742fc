"""Imaginary-time ground-state search and real-time TEBD sweeps.

One sweep is the second-order schedule from bosehubbard.trotter_schedule; the
imaginary-time energy estimate comes from the norm decay accumulated over one
full sweep, E = -ln(prod of gate norms)/dtau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bosehubbard import BhChainSpec, build_gate, trotter_schedule
from .errors import NumericalError
from .gates import TwoSiteGate, pair_basis
from .mps import CanonicalMps

DIVERGENCE_PATIENCE_SWEEPS = 100


def recanonicalize(state: CanonicalMps, round_trips: int = 2) -> CanonicalMps:
    """Refresh the canonical gauge with identity-gate sweeps (in place).

    Non-unitary updates leave the Schmidt data at distant bonds slightly
    stale (the gauge error is O(dtau^2) per imaginary-time sweep); identity
    two-site updates re-derive each bond's decomposition from the current
    tensors, restoring orthonormality to machine precision.  Unitary
    evolution never needs this.
    """
    d = state.local_dim
    ident = TwoSiteGate(d, {q: np.eye(len(pair_basis(d, q)), dtype=complex)
                            for q in range(2 * d - 1)})
    for _ in range(round_trips):
        for bond in range(state.n_sites - 1):
            state.apply_two_site(bond, ident)
        for bond in range(state.n_sites - 2, -1, -1):
            state.apply_two_site(bond, ident)
    return state


@dataclass
class EvolutionReport:
    """Diagnostics of one evolution run."""

    steps: int = 0
    residual: float = math.inf
    converged: bool = False
    energy_norm_estimate: float | None = None
    energy_expectation: float | None = None
    dtau: float | None = None
    dt: float | None = None
    chi_trajectory: list = field(default_factory=list)
    energy_trajectory: list = field(default_factory=list)
    observables: dict = field(default_factory=dict)
    truncated_weight: float = 0.0
    chi_capped: bool = False
    warnings: list = field(default_factory=list)

    def record(self, name: str, step: int, time: float, value) -> None:
        self.observables.setdefault(name, []).append((step, time, value))

    def summary(self) -> dict:
        return {
            "steps": self.steps,
            "residual": self.residual,
            "converged": self.converged,
            "energy_norm_estimate": self.energy_norm_estimate,
            "energy_expectation": self.energy_expectation,
            "dtau": self.dtau,
            "dt": self.dt,
            "max_chi": max(self.chi_trajectory) if self.chi_trajectory else None,
            "truncated_weight": self.truncated_weight,
            "chi_capped": self.chi_capped,
            "warnings": list(self.warnings),
        }


class _GateCache:
    """Gates keyed by (bond, weight); rebuilt when z scale or spec changes."""

    def __init__(self, spec: BhChainSpec, d: int, z_unit: complex):
        self.spec = spec
        self.d = d
        self.z_unit = z_unit
        self._cache = {}

    def gate(self, bond: int, weight: float):
        key = (bond, weight)
        if key not in self._cache:
            self._cache[key] = build_gate(self.spec, bond, self.z_unit * weight, self.d)
        return self._cache[key]


def energy_expectation(spec: BhChainSpec, state: CanonicalMps) -> float:
    """<H> as the sum of bond-generator expectations."""
    d = state.local_dim
    return sum(state.two_site_expectation(b, spec.bond_blocks(b, d))
               for b in range(state.n_sites - 1))


def _check_finite(state: CanonicalMps) -> None:
    for lam in state.lambdas:
        if not np.all(np.isfinite(lam)):
            raise NumericalError("NaN/inf in Schmidt values; evolution aborted")


def ground_state(spec: BhChainSpec, init: CanonicalMps, dtau: float,
                 tol: float = 1e-14, max_sweeps: int = 2_000_000,
                 check_every: int = 10, report_observables=None) -> tuple[CanonicalMps, EvolutionReport]:
    """Imaginary-time evolution until |1 - <psi(tau)|psi(tau+dtau)>| < tol.

    The overlap residual compares re-canonicalized snapshots one sweep apart
    (raw tensors carry an O(dtau^2) gauge wobble that would mask genuine
    convergence).  Returns the re-canonicalized normalized state; the report's
    energy_norm_estimate is read off the final sweep's norm decay.  If the
    residual grows for 100 consecutive sweeps, dtau is halved once and the
    run continues (flagged).
    """
    if dtau <= 0:
        raise ValueError("dtau must be positive")
    state = init
    n = state.n_sites
    schedule = trotter_schedule(n)
    cache = _GateCache(spec, state.local_dim, -dtau)
    report = EvolutionReport(dtau=dtau)
    prev_res = math.inf
    rising_checks = 0
    halved = False
    energy = None
    reference = None
    for sweep in range(1, max_sweeps + 1):
        check = sweep % check_every == 0
        if check:
            reference = recanonicalize(state.copy(), round_trips=1)
        log_norm = 0.0
        chi_sweep = 1
        for bond, weight in schedule:
            info = state.apply_two_site(bond, cache.gate(bond, weight))
            log_norm += math.log(info.norm)
            chi_sweep = max(chi_sweep, info.chi)
        energy = -log_norm / dtau
        report.chi_trajectory.append(chi_sweep)
        report.energy_trajectory.append(energy)
        report.steps = sweep
        if report_observables is not None:
            report_observables(state, sweep, report)
        if check:
            _check_finite(state)
            res = abs(1.0 - recanonicalize(state.copy(), round_trips=1)
                      .overlap(reference))
            report.residual = res
            if res < tol:
                report.converged = True
                break
            if res > prev_res:
                rising_checks += 1
                if (not halved
                        and rising_checks * check_every >= DIVERGENCE_PATIENCE_SWEEPS):
                    dtau /= 2.0
                    cache = _GateCache(spec, state.local_dim, -dtau)
                    report.warnings.append(f"residual rising; dtau halved to {dtau}")
                    report.dtau = dtau
                    halved = True
                    rising_checks = 0
            else:
                rising_checks = 0
            prev_res = res
    if not report.converged:
        report.warnings.append("max_sweeps exhausted before convergence")
    recanonicalize(state)
    report.energy_norm_estimate = energy
    report.energy_expectation = energy_expectation(spec, state)
    return state, report


def ground_state_ladder(spec: BhChainSpec, init: CanonicalMps, dtaus,
                        tols, max_sweeps: int = 2_000_000,
                        check_every: int = 5) -> tuple[CanonicalMps, EvolutionReport]:
    """Chain ground_state over a decreasing dtau schedule; reports the last stage."""
    state = init
    report = None
    for dtau, tol in zip(dtaus, tols):
        state, report = ground_state(spec, state, dtau, tol=tol,
                                     max_sweeps=max_sweeps, check_every=check_every)
    return state, report


def real_time(spec: BhChainSpec, state: CanonicalMps, dt: float, steps: int,
              chi_cap: int | None = None, record_every: int = 1,
              observers: dict | None = None) -> EvolutionReport:
    """Real-time TEBD sweeps with observable recording.

    observers maps a name to a callable(state) -> value; values are recorded
    at step 0 and then every record_every sweeps.  Bond dimension beyond
    chi_cap is silently truncated but flagged in the report.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    observers = observers or {}
    saved_cap = state.chi_max
    if chi_cap is not None:
        state.chi_max = chi_cap
    schedule = trotter_schedule(state.n_sites)
    cache = _GateCache(spec, state.local_dim, -1j * dt)
    report = EvolutionReport(dt=dt)
    try:
        for name, fn in observers.items():
            report.record(name, 0, 0.0, fn(state))
        for step in range(1, steps + 1):
            chi_sweep = 1
            for bond, weight in schedule:
                info = state.apply_two_site(bond, cache.gate(bond, weight))
                chi_sweep = max(chi_sweep, info.chi)
                report.truncated_weight += info.truncated_weight
                report.chi_capped = report.chi_capped or info.capped
            report.chi_trajectory.append(chi_sweep)
            report.steps = step
            _check_finite(state)
            if step % record_every == 0 or step == steps:
                t = step * dt
                for name, fn in observers.items():
                    report.record(name, step, t, fn(state))
    finally:
        state.chi_max = saved_cap
    report.energy_expectation = energy_expectation(spec, state)
    return report


def quench_protocol(spec_before: BhChainSpec, spec_after: BhChainSpec,
                    init: CanonicalMps, dtau: float, dt: float, steps: int,
                    tol: float = 1e-14, max_sweeps: int = 2_000_000,
                    chi_cap: int | None = None, record_every: int = 1,
                    observers: dict | None = None,
                    ground_from_fock: bool = False):
    """Ground state under spec_before (or the Fock init itself), then real
    time under spec_after.  Returns (state, ground_report, dynamics_report)."""
    if spec_before.n_sites != spec_after.n_sites:
        raise ValueError("both specs must share the chain length")
    if ground_from_fock:
        state, greport = init, None
    else:
        state, greport = ground_state(spec_before, init, dtau, tol=tol,
                                      max_sweeps=max_sweeps)
    dreport = real_time(spec_after, state, dt, steps, chi_cap=chi_cap,
                        record_every=record_every, observers=observers)
    return state, greport, dreport


def standard_observers(names, eee_fn=None) -> dict:
    """Builtin observers: occupation, fluctuation, entropy, eee."""
    from .entanglement import end_pair_rdm, log_negativity

    table = {
        "occupation": lambda s: s.occupation_profile(),
        "fluctuation": lambda s: np.array([s.fluctuation(k) for k in range(s.n_sites)]),
        "entropy": lambda s: np.array([s.block_entropy(b) for b in range(s.n_sites - 1)]),
        "eee": eee_fn or (lambda s: log_negativity(end_pair_rdm(s))),
    }
    unknown = set(names) - set(table)
    if unknown:
        raise ValueError(f"unknown observers: {sorted(unknown)}")
    return {name: table[name] for name in names}

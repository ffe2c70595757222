"""Simulated vs quantum annealing at desk scale.

SA integrates the master equation while beta(t) rises along a schedule; QA
integrates the Schroedinger equation i dpsi/dt = [diag(E) - Gamma(t) sum_j
sx_j] psi while the transverse field drops to zero. Both start from the
uniform state (infinite temperature / infinite field limit) and report the
ground-space probability and the residual energy along the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import io as cqio
from .dynamics import GeneratorProvider, integrate_master
from .errors import IntegrationError, ResourceLimitError, ValidationError
from .model import energy_table

MAX_ANNEAL_SPINS = 12

SCHEDULE_KINDS = ("linear", "power", "logarithmic")

# QA: fixed-step RK4 with |H| h small enough that the total norm drift
# (~ T omega (omega h)^5 / 144 per the RK4 stability function) stays
# below this budget.
_QA_DRIFT_BUDGET = 1e-9
_QA_THETA_CAP = 0.2


@dataclass(frozen=True)
class Schedule:
    """Control schedule c(t) on [0, T].

    linear:      c(t) = c0 + (c1 - c0) t / T          params (c0, c1)
    power:       c(t) = c0 (1 - t/T)^p                params (c0, p)
    logarithmic: T_temp(t) = c0 / log(2 + alpha t)    params (c0, alpha)

    The logarithmic kind describes a decreasing *temperature*; consumers that
    need an inverse temperature use 1/value(t).
    """

    kind: str
    params: tuple
    horizon: float

    def value(self, t):
        t = min(max(float(t), 0.0), self.horizon)
        if self.kind == "linear":
            c0, c1 = self.params
            return c0 + (c1 - c0) * t / self.horizon
        if self.kind == "power":
            c0, p = self.params
            return c0 * (1.0 - t / self.horizon) ** p
        c0, alpha = self.params
        return c0 / math.log(2.0 + alpha * t)

    def initial(self):
        return self.value(0.0)

    def final(self):
        return self.value(self.horizon)


def make_schedule(kind, params, horizon):
    """Validate and build a Schedule; params is a (c0, x) pair per kind."""
    if kind not in SCHEDULE_KINDS:
        raise ValidationError(f"unknown schedule kind {kind!r}")
    if not (isinstance(horizon, (int, float)) and math.isfinite(horizon) and horizon > 0):
        raise ValidationError(f"schedule horizon must be positive, got {horizon!r}")
    params = tuple(float(v) for v in params)
    if len(params) != 2 or not all(math.isfinite(v) for v in params):
        raise ValidationError(f"{kind} schedule needs two finite parameters")
    if kind == "power" and params[1] <= 0:
        raise ValidationError("power schedule needs exponent p > 0")
    if kind == "logarithmic" and (params[0] <= 0 or params[1] <= 0):
        raise ValidationError("logarithmic schedule needs c0 > 0 and alpha > 0")
    return Schedule(kind, params, float(horizon))


@dataclass
class AnnealResult:
    """Trajectory of success probability and residual energy under a schedule."""

    times: np.ndarray
    control: np.ndarray
    p_ground: np.ndarray
    residual_energy: np.ndarray
    final_success: float
    method: str
    n: int
    ground_energy: float
    norm_drift: float
    schedule: Schedule


def _check_anneal_size(n):
    if n > MAX_ANNEAL_SPINS:
        raise ResourceLimitError(
            f"n={n} exceeds the {MAX_ANNEAL_SPINS}-spin annealing cap"
        )


def _ground_space(energies):
    e_min = energies.min()
    return energies <= e_min + 1e-9 * max(1.0, abs(e_min)), float(e_min)


def run_sa(h0, sched, rule="heat-bath", steps=200, *, max_step=None):
    """Anneal the master equation from the uniform distribution.

    The schedule provides beta(t) directly (linear/power kinds) or the
    temperature (logarithmic kind, beta = 1/value). beta must be
    nondecreasing over the horizon. ``max_step`` overrides the internal
    substep size (for convergence checks at finer resolution).
    """
    _check_anneal_size(h0.n)
    if steps < 1:
        raise ValidationError("steps must be >= 1")

    if sched.kind == "logarithmic":
        def beta_of_t(t):
            return 1.0 / sched.value(t)
    else:
        beta_of_t = sched.value

    probe = np.array([beta_of_t(t) for t in np.linspace(0.0, sched.horizon, 257)])
    if np.any(probe < 0) or not np.all(np.isfinite(probe)):
        raise ValidationError("beta(t) must be finite and >= 0 on [0, T]")
    if np.any(np.diff(probe) < -1e-9 * max(1.0, np.abs(probe).max())):
        raise ValidationError("SA schedule must have nondecreasing beta(t)")

    provider = GeneratorProvider(h0, beta_of_t, rule)
    dim = 1 << h0.n
    p0 = np.full(dim, 1.0 / dim)
    t_grid = np.linspace(0.0, sched.horizon, steps + 1)
    traj = integrate_master(provider, p0, t_grid, max_step=max_step)

    gmask, e_gs = _ground_space(provider.table.energies)
    control = np.array([sched.value(t) for t in t_grid])
    residual = traj.mean_energy - e_gs
    return AnnealResult(t_grid, control, traj.p_ground, residual,
                        float(traj.p_ground[-1]), "SA", h0.n, e_gs,
                        traj.norm_drift, sched)


def _qa_theta(omega, horizon):
    # theta = omega h from the drift budget: total ~ T omega theta^5 / 144
    theta = (144.0 * _QA_DRIFT_BUDGET / max(horizon * omega, 1e-30)) ** 0.2
    return min(theta, _QA_THETA_CAP)


def run_qa(h0, sched, steps=200, *, refine=1.0):
    """Anneal the Schroedinger equation with a uniform transverse-field driver.

    Starts from the uniform superposition (the driver ground state in the
    large-field limit); the schedule must end at Gamma(T) = 0. The state
    norm is tracked and a drift beyond 1e-6 raises IntegrationError.
    ``refine`` multiplies the internal substep count (for convergence
    checks at finer resolution).
    """
    _check_anneal_size(h0.n)
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    if refine < 1.0:
        raise ValidationError("refine must be >= 1")
    gamma0 = sched.initial()
    if abs(sched.final()) > 1e-9 * max(1.0, abs(gamma0)):
        raise ValidationError(
            f"QA schedule must reach Gamma(T) = 0, got {sched.final()!r}"
        )

    energies = energy_table(h0).values
    dim = energies.size
    idx = np.arange(dim, dtype=np.int64)
    rows = np.concatenate([idx ^ (1 << j) for j in range(h0.n)])
    cols = np.tile(idx, h0.n)
    driver = sparse.coo_array(
        (np.ones(rows.size), (rows, cols)), shape=(dim, dim)
    ).tocsr()

    gmask, e_gs = _ground_space(energies)
    e_scale = float(np.abs(energies).max())
    gamma_max = max(abs(sched.value(t)) for t in np.linspace(0.0, sched.horizon, 257))
    omega_run = e_scale + h0.n * gamma_max + 1e-12
    theta = _qa_theta(omega_run, sched.horizon)

    psi = np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)
    t_grid = np.linspace(0.0, sched.horizon, steps + 1)

    def rhs(t, state):
        return -1j * (energies * state - sched.value(t) * (driver @ state))

    p_ground = np.empty(t_grid.size)
    residual = np.empty(t_grid.size)
    control = np.empty(t_grid.size)
    worst_drift = 0.0

    def record(k, t, state):
        nonlocal worst_drift
        weights = np.abs(state) ** 2
        total = weights.sum()
        worst_drift = max(worst_drift, abs(math.sqrt(total) - 1.0))
        p_ground[k] = weights[gmask].sum() / total
        residual[k] = (weights @ energies) / total - e_gs
        control[k] = sched.value(t)

    record(0, 0.0, psi)
    for k in range(t_grid.size - 1):
        t0, t1 = t_grid[k], t_grid[k + 1]
        if sched.value(t0) == 0.0 and sched.value(t1) == 0.0:
            # Gamma vanishes on the whole interval (schedules are monotone):
            # the Hamiltonian is diagonal, propagate the phases exactly.
            psi = psi * np.exp(-1j * energies * (t1 - t0))
            record(k + 1, t1, psi)
            continue
        # Schedules are monotone, so the endpoint fields bound the interval.
        omega_k = e_scale + h0.n * max(abs(sched.value(t0)), abs(sched.value(t1))) + 1e-12
        substeps = max(1, int(math.ceil(refine * (t1 - t0) * omega_k / theta)))
        h = (t1 - t0) / substeps
        t = t0
        for _ in range(substeps):
            k1 = rhs(t, psi)
            k2 = rhs(t + 0.5 * h, psi + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, psi + 0.5 * h * k2)
            k4 = rhs(t + h, psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        record(k + 1, t1, psi)
        if worst_drift > 1e-6:
            raise IntegrationError(
                f"Schroedinger norm drifted by {worst_drift:.3e} (step too large)"
            )

    return AnnealResult(t_grid, control, p_ground, residual,
                        float(p_ground[-1]), "QA", h0.n, e_gs,
                        worst_drift, sched)


@dataclass
class ComparisonReport:
    """Side-by-side final values; carries no verdict."""

    n: int
    sa_final_success: float
    sa_final_residual: float
    sa_horizon: float
    sa_schedule: str
    qa_final_success: float
    qa_final_residual: float
    qa_horizon: float
    qa_schedule: str
    success_delta: float
    residual_delta: float


def compare_runs(sa, qa):
    """Report both anneals over the same model (QA minus SA deltas)."""
    if sa.n != qa.n:
        raise ValidationError(f"model mismatch: SA has n={sa.n}, QA has n={qa.n}")
    if abs(sa.ground_energy - qa.ground_energy) > 1e-9 * max(1.0, abs(sa.ground_energy)):
        raise ValidationError(
            "model mismatch: runs disagree on the ground energy "
            f"({sa.ground_energy!r} vs {qa.ground_energy!r})"
        )
    return ComparisonReport(
        n=sa.n,
        sa_final_success=sa.final_success,
        sa_final_residual=float(sa.residual_energy[-1]),
        sa_horizon=sa.schedule.horizon,
        sa_schedule=_schedule_label(sa.schedule),
        qa_final_success=qa.final_success,
        qa_final_residual=float(qa.residual_energy[-1]),
        qa_horizon=qa.schedule.horizon,
        qa_schedule=_schedule_label(qa.schedule),
        success_delta=qa.final_success - sa.final_success,
        residual_delta=float(qa.residual_energy[-1] - sa.residual_energy[-1]),
    )


def _schedule_label(sched):
    p = ",".join(cqio.format_float(v) for v in sched.params)
    return f"{sched.kind}({p})"


def run_csv(result):
    """CSV columns: time, control_value, p_ground, residual_energy."""
    lines = ["time,control_value,p_ground,residual_energy"]
    f = cqio.format_float
    for k in range(result.times.size):
        lines.append(
            f"{f(result.times[k])},{f(result.control[k])},"
            f"{f(result.p_ground[k])},{f(result.residual_energy[k])}"
        )
    return "\n".join(lines) + "\n"


def comparison_json(report):
    return {
        "n": report.n,
        "sa": {
            "final_success": report.sa_final_success,
            "final_residual_energy": report.sa_final_residual,
            "horizon": report.sa_horizon,
            "schedule": report.sa_schedule,
        },
        "qa": {
            "final_success": report.qa_final_success,
            "final_residual_energy": report.qa_final_residual,
            "horizon": report.qa_horizon,
            "schedule": report.qa_schedule,
        },
        "success_delta": report.success_delta,
        "residual_delta": report.residual_delta,
    }

"""Finite-volume gas / particle-pushed Vlasov solver for thick and thin sprays.

Gas: conserved U = (alpha rho, alpha rho u, alpha rho E) per cell, Rusanov flux
for the convective part, alpha * central-difference grad p as the
non-conservative pressure term.  Particles: symplectic Euler under the
acceleration -(D + (4 pi / 3) (a^3 / m_g) grad p), with D the drag from
``kernels``.  Exchange goes through cloud-in-cell weights in both directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..kernels import Q_batch, default_qbar_table, drag_force_batch
from .state import (
    VACUUM_FLOOR,
    VOLUME_COEF,
    CFLError,
    GasField,
    NegativeTemperatureError,
    OverpackedError,
    ParticlePhase,
    SolverError,
)

GAMMA = 5.0 / 3.0


@dataclass(frozen=True)
class SprayOptions:
    thin: bool = False
    cfl: float = 0.5
    drag: bool = True
    qbar: object = None

    def table(self):
        return self.qbar if self.qbar is not None else default_qbar_table()


DEFAULT_OPTIONS = SprayOptions()


# ---------------------------------------------------------------------------
# cloud-in-cell helpers


@dataclass(frozen=True)
class CIC:
    j0: np.ndarray
    j1: np.ndarray
    w0: np.ndarray
    w1: np.ndarray
    cells: int

    @classmethod
    def build(cls, x: np.ndarray, cells: int) -> "CIC":
        xi = np.asarray(x, dtype=float) * cells - 0.5
        j = np.floor(xi)
        f = xi - j
        j0 = j.astype(np.int64) % cells
        return cls(j0, (j0 + 1) % cells, 1.0 - f, f, cells)

    def deposit(self, vals) -> np.ndarray:
        """Sum particle values onto cells (ordered reduction, reproducible)."""
        vals = np.asarray(vals, dtype=float)
        flat = vals.reshape(len(self.j0), -1)
        out = np.empty((self.cells, flat.shape[1]))
        for c in range(flat.shape[1]):
            out[:, c] = np.bincount(self.j0, self.w0 * flat[:, c], self.cells) + np.bincount(
                self.j1, self.w1 * flat[:, c], self.cells
            )
        return out.reshape((self.cells,) + vals.shape[1:])

    def interp(self, cellvals) -> np.ndarray:
        c = np.asarray(cellvals, dtype=float)
        sh = (-1,) + (1,) * (c.ndim - 1)
        return c[self.j0] * self.w0.reshape(sh) + c[self.j1] * self.w1.reshape(sh)


def ddx(f: np.ndarray, dx: float) -> np.ndarray:
    """Periodic central difference along axis 0."""
    return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * dx)


# ---------------------------------------------------------------------------
# volume fraction


def number_density(phase: ParticlePhase, cells: int) -> np.ndarray:
    if len(phase) == 0:
        return np.zeros(cells)
    return CIC.build(phase.x, cells).deposit(phase.w) * cells


def volume_fraction(phase: ParticlePhase, grid: GasField | int) -> np.ndarray:
    """alpha = 1 - (4 pi / 3) a^3 (particle number per cell) / dx."""
    cells = grid if isinstance(grid, int) else grid.cells
    alpha = 1.0 - VOLUME_COEF * phase.a**3 * number_density(phase, cells)
    bad = np.flatnonzero(alpha <= 0)
    if bad.size:
        raise OverpackedError(
            f"overpacked cell(s) {bad[:10].tolist()}: alpha <= 0",
            cells=bad.tolist(),
            alpha=alpha[bad].tolist(),
        )
    return alpha


def _alpha_for(phase: ParticlePhase, gas: GasField, opts: SprayOptions) -> np.ndarray:
    return np.ones(gas.cells) if opts.thin else volume_fraction(phase, gas)


# ---------------------------------------------------------------------------
# particle forces


def particle_drag(gas: GasField, phase: ParticlePhase, opts: SprayOptions = DEFAULT_OPTIONS, cic: CIC | None = None):
    """Drag D at every particle from CIC-interpolated gas fields; returns (D, cic)."""
    if cic is None:
        cic = CIC.build(phase.x, gas.cells)
    N = len(phase)
    if N == 0 or not opts.drag or phase.a == 0:
        return np.zeros((N, 3)), cic
    dx = gas.dx
    an = gas.alpha_n
    an_p = cic.interp(an)
    u_p = cic.interp(gas.u)
    T_p = cic.interp(gas.T)
    gan = np.zeros((N, 3))
    gan[:, 0] = cic.interp(ddx(an, dx))
    gu = np.zeros((N, 3, 3))
    gu[:, :, 0] = cic.interp(ddx(gas.u, dx))
    D = drag_force_batch(an_p, u_p, T_p, gan, gu, phase.v, phase.a, opts.table())
    return D, cic


def particle_acceleration(gas: GasField, phase: ParticlePhase, opts: SprayOptions = DEFAULT_OPTIONS):
    D, cic = particle_drag(gas, phase, opts)
    acc = -D
    if not opts.thin and len(phase) and phase.a > 0:
        gp = cic.interp(ddx(gas.p, gas.dx))
        acc[:, 0] -= VOLUME_COEF * phase.a**3 / gas.m_g * gp
    return acc


# ---------------------------------------------------------------------------
# gas phase


def _primitives(U: np.ndarray, alpha: np.ndarray, prev: GasField) -> GasField:
    m_g = prev.m_g
    ar = U[:, 0]
    n = ar / (alpha * m_g)
    vac = n < VACUUM_FLOOR
    safe = np.where(vac, 1.0, ar)
    u = np.where(vac[:, None], prev.u, U[:, 1:4] / safe[:, None])
    internal = U[:, 4] - 0.5 * ar * np.sum(u**2, axis=1)
    theta = np.where(vac, prev.theta, internal * (2.0 / 3.0) / np.where(vac, 1.0, alpha * n))
    bad = np.flatnonzero(~vac & ~(theta > 0))
    if bad.size:
        raise NegativeTemperatureError(
            f"non-positive temperature in cell(s) {bad[:10].tolist()}",
            cells=bad.tolist(),
            theta=theta[bad].tolist(),
            n=n[bad].tolist(),
            u=u[bad].tolist(),
        )
    return GasField(alpha, np.where(vac, 0.0, n), u, theta, m_g, vac)


def max_wave_speed(gas: GasField) -> float:
    c = np.sqrt(GAMMA * gas.theta / gas.m_g)
    return float(np.max(np.linalg.norm(gas.u, axis=1) + c))


def check_cfl(gas: GasField, dt: float, cfl: float = 0.5):
    s = max_wave_speed(gas)
    if dt * s > cfl * gas.dx:
        raise CFLError(f"CFL violated: dt*max(|u|+c)={dt * s:.6g} > {cfl}*dx={cfl * gas.dx:.6g}", dt=dt, max_speed=s, dx=gas.dx)


def _rusanov(U, alpha, gas):
    ar = U[:, 0]
    u1 = gas.u[:, 0]
    ap = alpha * gas.p
    flux = np.empty_like(U)
    flux[:, 0] = ar * u1
    flux[:, 1:4] = (ar * u1)[:, None] * gas.u
    flux[:, 4] = u1 * (U[:, 4] + ap)
    s = np.abs(u1) + np.sqrt(GAMMA * gas.theta / gas.m_g)
    Ur, Fr = np.roll(U, -1, axis=0), np.roll(flux, -1, axis=0)
    smax = np.maximum(s, np.roll(s, -1))
    face = 0.5 * (flux + Fr) - 0.5 * smax[:, None] * (Ur - U)
    return -(face - np.roll(face, 1, axis=0)) / gas.dx


def exchange_terms(gas: GasField, phase: ParticlePhase, opts: SprayOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Per-cell rates from the particles: drag sources and Q-correction fluxes, shape (C, 5)."""
    C, dx = gas.cells, gas.dx
    out = np.zeros((C, 5))
    if len(phase) == 0 or phase.a == 0:
        return out
    D, cic = particle_drag(gas, phase, opts)
    mw = gas.m_g * phase.w
    out[:, 1:4] = cic.deposit(mw[:, None] * D) / dx
    out[:, 4] = cic.deposit(mw * np.einsum("ij,ij->i", D, phase.v)) / dx
    if not opts.thin:
        # alpha rho int F Q(v - u) dv, first column, and alpha rho int F (Q(v - u) v)_1 dv
        # with u taken at each receiving cell
        r0 = phase.v - gas.u[cic.j0]
        r1 = phase.v - gas.u[cic.j1]
        Qv0 = Q_batch(r0, phase.a)
        Qv1 = Q_batch(r1, phase.a)
        col = np.zeros((C, 3))
        en = np.zeros(C)
        for j, wgt, Q in ((cic.j0, cic.w0, Qv0), (cic.j1, cic.w1, Qv1)):
            ww = wgt * phase.w
            for i in range(3):
                col[:, i] += np.bincount(j, ww * Q[:, i, 0], C)
            en += np.bincount(j, ww * np.einsum("mj,mj->m", Q[:, 0, :], phase.v), C)
        ar = gas.alpha * gas.rho / dx
        out[:, 1:4] -= ddx(ar[:, None] * col, dx)
        out[:, 4] -= ddx(ar * en, dx)
    return out


def gas_step(gas: GasField, phase: ParticlePhase, dt: float, quad=None, opts: SprayOptions = DEFAULT_OPTIONS) -> GasField:
    """One forward-Euler finite-volume update of the gas over dt.

    If the particle-derived volume fraction differs from ``gas.alpha`` (the
    particles moved since the last gas update), alpha rho is kept, the energy
    receives -p (alpha_new - alpha_old) and the primitives are re-derived
    before the flux update.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    alpha = _alpha_for(phase, gas, opts)
    U = gas.conserved()
    if not np.array_equal(alpha, gas.alpha):
        U[:, 4] -= gas.p * (alpha - gas.alpha)
        gas = _primitives(U, alpha, gas)
    check_cfl(gas, dt, opts.cfl)
    dU = _rusanov(U, alpha, gas)
    dU[:, 1] -= alpha * ddx(gas.p, gas.dx)
    if opts.drag:
        dU += exchange_terms(gas, phase, opts)
    return _primitives(U + dt * dU, alpha, gas)


# ---------------------------------------------------------------------------
# particle phase


def _wrap(x):
    x = x % 1.0
    x[x >= 1.0] = 0.0
    return x


def vlasov_step(phase: ParticlePhase, gas: GasField, dt: float, quad=None, opts: SprayOptions = DEFAULT_OPTIONS) -> ParticlePhase:
    """Symplectic Euler: v += dt * acc(x, v), then x += dt * v_1 (mod 1)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if len(phase) == 0:
        return phase.copy()
    acc = particle_acceleration(gas, phase, opts)
    v = phase.v + dt * acc
    x = _wrap(phase.x + dt * v[:, 0])
    new = ParticlePhase(x, v, phase.w.copy(), phase.a)
    if not opts.thin:
        volume_fraction(new, gas)
    return new


def spray_step(gas: GasField, phase: ParticlePhase, dt: float, quad=None, opts: SprayOptions = DEFAULT_OPTIONS):
    """Strang split: gas dt/2, particles dt, gas dt/2."""
    g = gas_step(gas, phase, 0.5 * dt, quad, opts)
    ph = vlasov_step(phase, g, dt, quad, opts)
    g = gas_step(g, ph, 0.5 * dt, quad, opts)
    return g, ph


def stable_dt(gas: GasField, cfl: float = 0.5) -> float:
    return cfl * gas.dx / max_wave_speed(gas)


# ---------------------------------------------------------------------------
# run loop

CSV_COLUMNS = (
    "t",
    "total_gas_mass",
    "total_gas_momentum_x",
    "total_gas_momentum_y",
    "total_gas_momentum_z",
    "total_gas_energy",
    "total_particle_number",
    "total_particle_momentum_x",
    "total_particle_momentum_y",
    "total_particle_momentum_z",
    "total_particle_kinetic_energy",
    "min_alpha",
    "P_norm",
    "Q_norm",
    "R_norm",
)


def totals_row(t: float, gas: GasField, phase: ParticlePhase, report=None) -> tuple:
    g = gas.totals()
    p = phase.totals(gas.m_g)
    rem = (report.P_norm, report.Q_norm, report.R_norm) if report is not None else (math.nan,) * 3
    return (t, g["mass"], *g["momentum"], g["energy"], p["number"], *p["momentum"], p["kinetic_energy"], float(gas.alpha.min()), *rem)


@dataclass
class SimulationSetup:
    gas: GasField
    phase: ParticlePhase
    dt: float
    t_final: float
    output_every: int = 1
    thin: bool = False
    remainder_every: int = 0
    quad: object = None
    keep_states: bool = False


@dataclass
class SimulationResult:
    rows: list
    gas: GasField
    phase: ParticlePhase
    steps: int
    t: float
    states: list = field(default_factory=list)
    failure: dict | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def run_simulation(setup: SimulationSetup, callback=None) -> SimulationResult:
    """Strang-split loop to t_final; solver errors end the run with a failure record."""
    from .remainder import remainder_diagnostics

    opts = SprayOptions(thin=setup.thin)
    gas, phase = setup.gas, setup.phase
    if not setup.thin:
        alpha = volume_fraction(phase, gas)
        if not np.array_equal(alpha, gas.alpha):
            gas = GasField(alpha, gas.n, gas.u, gas.theta, gas.m_g)
    n_steps = int(round(setup.t_final / setup.dt)) if setup.t_final > 0 else 0
    rows, states = [], []
    t = 0.0

    def emit(step):
        rep = None
        if setup.remainder_every and step % setup.remainder_every == 0 and not setup.thin:
            rep = remainder_diagnostics(gas, phase, setup.quad)
        rows.append(totals_row(t, gas, phase, rep))
        if setup.keep_states:
            states.append((t, gas.copy(), phase.copy()))
        if callback is not None:
            callback(t, gas, phase)

    emit(0)
    failure = None
    step = 0
    try:
        for step in range(1, n_steps + 1):
            gas, phase = spray_step(gas, phase, setup.dt, setup.quad, opts)
            t = step * setup.dt
            if step % setup.output_every == 0 or step == n_steps:
                emit(step)
    except SolverError as e:
        failure = {**e.record, "step": step, "t": t}
        step -= 1
    return SimulationResult(rows, gas, phase, step, t, states, failure)

"""Stochastic particle simulation of the rescaled gas-particle kinetic system.

Geometry: positions on the periodic unit interval, velocities in R^3.  Every
sample (gas or particle) carries the same count weight ``weight``; the gas
density entering the scaled equations is eta times the gas count density.

Per-pair event rates in count units:
  gas-particle, 1D-projected contact:  weight * a * int_0^{2 pi} k dphi,
      k = (v - w).s H((v - w).s), s_1 = (y - x)/a for a particle at x and a
      gas sample at y with |y - x| < a;
  gas-gas within a cell of width dx:   weight/dx * (eta/delta) * pi |w - w1|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .laws import cosine_weighted_sigma, cross_collision_arrays, same_species_arrays
from .params import ScalingParams

DT_FRACTION = 0.2
PHASE_INIT, PHASE_GG, PHASE_GP = 0, 1, 2


def rng_stream(seed: int, step: int, phase: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, step, phase)."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(step), int(phase)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class KineticEnsemble:
    gas_x: np.ndarray
    gas_w: np.ndarray
    particle_x: np.ndarray
    particle_v: np.ndarray
    weight: float
    cell_count: int
    params: ScalingParams
    rng_seed: int = 0
    step: int = 0
    time: float = 0.0
    collide_gas: bool = True
    collide_cross: bool = True
    events_gg: int = 0
    events_gp: int = 0

    def __post_init__(self):
        self.gas_x = np.asarray(self.gas_x, dtype=float).reshape(-1)
        self.particle_x = np.asarray(self.particle_x, dtype=float).reshape(-1)
        self.gas_w = np.asarray(self.gas_w, dtype=float).reshape(-1, 3)
        self.particle_v = np.asarray(self.particle_v, dtype=float).reshape(-1, 3)
        if len(self.gas_x) != len(self.gas_w) or len(self.particle_x) != len(self.particle_v):
            raise ValueError("position and velocity arrays differ in length")
        for name in ("gas_x", "particle_x"):
            x = getattr(self, name)
            if x.size and (x.min() < 0 or x.max() >= 1):
                raise ValueError(f"{name} must lie in [0, 1)")
        if not self.weight > 0:
            raise ValueError("sample weight must be positive")
        if self.cell_count < 1:
            raise ValueError("cell_count must be >= 1")

    def copy(self) -> "KineticEnsemble":
        return replace(
            self,
            gas_x=self.gas_x.copy(),
            gas_w=self.gas_w.copy(),
            particle_x=self.particle_x.copy(),
            particle_v=self.particle_v.copy(),
        )

    def moments(self) -> dict:
        p, W = self.params, self.weight
        return {
            "gas": _species_moments(p.m_g, W, self.gas_w),
            "particle": _species_moments(p.m_p, W, self.particle_v),
        }


def _species_moments(m, W, vel):
    return {
        "mass": m * W * len(vel),
        "momentum": m * W * vel.sum(axis=0),
        "energy": 0.5 * m * W * float(np.sum(vel**2)),
    }


def free_transport(state: KineticEnsemble, dt: float):
    state.gas_x = (state.gas_x + dt * state.gas_w[:, 0]) % 1.0
    state.particle_x = (state.particle_x + dt * state.particle_v[:, 0]) % 1.0
    # guard the half-open interval against x = 1.0 from rounding
    state.gas_x[state.gas_x >= 1.0] = 0.0
    state.particle_x[state.particle_x >= 1.0] = 0.0


def gas_gas_collisions(state: KineticEnsemble, dt: float, rng: np.random.Generator) -> int:
    """Random pairing within cells (Nanbu-Babovsky style), vectorised.

    Each round pairs the molecules of every cell at random; a pair collides
    with probability (pairs-per-molecule factor) * rate * dt_round, the round
    count being chosen so that probability never exceeds 1.
    """
    n = len(state.gas_x)
    if n < 2:
        return 0
    p = state.params
    C = state.cell_count
    dx = 1.0 / C
    cells = np.minimum((state.gas_x * C).astype(np.int64), C - 1)
    counts = np.bincount(cells, minlength=C)
    factor = np.where(counts % 2 == 0, counts - 1, counts).astype(float)
    rate = state.weight / dx * (p.eta / p.delta) * math.pi
    speed = np.linalg.norm(state.gas_w, axis=1)
    g_bound = 2.0 * speed.max()
    p_max = float(factor.max()) * rate * g_bound * dt
    rounds = max(1, math.ceil(p_max))
    dtr = dt / rounds
    events = 0
    w = state.gas_w
    small_cells = cells.astype(np.int16) if C < 2**15 else cells
    for _ in range(rounds):
        # random permutation, then a stable (radix) sort by cell index
        perm = rng.permutation(n)
        order = perm[np.argsort(small_cells[perm], kind="stable")]
        sc = cells[order]
        starts = np.searchsorted(sc, np.arange(C))
        rank = np.arange(n) - starts[sc]
        first = order[(rank % 2 == 0) & (rank + 1 < counts[sc])]
        second = order[np.flatnonzero((rank % 2 == 0) & (rank + 1 < counts[sc])) + 1]
        g = w[first] - w[second]
        gn = np.sqrt(np.einsum("ij,ij->i", g, g))
        prob = factor[cells[first]] * rate * gn * dtr
        hit = rng.random(len(first)) < prob
        i, j = first[hit], second[hit]
        sig = cosine_weighted_sigma(g[hit], rng)
        w[i], w[j] = same_species_arrays(w[i], w[j], sig)
        events += int(hit.sum())
    return events


def gas_particle_collisions(state: KineticEnsemble, dt: float, rng: np.random.Generator) -> int:
    """Null-collision sampling of delocalized gas-particle contacts.

    For each particle the candidate count is Poisson with mean
    N_range * weight * a * 2 pi * g_max * dt, partners are drawn uniformly from
    the gas samples within distance a, the azimuth of s is uniform and the
    candidate is accepted with probability k / g_max.  Candidates are proposed
    in bulk and applied serially in a fixed order, re-evaluating k with the
    current velocities so that repeated partners stay exact.
    """
    ng, npart = len(state.gas_x), len(state.particle_x)
    if ng == 0 or npart == 0:
        return 0
    p = state.params
    a = p.a
    order = np.argsort(state.gas_x, kind="stable")
    xs = state.gas_x[order]
    g_max = float(np.linalg.norm(state.particle_v, axis=1).max() + np.linalg.norm(state.gas_w, axis=1).max())
    if g_max == 0:
        return 0
    xp = state.particle_x
    # count gas samples in [x - a, x + a] on the circle
    lo, hi = xp - a, xp + a
    n_range = _circular_count(xs, lo, hi)
    lam = n_range * state.weight * a * 2 * math.pi * g_max * dt
    n_cand = rng.poisson(lam)
    owners = np.repeat(np.arange(npart), n_cand)
    if owners.size == 0:
        return 0
    pick = np.floor(rng.random(owners.size) * n_range[owners]).astype(np.int64)
    start = np.searchsorted(xs, lo[owners] % 1.0, side="left")
    gi = order[(start + pick) % ng]
    d = state.gas_x[gi] - xp[owners]
    d -= np.round(d)
    s1 = d / a
    phi = 2 * math.pi * rng.random(owners.size)
    st = np.sqrt(np.clip(1.0 - s1**2, 0.0, None))
    sig = np.stack([s1, st * np.cos(phi), st * np.sin(phi)], axis=1)
    u_acc = rng.random(owners.size)
    return _apply_cross_serial(state, owners, gi, sig, u_acc, g_max, p.eta)


def _circular_count(xs, lo, hi):
    n = len(xs)
    c_hi = np.searchsorted(xs, hi % 1.0, side="left") + n * np.floor(hi).astype(np.int64)
    c_lo = np.searchsorted(xs, lo % 1.0, side="left") + n * np.floor(lo).astype(np.int64)
    return c_hi - c_lo


def _apply_cross_serial(state, owners, gi, sig, u_acc, g_max, eta) -> int:
    v, w = state.particle_v, state.gas_w
    # vectorised fast path when no sample appears twice; otherwise serial order
    if len(np.unique(owners)) == len(owners) and len(np.unique(gi)) == len(gi):
        k = np.sum((v[owners] - w[gi]) * sig, axis=1)
        hit = (k > 0) & (u_acc * g_max < k)
        o, g, s = owners[hit], gi[hit], sig[hit]
        v[o], w[g] = cross_collision_arrays(v[o], w[g], s, eta, check=False)
        return int(hit.sum())
    events = 0
    c_v = 2 * eta / (1 + eta)
    c_w = 2 / (1 + eta)
    for o, g, s, u in zip(owners, gi, sig, u_acc):
        k = (v[o] - w[g]) @ s
        if k > 0 and u * g_max < k:
            v[o] = v[o] - c_v * k * s
            w[g] = w[g] + c_w * k * s
            events += 1
    return events


def dsmc_step(state: KineticEnsemble, dt: float) -> KineticEnsemble:
    """Transport, then gas-gas, then gas-particle collisions (first-order split)."""
    p = state.params
    if not dt > 0:
        raise ValueError("dt must be positive")
    if state.collide_gas and dt > DT_FRACTION * p.delta:
        raise ValueError(f"dt={dt} exceeds the stability bound {DT_FRACTION}*delta={DT_FRACTION * p.delta}")
    new = state.copy()
    free_transport(new, dt)
    if new.collide_gas:
        new.events_gg += gas_gas_collisions(new, dt, rng_stream(new.rng_seed, new.step, PHASE_GG))
    if new.collide_cross:
        new.events_gp += gas_particle_collisions(new, dt, rng_stream(new.rng_seed, new.step, PHASE_GP))
    new.step += 1
    new.time += dt
    return new


def maxwellian_ensemble(
    params: ScalingParams,
    n_gas: int,
    n_particles: int,
    cell_count: int,
    seed: int,
    gas_u=(0.0, 0.0, 0.0),
    gas_T: float = 1.0,
    particle_v=(0.0, 0.0, 0.0),
    particle_T: float = 0.0,
) -> KineticEnsemble:
    """Spatially uniform ensemble: Maxwellian gas, Gaussian (or cold) particles.

    Positions are stratified (one per slot) to suppress density noise.  The
    common weight is fixed by one particle sample per 1/n_particles of
    particle count density.
    """
    rng = rng_stream(seed, 0, 0)
    gx = (np.arange(n_gas) + rng.random(n_gas)) / max(n_gas, 1)
    px = (np.arange(n_particles) + rng.random(n_particles)) / max(n_particles, 1)
    gw = np.asarray(gas_u) + math.sqrt(gas_T) * rng.standard_normal((n_gas, 3))
    pv = np.asarray(particle_v) + math.sqrt(particle_T) * rng.standard_normal((n_particles, 3))
    weight = 1.0 / max(n_particles, 1) if n_particles else 1.0 / max(n_gas, 1)
    return KineticEnsemble(gx % 1.0, gw, px % 1.0, pv, weight, cell_count, params, rng_seed=seed)


def run_dsmc(state: KineticEnsemble, dt: float, n_steps: int, every: int = 1, callback=None):
    """Advance n_steps; returns rows (t, species, mass, px, py, pz, energy)."""
    rows = []

    def emit(s):
        for sp, m in s.moments().items():
            rows.append((s.time, sp, m["mass"], *m["momentum"], m["energy"]))
        if callback is not None:
            callback(s)

    emit(state)
    for i in range(n_steps):
        state = dsmc_step(state, dt)
        if (i + 1) % every == 0:
            emit(state)
    return state, rows

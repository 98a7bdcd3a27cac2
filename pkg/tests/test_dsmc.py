import math

import numpy as np
import pytest
from scipy import stats

from thickspray.collision import ScalingParams
from thickspray.collision.dsmc import KineticEnsemble, dsmc_step, maxwellian_ensemble, run_dsmc


def total_momentum_energy(s):
    p = s.params
    mom = p.m_p * s.particle_v.sum(0) + p.m_g * s.gas_w.sum(0)
    en = p.m_p * np.sum(s.particle_v**2) + p.m_g * np.sum(s.gas_w**2)
    return mom, en


def test_free_transport_exact():
    p = ScalingParams(eta=0.1, delta=1.0, a=0.05)
    s = maxwellian_ensemble(p, 500, 50, 10, 3, particle_v=(0.7, 0, 0), particle_T=0.1)
    s.collide_gas = s.collide_cross = False
    out = dsmc_step(s, 0.37)
    assert np.array_equal(out.gas_x, (s.gas_x + 0.37 * s.gas_w[:, 0]) % 1.0)
    assert np.array_equal(out.particle_x, (s.particle_x + 0.37 * s.particle_v[:, 0]) % 1.0)
    assert np.array_equal(out.gas_w, s.gas_w)


def test_forced_collision_conserves_momentum_energy():
    p = ScalingParams(eta=0.3, delta=1.0, a=0.1)
    s = KineticEnsemble(
        gas_x=[0.55], gas_w=[[0.0, 1.2, 0.1]], particle_x=[0.5], particle_v=[[0.0, -0.3, 0.4]],
        weight=50.0, cell_count=4, params=p, rng_seed=1,
    )
    s.collide_gas = False
    mom0, en0 = total_momentum_energy(s)
    events = 0
    for _ in range(20):
        s = dsmc_step(s, 0.01)
        events = s.events_gp
    assert events > 0
    mom, en = total_momentum_energy(s)
    assert np.allclose(mom, mom0, atol=1e-12)
    assert en == pytest.approx(en0, abs=1e-12)


def test_conservation_in_bulk_run():
    p = ScalingParams(eta=0.2, delta=0.5, a=0.05)
    s = maxwellian_ensemble(p, 2000, 400, 10, 9, particle_v=(1.5, 0, 0))
    n_g, n_p = len(s.gas_x), len(s.particle_x)
    mom0, en0 = total_momentum_energy(s)
    for _ in range(30):
        s = dsmc_step(s, 0.05)
    mom, en = total_momentum_energy(s)
    assert s.events_gp > 0 and s.events_gg > 0
    assert len(s.gas_x) == n_g and len(s.particle_x) == n_p
    assert np.allclose(mom, mom0, atol=1e-10 * abs(en0))
    assert en == pytest.approx(en0, rel=1e-12)


def test_determinism_and_step_bound():
    p = ScalingParams(eta=0.2, delta=0.5, a=0.05)
    runs = []
    for _ in range(2):
        s = maxwellian_ensemble(p, 800, 100, 8, 42, particle_v=(1.0, 0, 0))
        for _ in range(10):
            s = dsmc_step(s, 0.05)
        runs.append(s)
    assert np.array_equal(runs[0].gas_w, runs[1].gas_w)
    assert np.array_equal(runs[0].particle_v, runs[1].particle_v)
    with pytest.raises(ValueError, match="stability"):
        dsmc_step(runs[0], 0.2)


def test_invalid_ensembles_rejected():
    p = ScalingParams(eta=0.2, delta=0.5, a=0.05)
    with pytest.raises(ValueError):
        KineticEnsemble([1.2], [[0, 0, 0]], [], np.zeros((0, 3)), 1.0, 4, p)
    with pytest.raises(ValueError):
        KineticEnsemble([0.2], [[0, 0, 0]], [], np.zeros((0, 3)), 0.0, 4, p)


def test_gas_particle_event_rate():
    # particle at rest in a Maxwellian: rate = n_count * pi a^2 * E|w|, E|w| = sqrt(8/pi)
    eta, a = 0.1, 0.05
    p = ScalingParams(eta=eta, delta=1.0, a=a)
    s = maxwellian_ensemble(p, 20000, 200, 10, 5)
    s.collide_gas = False
    s.particle_v[:] = 0.0
    n_count = len(s.gas_x) * s.weight
    steps, dt = 200, 0.01
    for _ in range(steps):
        s = dsmc_step(s, dt)
        s.particle_v[:] = 0.0
    expected = n_count * math.pi * a**2 * math.sqrt(8 / math.pi) * len(s.particle_x) * steps * dt
    assert abs(s.events_gp - expected) < 5 * math.sqrt(expected) + 0.03 * expected


def test_gas_gas_event_rate():
    # per-molecule rate (eta/delta) n_count pi E|g|, E|g| = sqrt(2) sqrt(8/pi)
    eta, delta = 0.1, 0.5
    p = ScalingParams(eta=eta, delta=delta, a=0.05)
    s = maxwellian_ensemble(p, 4000, 0, 8, 6)
    s.weight = 1e-3
    s.collide_cross = False
    n_count = len(s.gas_x) * s.weight
    steps, dt = 100, 0.05
    for _ in range(steps):
        s = dsmc_step(s, dt)
    rate = eta / delta * n_count * math.pi * math.sqrt(2) * math.sqrt(8 / math.pi)
    expected = 0.5 * len(s.gas_x) * rate * steps * dt
    assert s.events_gg == pytest.approx(expected, rel=0.05)


def test_equilibrium_hold():
    p = ScalingParams(eta=0.1, delta=1.0, a=0.05)
    s = maxwellian_ensemble(p, 3000, 0, 10, 12, gas_u=(0.3, 0, 0))
    s.weight = 1e-3
    for _ in range(1000):
        s = dsmc_step(s, 0.2)
    assert s.events_gg > 10 * len(s.gas_x)
    z = s.gas_w - np.array([0.3, 0, 0])
    for k in range(3):
        edges = stats.norm.ppf(np.linspace(0, 1, 21))
        counts, _ = np.histogram(z[:, k], bins=edges)
        assert stats.chisquare(counts).pvalue > 0.01


def test_run_dsmc_rows():
    p = ScalingParams(eta=0.2, delta=0.5, a=0.05)
    s = maxwellian_ensemble(p, 200, 20, 4, 1)
    _, rows = run_dsmc(s, 0.05, 4, every=2)
    assert len(rows) == 6 and rows[0][1] == "gas" and rows[1][1] == "particle"

import math

import numpy as np
import pytest

from thickspray.collision import ScalingParams
from thickspray.collision.densities import GaussianField, KDEField, Sinusoid, VecProfile
from thickspray.collision.enskog import I_term, enskog_E2_apply, weak_identity_residual
from thickspray.kernels import Q_batch, q_kernel
from thickspray.quadrature import gauss_hermite_3d


def uniform_maxwellian(n=1.0, u=(0.0, 0.0, 0.0), T=1.0):
    return GaussianField(Sinusoid(n), VecProfile.constant(u), Sinusoid(T))


def sinusoidal_pair():
    f = GaussianField(Sinusoid(1.0, 0.3), VecProfile(Sinusoid(0.2, 0.3)), Sinusoid(1.0, 0.2))
    F = GaussianField(Sinusoid(0.5, 0.2, phase=1.0), VecProfile(Sinusoid(1.0, 0.2), Sinusoid(0.3)), Sinusoid(0.25, 0.05))
    return f, F


def test_gaussian_field_quadrature_view():
    F = GaussianField(Sinusoid(0.5, 0.2), VecProfile(Sinusoid(1.0, 0.2)), Sinusoid(0.3, 0.05))
    for x in (0.1, 0.6):
        nodes, w = F.quad_v(x)
        assert w.sum() == pytest.approx(F.density(x), rel=1e-12)
        assert (w @ nodes)[0] == pytest.approx(F.density(x) * F.mean(x)[0], rel=1e-12)
        T = F.temp(x)
        assert w @ np.sum((nodes - F.mean(x)) ** 2, axis=1) == pytest.approx(3 * T * F.density(x), rel=1e-12)


def test_kde_field_mass_and_sampling():
    rng = np.random.default_rng(0)
    x = rng.random(4000)
    v = rng.normal(size=(4000, 3)) + [1.0, 0, 0]
    kde = KDEField(x, v, np.full(4000, 1 / 4000), bandwidth_x=0.05)
    xs = np.linspace(0, 1, 400, endpoint=False)
    assert np.mean(kde.density(xs)) == pytest.approx(1.0, rel=1e-6)
    s = kde.sample_v(np.full(20000, 0.3), rng)
    assert s[:, 0].mean() == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValueError):
        KDEField(x, v, np.ones(4000), bandwidth_x=0.0)


def test_E2_constant_test_function_is_zero():
    p = ScalingParams(eta=0.1, delta=1, a=0.1)
    F = uniform_maxwellian(1.0, (0.5, 0, 0), 0.01)
    est = enskog_E2_apply(F, uniform_maxwellian(), lambda v: np.ones(len(v)), 0.2, p, 20_000, 1)
    assert est.value == 0.0 and est.se == 0.0


def test_E2_rejects_small_sample_counts():
    p = ScalingParams(eta=0.1, delta=1, a=0.1)
    with pytest.raises(ValueError):
        enskog_E2_apply(uniform_maxwellian(), uniform_maxwellian(), lambda v: v[:, 0], 0.2, p, 100, 1)
    with pytest.raises(TypeError):
        enskog_E2_apply(object(), uniform_maxwellian(), lambda v: v[:, 0], 0.2, p, 20_000, 1)


@pytest.mark.parametrize("eta", [0.1, 0.025])
def test_E2_momentum_matches_friction(eta):
    # homogeneous fields: (1/eta) int E2 v = -(1/(1+eta)) pi a^2 an T int F q((v-u)/sqrt T)
    a, an, T = 0.1, 1.3, 0.8
    u = np.array([0.2, 0.0, 0.0])
    F = uniform_maxwellian(0.7, (1.5, 0.3, 0.0), 0.04)
    f = uniform_maxwellian(an, u, T)
    p = ScalingParams(eta=eta, delta=1, a=a)
    est = enskog_E2_apply(F, f, lambda v: v[:, 0], 0.4, p, 200_000, 3)
    y, w = gauss_hermite_3d(8)
    vs = np.array([1.5, 0.3, 0.0]) + 0.2 * y
    qF = sum(wk * q_kernel((vk - u) / math.sqrt(T))[0] for vk, wk in zip(vs, w))
    oracle = -math.pi * a**2 * an * T * 0.7 * qF / (1 + eta)
    assert abs(est.value / eta - oracle) < 4 * est.se / eta


@pytest.mark.parametrize(
    "name,phi",
    [
        ("one", lambda x, xi: np.ones(len(x))),
        ("xi1", lambda x, xi: xi[:, 0]),
        ("energy", lambda x, xi: 0.5 * np.sum(xi**2, axis=1)),
    ],
)
def test_weak_identity_canonical(name, phi):
    f, F = sinusoidal_pair()
    p = ScalingParams(eta=0.1, delta=1, a=0.1)
    r = weak_identity_residual(f, F, phi, p, 200_000, 11)
    assert r.rhs.value == pytest.approx(0.0, abs=1e-15)
    assert r.passed, r


def test_weak_identity_x_dependent_phi():
    # nonzero right-hand side: sensitive to the shift and div I structure
    f, F = sinusoidal_pair()
    p = ScalingParams(eta=0.2, delta=1, a=0.2)
    phi = lambda x, xi: np.sin(2 * np.pi * x) * (1 + xi[:, 0])  # noqa: E731
    r = weak_identity_residual(f, F, phi, p, 400_000, 5)
    assert abs(r.rhs.value) > 4 * r.rhs.se
    assert r.passed, r


def test_weak_identity_deterministic():
    f, F = sinusoidal_pair()
    p = ScalingParams(eta=0.1, delta=1, a=0.1)
    phi = lambda x, xi: xi[:, 0]  # noqa: E731
    r1 = weak_identity_residual(f, F, phi, p, 20_000, 9)
    r2 = weak_identity_residual(f, F, phi, p, 20_000, 9)
    assert r1.residual == r2.residual


def _I_oracle(f_state, F_mean, F_T, rhoF, a, eta, energy):
    # uniform fields: I_1 = a^3 int F mu int s_1 k dphi  with  2 a^3 K_3 = Q
    an, u, T = f_state
    yv, wv = gauss_hermite_3d(8)
    yw, ww = gauss_hermite_3d(8)
    v = F_mean + math.sqrt(F_T) * yv
    w = u + math.sqrt(T) * yw
    V = np.repeat(v, len(w), axis=0)
    Wv = np.tile(w, (len(v), 1))
    weight = np.outer(wv, ww).ravel() * an * rhoF
    Q = Q_batch(V - Wv, a)
    if energy:
        vec = (V + eta * Wv) / (1 + eta) ** 2
    else:
        vec = np.tile([1.0, 0, 0], (len(V), 1)) / (1 + eta)
    return float(weight @ np.einsum("mj,mj->m", Q[:, 0, :], vec))


@pytest.mark.parametrize("energy", [False, True])
def test_I_term_matches_Q_flux(energy):
    a, eta = 0.1, 0.05
    an, u, T = 1.2, np.array([0.3, 0.0, 0.0]), 1.0
    Fm, FT, rho = np.array([1.2, 0.4, 0.0]), 0.09, 0.6
    f = uniform_maxwellian(an, u, T)
    F = uniform_maxwellian(rho, Fm, FT)
    p = ScalingParams(eta=eta, delta=1, a=a)
    phi = (lambda x, xi: 0.5 * np.sum(xi**2, axis=1)) if energy else (lambda x, xi: xi[:, 0])
    est = I_term(f, F, phi, p, 400_000, 2)
    oracle = _I_oracle((an, u, T), Fm, FT, rho, a, eta, energy)
    assert abs(est.value - oracle) < 4 * est.se + 1e-12
    assert est.se < 0.05 * abs(oracle)

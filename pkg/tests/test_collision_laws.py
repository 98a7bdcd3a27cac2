import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thickspray.collision import ScalingParams, VelocityPair, cross_collision, cross_collision_arrays, same_species_collision
from thickspray.collision.laws import cosine_weighted_sigma

comp = st.floats(-5, 5, allow_nan=False)
vec = st.tuples(comp, comp, comp).map(np.array)
unit = vec.filter(lambda x: np.linalg.norm(x) > 1e-3).map(lambda x: x / np.linalg.norm(x))
etas = st.floats(0.01, 1.0)


def test_head_on_equal_mass_swaps():
    v, w = np.array([1.0, 2, 0]), np.array([-1.0, 0.5, 3])
    s = (v - w) / np.linalg.norm(v - w)
    out = cross_collision(VelocityPair(v, w), s, 1.0)
    assert np.allclose(out.v, w, atol=1e-14) and np.allclose(out.w, v, atol=1e-14)


def test_hand_example():
    out = cross_collision(VelocityPair([1.0, 0, 0], [0.0, 0, 0]), [1.0, 0, 0], 0.5)
    assert np.allclose(out.v, [1 / 3, 0, 0], atol=1e-15)
    assert np.allclose(out.w, [4 / 3, 0, 0], atol=1e-15)
    assert 2 * out.v[0] + out.w[0] == pytest.approx(2.0, abs=1e-15)


def test_non_unit_sigma_rejected():
    with pytest.raises(ValueError):
        cross_collision(VelocityPair(np.zeros(3), np.ones(3)), [1.0, 1e-5, 0], 0.5)
    with pytest.raises(ValueError):
        same_species_collision(VelocityPair(np.zeros(3), np.ones(3)), [2.0, 0, 0])
    with pytest.raises(ValueError):
        cross_collision(VelocityPair(np.zeros(3), np.ones(3)), [1.0, 0, 0], 1.5)


@settings(deadline=None, max_examples=200)
@given(vec, vec, unit, etas)
def test_cross_collision_properties(v, w, s, eta):
    p = VelocityPair(v, w)
    once = cross_collision(p, s, eta)
    twice = cross_collision(once, s, eta)
    scale = 1 + np.abs(v).max() + np.abs(w).max()
    assert np.allclose(twice.v, v, atol=1e-12 * scale) and np.allclose(twice.w, w, atol=1e-12 * scale)
    minus = cross_collision(p, -s, eta)
    assert np.allclose(minus.v, once.v, atol=1e-12 * scale) and np.allclose(minus.w, once.w, atol=1e-12 * scale)
    assert (once.v - once.w) @ s == pytest.approx(-(v - w) @ s, abs=1e-12 * scale)
    # masses m_p = 1, m_g = eta
    assert np.allclose(once.v + eta * once.w, v + eta * w, atol=1e-12 * scale)
    e0 = v @ v + eta * w @ w
    assert once.v @ once.v + eta * once.w @ once.w == pytest.approx(e0, abs=1e-12 * scale**2)


@settings(deadline=None, max_examples=100)
@given(vec, vec, unit)
def test_same_species(v, w, s):
    out = same_species_collision(VelocityPair(v, w), s)
    ref = cross_collision(VelocityPair(v, w), s, 1.0)
    scale = 1 + np.abs(v).max() + np.abs(w).max()
    assert np.allclose(out.v, ref.v, atol=1e-12 * scale) and np.allclose(out.w, ref.w, atol=1e-12 * scale)
    assert np.allclose(out.v + out.w, v + w, atol=1e-12 * scale)
    assert out.v @ out.v + out.w @ out.w == pytest.approx(v @ v + w @ w, abs=1e-12 * scale**2)


def test_same_species_perpendicular_sigma_is_identity():
    v, w = np.array([1.0, 0, 0]), np.array([0.0, 0, 0])
    out = same_species_collision(VelocityPair(v, w), [0, 1.0, 0])
    assert np.array_equal(out.v, v) and np.array_equal(out.w, w)


def test_jacobian_determinant_numerically():
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(100):
        v, w = rng.normal(size=3), rng.normal(size=3)
        s = rng.normal(size=3)
        s /= np.linalg.norm(s)
        eta = rng.uniform(0.01, 1)
        z0 = np.concatenate([v, w])

        def phi(z):
            a, b = cross_collision_arrays(z[:3], z[3:], s, eta)
            return np.concatenate([a, b])

        Jm = np.empty((6, 6))
        for j in range(6):
            e = np.zeros(6)
            e[j] = h
            Jm[:, j] = (phi(z0 + e) - phi(z0 - e)) / (2 * h)
        assert abs(abs(np.linalg.det(Jm)) - 1) < 1e-6


def test_cosine_weighted_sigma_distribution():
    rng = np.random.default_rng(0)
    ax = np.tile([[0.3, -1.0, 2.0]], (200_000, 1))
    e = ax[0] / np.linalg.norm(ax[0])
    c = cosine_weighted_sigma(ax, rng) @ e
    assert c.min() >= 0
    # cosine law: E[c] = 2/3, E[c^2] = 1/2
    assert np.mean(c) == pytest.approx(2 / 3, abs=3e-3)
    assert np.mean(c**2) == pytest.approx(0.5, abs=3e-3)


def test_scaling_params_invariants():
    ScalingParams(eta=0.2, delta=0.1, a=0.05, m_g=1.0, m_p=5.0)
    with pytest.raises(ValueError, match="m_g/m_p"):
        ScalingParams(eta=0.1, delta=0.1, a=0.05, m_g=1.0, m_p=5.0)
    with pytest.raises(ValueError, match="a must"):
        ScalingParams(eta=0.1, delta=0.1, a=0.6)
    with pytest.raises(ValueError):
        ScalingParams(eta=0.1, delta=0.0, a=0.1)
    assert ScalingParams(eta=0.25, delta=1, a=0.1, m_g=2.0).m_p == 8.0

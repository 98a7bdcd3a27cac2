import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from thickspray.kernels import (
    QBAR_ZERO,
    GasGradients,
    LocalGasState,
    Q_tensor,
    QbarTable,
    SymTensor2,
    K4_closed,
    K4_integral,
    K_closed,
    K_integral,
    ball_coefficient,
    drag_force_batch,
    drag_force_D,
    maxwellian_eval,
    maxwellian_moments_quadrature,
    moment2_identity,
    q_kernel,
    qbar_profile,
    viscous_tensor_Dbar,
)
from thickspray.quadrature import QuadratureSpec, gauss_hermite_3d

finite = st.floats(-3, 3, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def qbar0_oracle():
    # linearising |xi - y| in xi: q(xi) ~ (E|y| + E[y1^2/|y|]) xi = (4/3) E|y| xi
    return 4.0 / 3.0 * stats.chi(3).mean()


def test_qbar0_oracle_matches_closed_value():
    assert qbar0_oracle() == pytest.approx(8.0 / 3.0 * math.sqrt(2.0 / math.pi), rel=1e-12)
    assert qbar_profile(0.0) == pytest.approx(qbar0_oracle(), abs=1e-10)
    assert qbar_profile(1e-6) == pytest.approx(qbar0_oracle(), abs=1e-9)


def test_q_at_zero_and_large_argument():
    assert np.abs(q_kernel(np.zeros(3))).max() < 1e-14
    assert 10.0 <= qbar_profile(10.0) <= 10.3
    # large-s asymptote qbar(s) ~ s + 2/s
    assert qbar_profile(30.0) == pytest.approx(30.0 + 2.0 / 30.0, rel=1e-3)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 5.0])
def test_qbar_matches_3d_quadrature(s):
    e3 = np.array([0.0, 0.0, 1.0])
    assert np.allclose(q_kernel(s * e3), qbar_profile(s) * s * e3, atol=1e-10, rtol=0)


@pytest.mark.parametrize("s", [2.0, 5.0])
def test_q_against_cartesian_gauss_hermite(s):
    # independent Cartesian rule; |xi - y| kink sits in the far tail for s >= 2
    xi = s * np.array([0.6, 0.0, 0.8])
    y, w = gauss_hermite_3d(60)
    z = xi - y
    ref = (w * np.linalg.norm(z, axis=1)) @ z
    assert np.allclose(q_kernel(xi), ref, atol=1e-5 * s**2)


def test_q_against_monte_carlo_small_argument():
    rng = np.random.default_rng(7)
    xi = np.array([0.3, -0.2, 0.1])
    z = xi - rng.standard_normal((2_000_000, 3))
    samples = z * np.linalg.norm(z, axis=1, keepdims=True)
    est, se = samples.mean(0), samples.std(0) / math.sqrt(len(z))
    assert np.all(np.abs(q_kernel(xi) - est) < 5 * se)


@settings(deadline=None, max_examples=40)
@given(vec3)
def test_q_radial_and_odd(xi):
    q = q_kernel(xi)
    n = np.linalg.norm(xi)
    if n > 1e-9:
        e = xi / n
        assert np.linalg.norm(q - (q @ e) * e) < 1e-10
        assert q @ e > 0
    assert np.allclose(q_kernel(-xi), -q, atol=1e-12)


def test_qbar_nondecreasing_and_positive():
    s = np.linspace(0, 20, 81)
    vals = np.array([qbar_profile(x) for x in s])
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) >= -1e-12)


def test_qbar_table_interpolation_error():
    table = QbarTable(s_max=12.0)
    probe = np.random.default_rng(1).uniform(0, 15, 200)
    direct = np.array([qbar_profile(x) for x in probe])
    assert np.abs(table(probe) - direct).max() < 1e-6
    assert table.max_error < 1e-6


def test_maxwellian_values():
    st0 = LocalGasState(1.0, np.zeros(3), 1.0)
    assert maxwellian_eval(st0, np.zeros(3)) == pytest.approx((2 * math.pi) ** -1.5, rel=1e-14)
    s = LocalGasState(2.5, np.array([1.0, -1.0, 0.5]), 0.3)
    assert maxwellian_eval(s, s.u) == pytest.approx(2.5 / (2 * math.pi * 0.3) ** 1.5, rel=1e-14)
    with pytest.raises(ValueError):
        maxwellian_eval(s, np.array([np.nan, 0, 0]))


def test_maxwellian_moments_by_quadrature():
    s = LocalGasState(1.7, np.array([0.4, -0.2, 1.1]), 0.8)
    m0, m1, m2 = maxwellian_moments_quadrature(s)
    assert m0 == pytest.approx(1.7, abs=1e-10)
    assert np.allclose(m1, 1.7 * s.u, atol=1e-10)
    expect = moment2_identity(s, s.u).matrix() + 1.7 * np.outer(s.u, s.u)
    assert np.allclose(m2, expect, atol=1e-10)


@settings(deadline=None, max_examples=30)
@given(vec3, vec3, st.floats(0.1, 3.0), st.floats(0.0, 4.0))
def test_moment2_identity_against_quadrature(v, u, T, an):
    s = LocalGasState(an, u, T)
    y, w = gauss_hermite_3d(8)
    ws = u + math.sqrt(T) * y
    d = v - ws
    ref = an * np.einsum("k,ki,kj->ij", w, d, d)
    out = moment2_identity(s, v)
    assert np.allclose(out.matrix(), ref, atol=1e-8)
    assert out.trace() == pytest.approx(an * (v - u) @ (v - u) + 3 * an * T, abs=1e-10)


def test_Q_tensor_values():
    assert np.all(Q_tensor(np.zeros(3), 0.7).matrix() == 0)
    d = np.diag([4 * math.pi / 5, 4 * math.pi / 15, 4 * math.pi / 15])
    assert np.allclose(Q_tensor(np.array([1.0, 0, 0]), 1.0).matrix(), d, atol=1e-15)
    xi, a = np.array([0.3, -1.2, 2.0]), 0.37
    assert Q_tensor(xi, a).trace() == pytest.approx(ball_coefficient(3, a) * xi @ xi, rel=1e-13)


def test_K_examples():
    assert np.allclose(K_integral(np.array([0, 0, 2.0])), [0, 0, 2 * math.pi], atol=1e-12)
    assert np.abs(K_integral(np.zeros(3))).max() == 0
    assert np.allclose(
        K4_integral(np.array([1.0, 0, 0])).matrix(),
        np.diag([2 * math.pi / 5, 2 * math.pi / 15, 2 * math.pi / 15]),
        atol=1e-12,
    )
    assert np.abs(K4_integral(np.zeros(3)).matrix()).max() == 0


def test_K_monte_carlo_backend_agrees():
    quad = QuadratureSpec(sphere_rule="monte-carlo", n_samples=400_000, seed=3)
    xi = np.array([0.5, 1.0, -0.3])
    assert np.allclose(K_integral(xi, quad), K_closed(xi), atol=2e-2)
    assert np.allclose(K4_integral(xi, quad).matrix(), K4_closed(xi).matrix(), atol=2e-2)


@settings(deadline=None, max_examples=50)
@given(vec3, st.floats(0.01, 1.0))
def test_K4_equals_Q(xi, a):
    closed = 2 * a**3 * K4_closed(xi).matrix()
    assert np.allclose(closed, Q_tensor(xi, a).matrix(), atol=1e-10 * max(1, xi @ xi))
    assert np.allclose(2 * a**3 * K4_integral(xi).matrix(), Q_tensor(xi, a).matrix(), atol=1e-6)


def test_ball_coefficient():
    assert ball_coefficient(3, 1.0) == pytest.approx(4 * math.pi / 3, rel=1e-14)
    assert ball_coefficient(2, 1.0) == pytest.approx(math.pi, rel=1e-14)
    assert ball_coefficient(1, 1.0) == pytest.approx(2.0, rel=1e-14)
    assert ball_coefficient(3, 0.2) == pytest.approx(4 * math.pi / 3 * 0.008, rel=1e-14)
    with pytest.raises(ValueError):
        ball_coefficient(0, 1.0)


def test_symtensor_rejects_nonfinite_and_asymmetric():
    with pytest.raises(ValueError):
        SymTensor2(1, 1, 1, float("inf"), 0, 0)
    with pytest.raises(ValueError):
        SymTensor2.from_matrix(np.array([[1, 2, 0], [0, 1, 0], [0, 0, 1.0]]))


def test_gas_gradients_div_check():
    J = np.arange(9.0).reshape(3, 3)
    assert GasGradients(grad_u=J).div_u == 12.0
    with pytest.raises(ValueError):
        GasGradients(grad_u=J, div_u=11.0)


def _random_inputs(rng):
    state = LocalGasState(rng.uniform(0.1, 3), rng.normal(size=3), rng.uniform(0.2, 2))
    J = rng.normal(size=(3, 3))
    grads = GasGradients(grad_alpha_n=rng.normal(size=3), grad_u=J)
    return state, grads, rng.normal(size=3) * 2, rng.uniform(0.01, 0.3)


def test_drag_zero_gradients():
    s = LocalGasState(1.3, np.array([0.2, 0, -0.1]), 0.7)
    g = GasGradients()
    assert np.abs(drag_force_D(s, g, s.u, 0.1)).max() == 0
    v, a = np.array([1.0, 0.5, 0.0]), 0.1
    T = 0.7
    lead = math.pi * a**2 * 1.3 * T * q_kernel((v - s.u) / math.sqrt(T))
    assert np.allclose(drag_force_D(s, g, v, a), lead, rtol=1e-10)
    Db = viscous_tensor_Dbar(s, g, v, a)
    assert np.allclose(Db, Db[0, 0] * np.eye(3), atol=0)


def test_drag_divergence_against_finite_differences():
    # div_x[alpha_n(x) Q(v - u(x))] with linear fields, differenced numerically
    rng = np.random.default_rng(11)
    state, grads, v, a = _random_inputs(rng)
    x0 = np.zeros(3)

    def field(x):
        an = state.alpha_n + grads.grad_alpha_n @ x
        u = state.u + grads.grad_u @ x
        return an * Q_tensor(v - u, a).matrix()

    h = 1e-5
    div = np.zeros(3)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        div += (field(x0 + e) - field(x0 - e))[:, j] / (2 * h)
    lead = drag_force_D(state, GasGradients(), v, a)
    assert np.allclose(drag_force_D(state, grads, v, a) - lead, div, atol=1e-8)


def test_drag_equals_Dbar_on_1000_samples():
    rng = np.random.default_rng(2024)
    table = QbarTable()
    worst = 0.0
    for _ in range(1000):
        state, grads, v, a = _random_inputs(rng)
        D = drag_force_D(state, grads, v, a, qbar=table)
        Db = viscous_tensor_Dbar(state, grads, v, a, qbar=table) @ (v - state.u)
        worst = max(worst, np.abs(D - Db).max() / max(1e-300, np.abs(D).max()))
    assert worst < 1e-10


def test_drag_batch_matches_scalar():
    rng = np.random.default_rng(5)
    table = QbarTable()
    rows = [_random_inputs(rng) for _ in range(20)]
    a = 0.1
    out = drag_force_batch(
        np.array([r[0].alpha_n for r in rows]),
        np.array([r[0].u for r in rows]),
        np.array([r[0].theta_over_m for r in rows]),
        np.array([r[1].grad_alpha_n for r in rows]),
        np.array([r[1].grad_u for r in rows]),
        np.array([r[2] for r in rows]),
        a,
        table,
    )
    for k, (s, g, v, _) in enumerate(rows):
        assert np.allclose(out[k], drag_force_D(s, g, v, a, qbar=table), rtol=1e-12, atol=1e-14)


def test_Dbar_comoving_with_density_gradient():
    s = LocalGasState(0.9, np.array([1.0, 0, 0]), 1.0)
    g = GasGradients(grad_alpha_n=np.array([0.3, -0.2, 0.5]))
    a = 0.2
    Db = viscous_tensor_Dbar(s, g, s.u, a)
    assert np.allclose(Db, math.pi * a**2 * 0.9 * QBAR_ZERO * np.eye(3), rtol=1e-10)
    assert np.abs(Db @ (s.u - s.u)).max() == 0


def test_degenerate_states():
    s = LocalGasState(0.0, np.zeros(3), 1.0)
    assert np.abs(drag_force_D(s, GasGradients(), np.ones(3), 0.1)).max() == 0
    with pytest.raises(ValueError):
        LocalGasState(1.0, np.zeros(3), 0.0)
    tiny = LocalGasState(1.0, np.zeros(3), 1e-12)
    assert tiny.floored and np.all(np.isfinite(drag_force_D(tiny, GasGradients(), np.ones(3), 0.1)))


@pytest.mark.parametrize("m,s", [(0.0, 1.0), (1.3, 0.4), (-0.7, 2.0), (3.0, 0.1)])
def test_halfspace_moments(m, s):
    from scipy.integrate import quad

    from thickspray.kernels import halfspace_g1, halfspace_g2

    pdf = stats.norm(m, s).pdf
    g1 = quad(lambda z: z * pdf(z), 0, m + 12 * s)[0] if m + 12 * s > 0 else 0.0
    g2 = quad(lambda z: z * z * pdf(z), 0, m + 12 * s)[0] if m + 12 * s > 0 else 0.0
    assert halfspace_g1(m, s) == pytest.approx(g1, rel=1e-9, abs=1e-14)
    assert halfspace_g2(m, s) == pytest.approx(g2, rel=1e-9, abs=1e-14)
    h = 1e-5
    dg2 = (halfspace_g2(m + h, s) - halfspace_g2(m - h, s)) / (2 * h)
    assert dg2 == pytest.approx(2 * halfspace_g1(m, s), rel=1e-7)


def test_halfspace_g2_against_maxwellian_quadrature():
    from thickspray.kernels import halfspace_g2

    s = LocalGasState(1.4, np.array([0.2, -0.5, 0.3]), 0.6)
    v = np.array([1.0, 0.4, -0.2])
    sig = np.array([0.6, 0.0, 0.8])
    y, w = gauss_hermite_3d(40)
    k = (v - (s.u + math.sqrt(0.6) * y)) @ sig
    ref = s.alpha_n * w @ (k**2 * (k > 0))
    assert s.alpha_n * halfspace_g2((v - s.u) @ sig, math.sqrt(0.6)) == pytest.approx(ref, rel=1e-4)

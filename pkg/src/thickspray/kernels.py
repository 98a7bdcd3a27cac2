"""Analytic objects of the gas-particle drag: Maxwellian, friction kernel q,
the tensor Q, hemisphere integrals K and K_3, ball volumes, the drag force D
and its tensor form D-bar.

Vectors are plain ``(3,)`` numpy arrays.  Gradient tensors follow the
Jacobian convention ``grad_u[i, j] = d u_i / d x_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma, ndtr

from .quadrature import (
    DEFAULT_QUAD,
    QuadratureError,
    QuadratureSpec,
    gauss_hermite_3d,
    gauss_legendre_interval,
    heaviside,
    orthonormal_frame,
    sphere_rule,
)

THERMAL_FLOOR = 1e-8
QBAR_ZERO = 8.0 / 3.0 * math.sqrt(2.0 / math.pi)
_GAUSS_TAIL = 9.5  # exp(-9.5**2 / 2) ~ 2e-20


def as_vec3(x, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must have shape (3,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite components: {v}")
    return v


@dataclass(frozen=True)
class SymTensor2:
    """Symmetric 3x3 tensor stored by its six independent components."""

    xx: float
    yy: float
    zz: float
    xy: float
    xz: float
    yz: float

    def __post_init__(self):
        comps = (self.xx, self.yy, self.zz, self.xy, self.xz, self.yz)
        if not all(math.isfinite(c) for c in comps):
            raise ValueError(f"non-finite tensor component in {comps}")

    @classmethod
    def from_matrix(cls, m, sym_tol: float = 1e-9) -> "SymTensor2":
        m = np.asarray(m, dtype=float)
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.T).max() > sym_tol * scale:
            raise ValueError("matrix is not symmetric")
        m = 0.5 * (m + m.T)
        return cls(m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[0, 2], m[1, 2])

    @classmethod
    def zero(cls) -> "SymTensor2":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.xx, self.xy, self.xz],
                [self.xy, self.yy, self.yz],
                [self.xz, self.yz, self.zz],
            ]
        )

    def trace(self) -> float:
        return self.xx + self.yy + self.zz

    def __add__(self, other: "SymTensor2") -> "SymTensor2":
        return SymTensor2.from_matrix(self.matrix() + other.matrix())

    def __mul__(self, c: float) -> "SymTensor2":
        return SymTensor2.from_matrix(c * self.matrix())

    __rmul__ = __mul__

    def __matmul__(self, v):
        return self.matrix() @ np.asarray(v, dtype=float)


@dataclass(frozen=True)
class LocalGasState:
    """Parameters of the local Maxwellian mu[alpha_n, u, theta/m_g]."""

    alpha_n: float
    u: np.ndarray
    theta_over_m: float

    def __post_init__(self):
        object.__setattr__(self, "u", as_vec3(self.u, "u"))
        if not (math.isfinite(self.alpha_n) and self.alpha_n >= 0):
            raise ValueError(f"alpha_n must be finite and >= 0, got {self.alpha_n}")
        if not (math.isfinite(self.theta_over_m) and self.theta_over_m > 0):
            raise ValueError(f"theta_over_m must be finite and > 0, got {self.theta_over_m}")

    @property
    def thermal_speed(self) -> float:
        return math.sqrt(max(self.theta_over_m, THERMAL_FLOOR))

    @property
    def floored(self) -> bool:
        """True when the thermal-speed floor is active for this state."""
        return self.theta_over_m < THERMAL_FLOOR


@dataclass(frozen=True)
class GasGradients:
    """Spatial derivatives of the gas state at one point.

    ``grad_u[i, j]`` is d u_i / d x_j.  ``div_u`` defaults to the trace.
    """

    grad_alpha_n: np.ndarray = field(default_factory=lambda: np.zeros(3))
    grad_u: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    div_u: float | None = None
    grad_p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    grad_alpha: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "grad_alpha_n", as_vec3(self.grad_alpha_n, "grad_alpha_n"))
        object.__setattr__(self, "grad_p", as_vec3(self.grad_p, "grad_p"))
        object.__setattr__(self, "grad_alpha", as_vec3(self.grad_alpha, "grad_alpha"))
        gu = np.asarray(self.grad_u, dtype=float)
        if gu.shape != (3, 3) or not np.all(np.isfinite(gu)):
            raise ValueError("grad_u must be a finite 3x3 array")
        object.__setattr__(self, "grad_u", gu)
        tr = float(np.trace(gu))
        if self.div_u is None:
            object.__setattr__(self, "div_u", tr)
        elif abs(self.div_u - tr) > 1e-12 * max(1.0, abs(tr)):
            raise ValueError(f"div_u={self.div_u} disagrees with trace(grad_u)={tr}")


# --------------------------------------------------------------------------
# Maxwellian and its moments


def maxwellian_eval(state: LocalGasState, w) -> float | np.ndarray:
    """Evaluate mu at velocity ``w`` (shape (3,) or (m, 3))."""
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("non-finite velocity")
    T = max(state.theta_over_m, THERMAL_FLOOR)
    d2 = np.sum((w - state.u) ** 2, axis=-1)
    return state.alpha_n / (2.0 * np.pi * T) ** 1.5 * np.exp(-0.5 * d2 / T)


def moment2_identity(state: LocalGasState, v) -> SymTensor2:
    """int (v - w)(v - w)^T mu(w) dw = alpha_n [(v-u)(v-u)^T + theta/m Id]."""
    r = as_vec3(v, "v") - state.u
    m = state.alpha_n * (np.outer(r, r) + state.theta_over_m * np.eye(3))
    return SymTensor2.from_matrix(m)


# --------------------------------------------------------------------------
# Friction kernel q


def _check_refinement(coarse, fine, tol: float, what: str):
    scale = max(1.0, float(np.max(np.abs(fine))))
    err = float(np.max(np.abs(np.asarray(fine) - np.asarray(coarse))))
    if err > tol * scale:
        raise QuadratureError(f"{what}: refinement disagreement {err:.3e} > {tol:.1e}")


def _q_kernel_3d(xi: np.ndarray, n_r: int, n_tau: int, n_phi: int) -> np.ndarray:
    # Z = xi - y ~ N(xi, I); spherical coordinates for Z with pole on xi-hat,
    # tau = 1 - cos(theta) so the exp(-r s tau) factor is resolved on [0, tau_max].
    s = float(np.linalg.norm(xi))
    frame = np.eye(3) if s == 0.0 else orthonormal_frame(xi)
    r, wr = gauss_legendre_interval(n_r, max(0.0, s - _GAUSS_TAIL), s + _GAUSS_TAIL)
    phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
    wphi = 2.0 * np.pi / n_phi
    total = np.zeros(3)
    for ri, wri in zip(r, wr):
        rs = ri * s
        tau_max = 2.0 if rs <= 20.0 else 40.0 / rs
        tau, wtau = gauss_legendre_interval(n_tau, 0.0, tau_max)
        ct = 1.0 - tau
        st = np.sqrt(np.clip(tau * (2.0 - tau), 0.0, None))
        radial = ri**4 * np.exp(-0.5 * (ri - s) ** 2 - rs * tau)
        ex = np.sum(wtau * radial * st) * np.sum(np.cos(phi)) * wphi
        ey = np.sum(wtau * radial * st) * np.sum(np.sin(phi)) * wphi
        ez = np.sum(wtau * radial * ct) * 2.0 * np.pi
        total += wri * np.array([ex, ey, ez])
    local = total / (2.0 * np.pi) ** 1.5
    return local @ frame


def q_kernel(xi, quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """q(xi) = (2 pi)^{-3/2} int (xi - y)|xi - y| exp(-|y|^2/2) dy by 3D quadrature."""
    xi = as_vec3(xi, "xi")
    n = max(quad.radial_order, 24)
    coarse = _q_kernel_3d(xi, n, 48, quad.n_phi)
    fine = _q_kernel_3d(xi, 2 * n, 64, quad.n_phi)
    _check_refinement(coarse, fine, max(quad.tolerance, 1e-12), "q_kernel")
    return fine


def _qbar_radial(s: float, n: int) -> float:
    r, w = gauss_legendre_interval(n, max(0.0, s - _GAUSS_TAIL), s + _GAUSS_TAIL)
    b = r * s
    small = b < 0.1
    h = np.empty_like(r)
    # b cosh b - sinh b written with shifted exponentials to avoid overflow
    bs, rs_ = b[small], r[small]
    h[small] = (
        2.0
        * rs_
        * np.exp(-0.5 * (rs_**2 + s**2))
        * (1.0 / 3.0 + bs**2 / 30.0 + bs**4 / 840.0 + bs**6 / 45360.0)
    )
    bl, rl = b[~small], r[~small]
    h[~small] = ((bl - 1.0) * np.exp(-0.5 * (rl - s) ** 2) + (bl + 1.0) * np.exp(-0.5 * (rl + s) ** 2)) / (
        bl**2 * s
    )
    return float(np.sum(w * r**4 * h) / math.sqrt(2.0 * math.pi))


def qbar_profile(s: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Radial profile with q(xi) = qbar(|xi|) xi, from a 1D radial integral."""
    s = float(s)
    if not (math.isfinite(s) and s >= 0):
        raise ValueError(f"s must be finite and >= 0, got {s}")
    n = max(quad.radial_order, 32)
    coarse = _qbar_radial(s, n)
    fine = _qbar_radial(s, 2 * n)
    _check_refinement(coarse, fine, max(quad.tolerance, 1e-13), "qbar_profile")
    return fine


class QbarTable:
    """Cubic-spline table of qbar on [0, s_max], refined until the midpoint
    interpolation error is below ``target``.  Immutable once built."""

    def __init__(self, s_max: float = 40.0, target: float = 1e-8, quad: QuadratureSpec = DEFAULT_QUAD):
        self.s_max = s_max
        self.quad = quad
        n = 100
        while True:
            grid = np.linspace(0.0, s_max, n + 1)
            vals = np.array([qbar_profile(s, quad) for s in grid])
            spline = CubicSpline(grid, vals, bc_type=((1, 0.0), "not-a-knot"))
            mids = 0.5 * (grid[1:] + grid[:-1])
            probe = mids[:: max(1, n // 50)]
            err = max(abs(spline(m) - qbar_profile(m, quad)) for m in probe)
            if err < target or n >= 6400:
                break
            n *= 2
        self.grid = grid
        self.max_error = float(err)
        self._spline = spline

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.asarray(self._spline(np.minimum(s, self.s_max)), dtype=float)
        big = s > self.s_max
        if np.any(big):
            out = np.array(out, copy=True)
            flat_s, flat_o = s.reshape(-1), out.reshape(-1)
            for i in np.flatnonzero(big.reshape(-1)):
                flat_o[i] = qbar_profile(flat_s[i], self.quad)
            out = flat_o.reshape(s.shape)
        return out


_TABLE: QbarTable | None = None


def default_qbar_table() -> QbarTable:
    global _TABLE
    if _TABLE is None:
        _TABLE = QbarTable()
    return _TABLE


# --------------------------------------------------------------------------
# Q tensor, hemisphere integrals, ball volume


def Q_tensor(xi, a: float) -> SymTensor2:
    """Q(xi) = (4 pi / 15) a^3 [2 xi xi^T + |xi|^2 Id]."""
    xi = as_vec3(xi, "xi")
    if not (math.isfinite(a) and a >= 0):
        raise ValueError(f"a must be >= 0, got {a}")
    c = 4.0 * math.pi / 15.0 * a**3
    return SymTensor2.from_matrix(c * (2.0 * np.outer(xi, xi) + xi @ xi * np.eye(3)))


def _hemisphere_nodes(xi, quad: QuadratureSpec):
    axis = xi if np.linalg.norm(xi) > 0 else None
    nodes, weights = sphere_rule(quad, axis=axis)
    proj = nodes @ xi
    return nodes, weights, proj


def _refined(fn, xi, quad: QuadratureSpec, what: str):
    # product grids are checked against a grid of doubled resolution
    val = fn(xi, quad)
    if quad.sphere_rule == "product":
        fine = replace(quad, n_theta=2 * quad.n_theta, n_phi=2 * quad.n_phi)
        ref = fn(xi, fine)
        _check_refinement(val, ref, max(quad.tolerance, 1e-12), what)
    return val


def _K_raw(xi, quad):
    nodes, weights, proj = _hemisphere_nodes(xi, quad)
    return (weights * proj**2 * heaviside(proj)) @ nodes


def _K4_raw(xi, quad):
    nodes, weights, proj = _hemisphere_nodes(xi, quad)
    return np.einsum("k,ki,kj->ij", weights * proj**2 * heaviside(proj), nodes, nodes)


def K_integral(xi, quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """int_{S^2} (w.xi)^2 w H(w.xi) dw by sphere quadrature; equals (pi/2)|xi| xi."""
    return _refined(_K_raw, as_vec3(xi, "xi"), quad, "K_integral")


def K4_integral(xi, quad: QuadratureSpec = DEFAULT_QUAD) -> SymTensor2:
    """int_{S^2} w w^T (w.xi)^2 H(w.xi) dw; equals (2 pi/15)(|xi|^2 Id + 2 xi xi^T)."""
    return SymTensor2.from_matrix(_refined(_K4_raw, as_vec3(xi, "xi"), quad, "K4_integral"))


def K_closed(xi) -> np.ndarray:
    xi = as_vec3(xi, "xi")
    return 0.5 * math.pi * np.linalg.norm(xi) * xi


def K4_closed(xi) -> SymTensor2:
    xi = as_vec3(xi, "xi")
    return SymTensor2.from_matrix(2.0 * math.pi / 15.0 * (xi @ xi * np.eye(3) + 2.0 * np.outer(xi, xi)))


def sphere_area(d: int) -> float:
    """Surface measure of S^{d-1}."""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


def ball_coefficient(d: int, a: float) -> float:
    """|S^{d-1}| / d * a^d, the volume of the d-ball of radius a."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d}")
    if a < 0:
        raise ValueError("a must be >= 0")
    return sphere_area(int(d)) / d * a**d


# --------------------------------------------------------------------------
# Drag force


def _dQ_dr(r: np.ndarray, c: float) -> np.ndarray:
    """Derivative tensor dQ_ij / dr_k of Q(r) = c[2 r r^T + |r|^2 Id]."""
    eye = np.eye(3)
    return c * (
        2.0 * (np.einsum("ik,j->ijk", eye, r) + np.einsum("i,jk->ijk", r, eye)) + 2.0 * np.einsum("ij,k->ijk", eye, r)
    )


def _q_force(state: LocalGasState, v: np.ndarray, a: float, qbar) -> np.ndarray:
    T = max(state.theta_over_m, THERMAL_FLOOR)
    r = v - state.u
    s = float(np.linalg.norm(r)) / math.sqrt(T)
    # pi a^2 (alpha n) (theta/m) q(r / sqrt(theta/m)) with q(xi) = qbar(|xi|) xi
    return math.pi * a**2 * state.alpha_n * math.sqrt(T) * float(qbar(s)) * r


def drag_force_D(
    state: LocalGasState,
    grads: GasGradients,
    v,
    a: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
    qbar=None,
) -> np.ndarray:
    """D = pi a^2 alpha_n (theta/m) q((v-u)/sqrt(theta/m)) + div_x[alpha_n Q(v-u)].

    The divergence is taken with ``v`` frozen; x-derivatives reach alpha_n and
    u through the chain rule dQ/dr . dr/dx.
    """
    v = as_vec3(v, "v")
    if qbar is None:
        qbar = lambda s: qbar_profile(s, quad)  # noqa: E731
    r = v - state.u
    c = 4.0 * math.pi / 15.0 * a**3
    Qr = c * (2.0 * np.outer(r, r) + r @ r * np.eye(3))
    dr_dx = -grads.grad_u  # d r_k / d x_j
    dQ_dx = np.einsum("ijk,kl->ijl", _dQ_dr(r, c), dr_dx)
    div_term = Qr @ grads.grad_alpha_n + state.alpha_n * np.einsum("ijj->i", dQ_dx)
    return _q_force(state, v, a, qbar) + div_term


def viscous_tensor_Dbar(
    state: LocalGasState,
    grads: GasGradients,
    v,
    a: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
    qbar=None,
) -> np.ndarray:
    """General 3x3 tensor with drag_force_D == Dbar @ (v - u).

    Dbar = pi a^2 alpha_n sqrt(theta/m) qbar(|v-u|/sqrt(theta/m)) Id
         + (4 pi/15) a^3 [2 (g.r) Id + g r^T]
         - (8 pi/15) a^3 alpha_n [div u Id + grad_u + grad_u^T],
    with g = grad(alpha_n), r = v - u.
    """
    v = as_vec3(v, "v")
    if qbar is None:
        qbar = lambda s: qbar_profile(s, quad)  # noqa: E731
    T = max(state.theta_over_m, THERMAL_FLOOR)
    r = v - state.u
    g = grads.grad_alpha_n
    J = grads.grad_u
    eye = np.eye(3)
    s = float(np.linalg.norm(r)) / math.sqrt(T)
    lead = math.pi * a**2 * state.alpha_n * math.sqrt(T) * float(qbar(s)) * eye
    deflect = 4.0 * math.pi / 15.0 * a**3 * (2.0 * (g @ r) * eye + np.outer(g, r))
    strain = 8.0 * math.pi / 15.0 * a**3 * state.alpha_n * (grads.div_u * eye + J + J.T)
    return lead + deflect - strain


def drag_force_batch(alpha_n, u, theta_over_m, grad_alpha_n, grad_u, v, a: float, qbar) -> np.ndarray:
    """Vectorised drag over m particles.

    Shapes: alpha_n (m,), u (m, 3), theta_over_m (m,), grad_alpha_n (m, 3),
    grad_u (m, 3, 3), v (m, 3).  Same algebra as ``viscous_tensor_Dbar``.
    """
    T = np.maximum(theta_over_m, THERMAL_FLOOR)
    sq = np.sqrt(T)
    r = v - u
    rn = np.linalg.norm(r, axis=1)
    lead = (np.pi * a**2 * alpha_n * sq * qbar(rn / sq))[:, None] * r
    g = grad_alpha_n
    gr = np.einsum("mi,mi->m", g, r)
    deflect = 4.0 * np.pi / 15.0 * a**3 * (2.0 * gr[:, None] * r + g * (rn**2)[:, None])
    divu = np.einsum("mii->m", grad_u)
    strain_r = divu[:, None] * r + np.einsum("mij,mj->mi", grad_u, r) + np.einsum("mji,mj->mi", grad_u, r)
    strain = 8.0 * np.pi / 15.0 * a**3 * alpha_n[:, None] * strain_r
    return lead + deflect - strain


def Q_batch(r: np.ndarray, a: float) -> np.ndarray:
    """Q(r) for an (m, 3) array of relative velocities; returns (m, 3, 3)."""
    c = 4.0 * np.pi / 15.0 * a**3
    rr = np.einsum("mi,mj->mij", r, r)
    return c * (2.0 * rr + np.einsum("mi,mi->m", r, r)[:, None, None] * np.eye(3))


def maxwellian_moments_quadrature(state: LocalGasState, order: int = 24):
    """Zeroth, first and second moments of mu by Gauss-Hermite quadrature."""
    nodes, weights = gauss_hermite_3d(order)
    w = state.u + state.thermal_speed * nodes
    m0 = state.alpha_n * weights.sum()
    m1 = state.alpha_n * weights @ w
    m2 = state.alpha_n * np.einsum("k,ki,kj->ij", weights, w, w)
    return m0, m1, m2


# --------------------------------------------------------------------------
# Half-space Gaussian moments: z ~ N(m, s^2)


def halfspace_g1(m, s):
    """E[z H(z)] = m Phi(m/s) + s phi(m/s)."""
    m = np.asarray(m, dtype=float)
    t = m / s
    return m * ndtr(t) + s * np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)


def halfspace_g2(m, s):
    """E[z^2 H(z)] = (m^2 + s^2) Phi(m/s) + m s phi(m/s).

    Integrating ((v - w).s)^2 H against a Maxwellian in w gives
    alpha_n * halfspace_g2((v - u).s, sqrt(theta/m)).
    """
    m = np.asarray(m, dtype=float)
    t = m / s
    return (m * m + s * s) * ndtr(t) + m * s * np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)

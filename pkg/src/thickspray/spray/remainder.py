"""Remainder terms P, Q, R of the macroscopic thick-spray system.

Positions are 1D and periodic, so every Taylor defect in x uses the offset
a * sigma_1 while sigma ranges over S^2.  Integrals over the gas velocity w
are done in closed form with the half-space Gaussian moments

    int mu[alpha n, u, T](w) k^2 H(k) dw = alpha n g2((v - u).s, sqrt(T)),
    int mu[alpha n, u, T](w) k   H(k) dw = alpha n g1((v - u).s, sqrt(T)),

with k = (v - w).s and T = theta / m_g.  Sphere integrals use a product grid
with its pole on e_1 (Gauss-Legendre in sigma_1, trapezoid in azimuth), so
all nodes sharing sigma_1 share one shifted position.

Forms evaluated (TD_F = F(x - a s_1) - F(x) + a s_1 dF/dx):

    R = 2 a^2 m_g alpha n int s TD_F[A] ds       - (1 - alpha) p d_x alpha e_1
    P = 2 a^2 m_g alpha n int   TD_F[B] ds       + (1 - alpha) p d_t alpha
    A(y; s) = int F(y, v) g2((v - u(x)).s) dv,   B = same with weight v.s

    Q(x, v) = grad_v F . (G + V2) + F div_v G
    G  = 2 a^2 int s TD_mu[alpha n g2((v - u(.)).s, sqrt(T(.)))] ds
    div_v G = 2 a^2 int TD_mu[2 alpha n g1(...)] ds
    TD_mu[M] = M(x + a s_1) - M(x) - a s_1 dM/dx
    V2 = (4 pi / (3 m_g)) a^3 [p d_x alpha - (1 - alpha) d_x p] e_1

The particle weak form uses -int F grad phi . (D + (4 pi / 3)(a^3 / m_g) grad p
+ G + V2) dv, which is what ``weak_rhs`` assembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ..collision.densities import KDEField, Sinusoid, VecProfile, silverman_bandwidth
from ..kernels import default_qbar_table, drag_force_batch, halfspace_g1, halfspace_g2
from ..quadrature import QuadratureError, QuadratureSpec, gauss_legendre
from .state import VOLUME_COEF, GasField, ParticlePhase, RemainderReport

REMAINDER_QUAD = QuadratureSpec(n_theta=16, n_phi=32)
STENCIL_H = 1e-3
MIN_VELOCITY_BANDWIDTH = 0.05
# absolute slack of the refinement check; roundoff in Q is amplified by grad_v F
REFINE_ATOL = 1e-10


def sigma_grid(n_t: int, n_phi: int):
    """Nodes (n_t, n_phi, 3) and weights (n_t, n_phi) on S^2, pole on e_1."""
    t, wt = gauss_legendre(n_t)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1 - t**2)
    sig = np.stack(
        [np.repeat(t[:, None], n_phi, 1), st[:, None] * np.cos(phi), st[:, None] * np.sin(phi)],
        axis=-1,
    )
    return sig, np.outer(wt, np.full(n_phi, 2 * np.pi / n_phi))


def stencil_derivative(fn, x: float, h: float = STENCIL_H):
    """Fourth-order central difference of a (possibly array-valued) function."""
    return (-fn(x + 2 * h) + 8 * fn(x + h) - 8 * fn(x - h) + fn(x - 2 * h)) / (12 * h)


# ---------------------------------------------------------------------------
# gas profiles


@dataclass(frozen=True)
class AnalyticGas:
    """Smooth gas profiles: alpha n (Maxwellian density), u, T = theta / m_g."""

    alpha_n: Sinusoid
    u: VecProfile
    T: Sinusoid
    m_g: float = 1.0


class SplineGas:
    """Periodic cubic-spline reconstruction of cell-averaged gas fields."""

    def __init__(self, gas: GasField):
        xc = gas.centers
        self.x0 = xc[0]
        xs = np.append(xc, xc[0] + 1.0)

        def spline(vals):
            vals = np.asarray(vals, dtype=float)
            return CubicSpline(xs, np.concatenate([vals, vals[:1]], axis=0), bc_type="periodic", axis=0)

        self._an = spline(gas.alpha_n)
        self._u = spline(gas.u)
        self._T = spline(gas.T)
        self.m_g = gas.m_g

    def _y(self, y):
        return self.x0 + (np.asarray(y, dtype=float) - self.x0) % 1.0

    def alpha_n(self, y):
        return self._an(self._y(y))

    def u(self, y):
        return self._u(self._y(y))

    def T(self, y):
        return self._T(self._y(y))


# ---------------------------------------------------------------------------
# evaluator


class RemainderEvaluator:
    """Evaluates P, R (per x), Q (per x, v) and the particle weak-form RHS.

    ``F`` follows the density interface of ``collision.densities``; the
    volume fraction is alpha = 1 - (4 pi / 3) a^3 int F dv, and the gas
    pressure p = n theta with n = (alpha n) / alpha.
    """

    def __init__(self, F, gas, a: float, quad: QuadratureSpec | None = None, h: float = STENCIL_H):
        self.F, self.gas, self.a = F, gas, float(a)
        self.quad = quad or REMAINDER_QUAD
        self.h = h
        self.m_g = gas.m_g
        self.sig, self.wsig = sigma_grid(self.quad.n_theta, self.quad.n_phi)

    # -- macroscopic fields --------------------------------------------------
    def alpha(self, y):
        return 1.0 - VOLUME_COEF * self.a**3 * self.F.density(np.atleast_1d(np.asarray(y, dtype=float)))

    def pressure(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return self.gas.alpha_n(y) / self.alpha(y) * self.m_g * self.gas.T(y)

    def _d(self, fn, x):
        return float(np.asarray(stencil_derivative(fn, float(x), self.h)).reshape(-1)[0])

    def _flux1(self, y):
        nodes, w = self.F.quad_v(float(y))
        return float(w @ nodes[:, 0])

    def dt_alpha(self, x):
        """d_t alpha = (4 pi / 3) a^3 d_x int v_1 F dv (particle number conservation)."""
        return VOLUME_COEF * self.a**3 * self._d(self._flux1, x)

    # -- P and R -------------------------------------------------------------
    def _AB(self, y, sig, u0, s0, cache=None):
        if cache is not None:
            G2, G2v = cache
            w = self.F.quad_v(float(y))[1]
            return w @ G2, w @ G2v
        nodes, w = self.F.quad_v(float(y))
        g2 = halfspace_g2((nodes - u0) @ sig.T, s0)
        return w @ g2, w @ (g2 * (nodes @ sig.T))

    def P_R(self, x: float, sig=None, wsig=None):
        sig = self.sig if sig is None else sig
        wsig = self.wsig if wsig is None else wsig
        a, x = self.a, float(x)
        X = np.array([x])
        an0, u0, s0 = float(self.gas.alpha_n(X)[0]), self.gas.u(X)[0], math.sqrt(float(self.gas.T(X)[0]))
        flat = sig.reshape(-1, 3)
        cache = None
        if getattr(self.F, "fixed_nodes", False):
            nodes = self.F.quad_v(x)[0]
            g2 = halfspace_g2((nodes - u0) @ flat.T, s0)
            cache = (g2, g2 * (nodes @ flat.T))

        def AB(y):
            A, B = self._AB(y, flat, u0, s0, cache)
            return np.concatenate([A, B])

        base = AB(x)
        dbase = stencil_derivative(AB, x, self.h)
        S = flat.shape[0]
        nt, nphi = sig.shape[:2]
        shifted = np.empty(2 * S)
        for i in range(nt):
            t = sig[i, 0, 0]
            sl = slice(i * nphi, (i + 1) * nphi)
            if cache is not None:
                w = self.F.quad_v(x - a * t)[1]
                shifted[sl] = w @ cache[0][:, sl]
                shifted[S + i * nphi : S + (i + 1) * nphi] = w @ cache[1][:, sl]
            else:
                A, B = self._AB(x - a * t, flat[sl], u0, s0)
                shifted[sl] = A
                shifted[S + i * nphi : S + (i + 1) * nphi] = B
        s1 = np.tile(flat[:, 0], 2)
        td = shifted - base + a * s1 * dbase
        wf = wsig.reshape(-1)
        c = 2 * a**2 * self.m_g * an0
        R1 = c * (wf * td[:S]) @ flat
        P1 = c * float(wf @ td[S:])
        alpha0 = float(self.alpha(X)[0])
        p0 = float(self.pressure(X)[0])
        dxa = self._d(self.alpha, x)
        R2 = np.array([-(1 - alpha0) * p0 * dxa, 0.0, 0.0])
        P2 = (1 - alpha0) * p0 * self.dt_alpha(x)
        return {"P": P1 + P2, "R": R1 + R2, "P1": P1, "P2": P2, "R1": R1, "R2": R2}

    # -- Q and G -------------------------------------------------------------
    def G_divG(self, x: float, V: np.ndarray, sig=None, wsig=None):
        """G(x, v) (L, 3) and div_v G (L,) for an (L, 3) array of velocities."""
        sig = self.sig if sig is None else sig
        wsig = self.wsig if wsig is None else wsig
        a, x = self.a, float(x)
        V = np.atleast_2d(V)
        flat = sig.reshape(-1, 3)
        nt, nphi = sig.shape[:2]
        S = flat.shape[0]

        def MN(y, sl=slice(None)):
            Y = np.array([y])
            an, u, s = float(self.gas.alpha_n(Y)[0]), self.gas.u(Y)[0], math.sqrt(float(self.gas.T(Y)[0]))
            m = (V - u) @ flat[sl].T
            return np.concatenate([an * halfspace_g2(m, s), 2 * an * halfspace_g1(m, s)], axis=1)

        base = MN(x)
        dbase = stencil_derivative(MN, x, self.h)
        shifted = np.empty_like(base)
        for i in range(nt):
            sl = slice(i * nphi, (i + 1) * nphi)
            out = MN(x + a * sig[i, 0, 0], sl)
            shifted[:, sl] = out[:, :nphi]
            shifted[:, S + i * nphi : S + (i + 1) * nphi] = out[:, nphi:]
        s1 = np.tile(flat[:, 0], 2)
        td = shifted - base - a * s1 * dbase
        wf = wsig.reshape(-1)
        G = 2 * a**2 * (td[:, :S] * wf) @ flat
        divG = 2 * a**2 * td[:, S:] @ wf
        return G, divG

    def V2(self, x: float) -> np.ndarray:
        X = np.array([float(x)])
        alpha0, p0 = float(self.alpha(X)[0]), float(self.pressure(X)[0])
        val = VOLUME_COEF * self.a**3 / self.m_g * (p0 * self._d(self.alpha, x) - (1 - alpha0) * self._d(self.pressure, x))
        return np.array([val, 0.0, 0.0])

    def Q(self, x: float, V: np.ndarray, sig=None, wsig=None) -> np.ndarray:
        V = np.atleast_2d(V)
        G, divG = self.G_divG(x, V, sig, wsig)
        X = np.full(len(V), float(x))
        gradF = self.F.grad_v(X, V)
        return np.einsum("li,li->l", gradF, G + self.V2(x)) + self.F.value(X, V) * divG

    # -- weak form of the particle equation ----------------------------------
    def drag(self, x: float, V: np.ndarray, qbar=None) -> np.ndarray:
        X = np.array([float(x)])
        L = len(V)
        an = np.full(L, float(self.gas.alpha_n(X)[0]))
        u = np.repeat(self.gas.u(X), L, axis=0)
        T = np.full(L, float(self.gas.T(X)[0]))
        gan = np.zeros((L, 3))
        gan[:, 0] = self._d(self.gas.alpha_n, x)
        gu = np.zeros((L, 3, 3))
        gu[:, :, 0] = np.asarray(stencil_derivative(lambda y: self.gas.u(np.array([y]))[0], float(x), self.h))
        return drag_force_batch(an, u, T, gan, gu, V, self.a, qbar or default_qbar_table())

    def weak_rhs(self, x: float, grad_phi) -> dict:
        """Terms of -int F grad phi . (D + press + G + V2) dv at x; grad_phi maps (K, 3) -> (K, 3)."""
        nodes, w = self.F.quad_v(float(x))
        gp = grad_phi(nodes)
        D = self.drag(x, nodes)
        press = np.array([VOLUME_COEF * self.a**3 / self.m_g * self._d(self.pressure, x), 0.0, 0.0])
        G, _ = self.G_divG(x, nodes)
        V2 = self.V2(x)
        terms = {
            "drag": -float(w @ np.einsum("ki,ki->k", gp, D)),
            "pressure": -float(w @ (gp @ press)),
            "G": -float(w @ np.einsum("ki,ki->k", gp, G)),
            "V2": -float(w @ (gp @ V2)),
        }
        terms["total"] = sum(terms.values())
        return terms

    # -- norms ---------------------------------------------------------------
    def velocity_lattice(self, x: float, half_width: int = 2) -> np.ndarray:
        """c + s {-2, ..., 2}^3 with c, s the local mean and rms spread of F(x, .)."""
        nodes, w = self.F.quad_v(float(x))
        W = w.sum()
        if W <= 0:
            return np.zeros((1, 3))
        c = w @ nodes / W
        var = float(w @ np.sum((nodes - c) ** 2, axis=1)) / (3 * W) + getattr(self.F, "hv", 0.0) ** 2
        k = np.arange(-half_width, half_width + 1, dtype=float)
        grid = np.stack(np.meshgrid(k, k, k, indexing="ij"), axis=-1).reshape(-1, 3)
        return c + math.sqrt(max(var, 1e-30)) * grid

    def report(self, x_probe, rtol: float = 1e-3, check: bool = True) -> RemainderReport:
        xs = np.asarray(x_probe, dtype=float)
        pr = [self.P_R(x) for x in xs]
        P = np.array([abs(d["P"]) for d in pr])
        R = np.array([np.linalg.norm(d["R"]) for d in pr])
        Qmax, Qarg = 0.0, (xs[0], None)
        for x in xs:
            V = self.velocity_lattice(x)
            q = np.abs(self.Q(x, V))
            j = int(np.argmax(q))
            if q[j] >= Qmax:
                Qmax, Qarg = float(q[j]), (x, V[j : j + 1])
        if check:
            self._check_refined(xs, P, R, Qmax, Qarg, rtol)
        return RemainderReport(
            float(P.max()),
            Qmax,
            float(R.max()),
            self.a,
            {"x": xs.tolist(), "P": P.tolist(), "R": R.tolist(), "Q_argmax_x": float(Qarg[0])},
        )

    def _check_refined(self, xs, P, R, Qmax, Qarg, rtol):
        sig2, w2 = sigma_grid(2 * self.quad.n_theta, 2 * self.quad.n_phi)
        floor = 1e-300
        iP, iR = int(np.argmax(P)), int(np.argmax(R))
        checks = [
            ("P", P[iP], abs(self.P_R(xs[iP], sig2, w2)["P"])),
            ("R", R[iR], np.linalg.norm(self.P_R(xs[iR], sig2, w2)["R"])),
        ]
        if Qarg[1] is not None:
            checks.append(("Q", Qmax, abs(float(self.Q(Qarg[0], Qarg[1], sig2, w2)[0]))))
        for name, coarse, fine in checks:
            if abs(coarse - fine) > rtol * max(abs(fine), floor) + REFINE_ATOL:
                raise QuadratureError(f"{name} remainder not converged under sphere refinement: {coarse:.6e} vs {fine:.6e}")


def kde_from_phase(phase: ParticlePhase, cells: int, bandwidth: float | None = None) -> KDEField:
    """Gaussian KDE in x (bandwidth 2 dx by default) with exact particle sums in v.

    The v-bandwidth (used only for pointwise values of F in Q) is Silverman's
    rule floored at MIN_VELOCITY_BANDWIDTH so that cold phases stay finite.
    """
    hx = min(2.0 / cells if bandwidth is None else bandwidth, 0.25)
    hv = max(silverman_bandwidth(phase.v, phase.w), MIN_VELOCITY_BANDWIDTH)
    return KDEField(phase.x, phase.v, phase.w, hx, bandwidth_v=hv)


def remainder_diagnostics(gas: GasField, phase: ParticlePhase, quad: QuadratureSpec | None = None, check: bool = True) -> RemainderReport:
    """Norms of P, Q, R at the cell centres from a KDE reconstruction of F."""
    if len(phase) == 0 or phase.a == 0:
        return RemainderReport(0.0, 0.0, 0.0, phase.a)
    F = kde_from_phase(phase, gas.cells)
    ev = RemainderEvaluator(F, SplineGas(gas), phase.a, quad if isinstance(quad, QuadratureSpec) else None)
    return ev.report(gas.centers, check=check)

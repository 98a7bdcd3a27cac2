"""Monte Carlo evaluation of the delocalized gas-particle collision integrals.

Positions are one-dimensional and periodic, so a contact offset a*sigma moves
the spatial argument by a*sigma_1 while sigma itself ranges over S^2.
Collision normals are drawn with density (r_hat . s) H(r_hat . s) / pi about
the relative velocity r = v - w, which turns the collision kernel
(v - w) . s H into the constant factor pi |r|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..quadrature import gauss_legendre_interval
from .laws import cosine_weighted_sigma, cross_collision_arrays
from .params import ScalingParams

MIN_SAMPLES = 10_000
CHUNK = 250_000


@dataclass(frozen=True)
class MCEstimate:
    value: float
    se: float
    n: int

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.se


class _Accumulator:
    """Streaming mean / variance (Chan et al. merge) over chunks."""

    def __init__(self):
        self.n, self.mean, self.m2 = 0, 0.0, 0.0

    def add(self, x: np.ndarray):
        nb = x.size
        if nb == 0:
            return
        mb = float(x.mean())
        m2b = float(np.sum((x - mb) ** 2))
        d = mb - self.mean
        tot = self.n + nb
        self.mean += d * nb / tot
        self.m2 += m2b + d * d * self.n * nb / tot
        self.n = tot

    def estimate(self) -> MCEstimate:
        var = self.m2 / max(self.n - 1, 1)
        return MCEstimate(self.mean, math.sqrt(var / self.n), self.n)


def _check_reps(*reps):
    for r in reps:
        for attr in ("value", "density", "sample_v"):
            if not callable(getattr(r, attr, None)):
                raise TypeError(f"density representation {type(r).__name__} lacks {attr}()")


def _chunks(samples: int):
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    left = samples
    while left > 0:
        m = min(CHUNK, left)
        yield m
        left -= m


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(tag,))))


def enskog_E2_apply(F_rep, f_rep, phi, x: float, params: ScalingParams, samples: int, seed: int) -> MCEstimate:
    """Estimate int E_2[F, f](x, v) phi(v) dv (not divided by eta).

    Uses the weak form obtained from the involution (v, w, s) -> (v', w', -s):
        int a^2 f(x + a s, w) F(x, v) (v - w).s H [phi(v') - phi(v)] ds dw dv.
    Draws v ~ F(x, .), w ~ f(x, .), s cosine-weighted; the spatial shift enters
    as the likelihood ratio f(x + a s_1, w) / f(x, w).  Random streams do not
    depend on eta, so calls differing only in eta share their draws.
    """
    _check_reps(F_rep, f_rep)
    a, eta = params.a, params.eta
    rhoF = float(F_rep.density(np.array([x]))[0])
    nf = float(f_rep.density(np.array([x]))[0])
    acc = _Accumulator()
    for i, m in enumerate(_chunks(samples)):
        rng = _rng(seed, i)
        xs = np.full(m, float(x))
        v = F_rep.sample_v(xs, rng)
        w = f_rep.sample_v(xs, rng)
        r = v - w
        sig = cosine_weighted_sigma(r, rng)
        ratio = f_rep.value(xs + a * sig[:, 0], w) / f_rep.value(xs, w)
        vp, _ = cross_collision_arrays(v, w, sig, eta, check=False)
        val = a**2 * rhoF * nf * math.pi * np.linalg.norm(r, axis=1) * ratio * (phi(vp) - phi(v))
        acc.add(val)
    return acc.estimate()


@dataclass(frozen=True)
class IdentityResidual:
    """Paired estimate of LHS - RHS of the summed weak collision identity."""

    residual: MCEstimate
    lhs: MCEstimate
    rhs: MCEstimate
    terms: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return abs(self.residual.value) <= 3.0 * self.residual.se


def _proposal(reps, x):
    means, scales = [], []
    for r in reps:
        means.append(np.asarray(r.mean(np.array([x])))[0])
        if hasattr(r, "temp"):
            scales.append(math.sqrt(float(r.temp(np.array([x]))[0])))
        else:
            scales.append(float(r.hv) + float(np.std(r.v)))
    c = 0.5 * (means[0] + means[1])
    s = 3.0 * max(scales) + 0.5 * float(np.linalg.norm(means[0] - means[1]))
    return c, s


def _gauss_pdf(v, c, s):
    return np.exp(-0.5 * np.sum((v - c) ** 2, axis=1) / s**2) / (2 * np.pi * s**2) ** 1.5


def weak_identity_residual(
    f_rep,
    F_rep,
    phi,
    params: ScalingParams,
    samples: int,
    seed: int,
    x: float = 0.3,
    h: float = 1e-3,
    s_nodes: int = 6,
) -> IdentityResidual:
    """Check eta int E_1 phi dw + int E_2 phi dv + eta d/dx I_1 = RHS at the point x.

    ``phi(x, xi)`` takes x of shape (m,) and xi of shape (m, 3).  The left side
    uses the gain-loss forms of E_1 and E_2 as written (no change of variables);
    I is integrated in s by Gauss-Legendre and differenced centrally in x with
    common draws.  The right side is the combined single integral
        int a^2 f(x + a s, w) F(x, v) k [eta (phi(x + a s, w') - phi(x + a s, w))
                                          + phi(x, v') - phi(x, v)].
    All terms share the same (v, w, s) draws, so the residual is a paired mean.
    """
    _check_reps(F_rep, f_rep)
    a, eta = params.a, params.eta
    c, s = _proposal((f_rep, F_rep), x)
    sn, sw = gauss_legendre_interval(s_nodes, 0.0, a)
    acc = {k: _Accumulator() for k in ("E1", "E2", "divI", "lhs", "rhs", "diff")}
    for i, m in enumerate(_chunks(samples)):
        rng = _rng(seed, 1000 + i)
        v = c + s * rng.standard_normal((m, 3))
        w = c + s * rng.standard_normal((m, 3))
        r = v - w
        sig = cosine_weighted_sigma(r, rng)
        s1 = sig[:, 0]
        J = math.pi * np.linalg.norm(r, axis=1) / (_gauss_pdf(v, c, s) * _gauss_pdf(w, c, s))
        vp, wp = cross_collision_arrays(v, w, sig, eta, check=False)
        X = np.full(m, float(x))
        f, F = f_rep.value, F_rep.value

        E1 = eta * a**2 * (f(X, wp) * F(X + a * s1, vp) - f(X, w) * F(X - a * s1, v)) * phi(X, w) * J
        E2 = a**2 * (f(X - a * s1, wp) * F(X, vp) - f(X + a * s1, w) * F(X, v)) * phi(X, v) * J

        def I1(y):
            tot = np.zeros(m)
            for sj, wj in zip(sn, sw):
                ys = y + sj * s1
                dphi = phi(ys, wp) - phi(ys, w)
                tot += wj * dphi * f(ys, w) * F(y - (a - sj) * s1, v)
            return a**2 * s1 * tot * J

        divI = eta * (I1(X + h) - I1(X - h)) / (2 * h)
        Xa = X + a * s1
        rhs = a**2 * f(Xa, w) * F(X, v) * (eta * (phi(Xa, wp) - phi(Xa, w)) + phi(X, vp) - phi(X, v)) * J
        lhs = E1 + E2 + divI
        for k, val in (("E1", E1), ("E2", E2), ("divI", divI), ("lhs", lhs), ("rhs", rhs), ("diff", lhs - rhs)):
            acc[k].add(val)
    est = {k: a_.estimate() for k, a_ in acc.items()}
    terms = {k: est[k] for k in ("E1", "E2", "divI")}
    return IdentityResidual(est["diff"], est["lhs"], est["rhs"], terms)


def I_term(f_rep, F_rep, phi, params: ScalingParams, samples: int, seed: int, x: float = 0.3, s_nodes: int = 6) -> MCEstimate:
    """First component of the interfacial flux I[f, F; phi] at x.

    Draws v ~ F(x, .), w ~ f(x, .) and carries the spatial shifts as
    likelihood ratios, which keeps the variance low for smooth fields.
    """
    _check_reps(F_rep, f_rep)
    a, eta = params.a, params.eta
    sn, sw = gauss_legendre_interval(s_nodes, 0.0, a)
    X0 = np.array([float(x)])
    mass = float(F_rep.density(X0)[0] * f_rep.density(X0)[0])
    acc = _Accumulator()
    for i, m in enumerate(_chunks(samples)):
        rng = _rng(seed, 5000 + i)
        X = np.full(m, float(x))
        v = F_rep.sample_v(X, rng)
        w = f_rep.sample_v(X, rng)
        r = v - w
        sig = cosine_weighted_sigma(r, rng)
        s1 = sig[:, 0]
        _, wp = cross_collision_arrays(v, w, sig, eta, check=False)
        f0, F0 = f_rep.value(X, w), F_rep.value(X, v)
        tot = np.zeros(m)
        for sj, wj in zip(sn, sw):
            ys = X + sj * s1
            shift = f_rep.value(ys, w) * F_rep.value(X - (a - sj) * s1, v) / (f0 * F0)
            tot += wj * (phi(ys, wp) - phi(ys, w)) * shift
        acc.add(mass * math.pi * np.linalg.norm(r, axis=1) * a**2 * s1 * tot)
    return acc.estimate()

"""Evaluable phase-space densities on the periodic unit interval.

Two families share one interface:

* ``GaussianField``: n(x) N(v; m(x), T(x) Id) with smooth profiles, used
  both for the local gas Maxwellian and for analytic particle densities.
* ``KDEField``: Gaussian kernel density estimate built from weighted samples.

Both expose ``density(x)``, ``value(x, v)``, ``grad_v(x, v)``,
``sample_v(x, rng, m)`` and a quadrature view ``quad_v(x) -> (nodes, weights)``
with ``int g(v) F(x, v) dv ~ sum_k weights[k] g(nodes[k])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..quadrature import gauss_hermite_3d


@dataclass(frozen=True)
class Sinusoid:
    """mean + amp * sin(2 pi k x + phase)."""

    mean: float
    amp: float = 0.0
    k: int = 1
    phase: float = 0.0

    def __call__(self, x):
        return self.mean + self.amp * np.sin(2 * np.pi * self.k * np.asarray(x, dtype=float) + self.phase)

    def deriv(self, x, order: int = 1):
        w = 2 * np.pi * self.k
        arg = w * np.asarray(x, dtype=float) + self.phase
        # d^n/dx^n sin = w^n sin(arg + n pi/2)
        return self.amp * w**order * np.sin(arg + order * np.pi / 2)

    def scaled(self, c: float) -> "Sinusoid":
        return Sinusoid(c * self.mean, c * self.amp, self.k, self.phase)


def _const(c: float) -> Sinusoid:
    return Sinusoid(float(c))


@dataclass(frozen=True)
class VecProfile:
    x: Sinusoid = field(default_factory=lambda: _const(0.0))
    y: Sinusoid = field(default_factory=lambda: _const(0.0))
    z: Sinusoid = field(default_factory=lambda: _const(0.0))

    @classmethod
    def constant(cls, v) -> "VecProfile":
        return cls(_const(v[0]), _const(v[1]), _const(v[2]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(c(x), x.shape) for c in (self.x, self.y, self.z)], axis=-1)

    def deriv(self, x, order: int = 1):
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(c.deriv(x, order), x.shape) for c in (self.x, self.y, self.z)], axis=-1)


class GaussianField:
    """n(x) * N(v; m(x), T(x) Id) on the periodic unit interval."""

    fixed_nodes = False

    def __init__(self, density: Sinusoid, mean: VecProfile, temp: Sinusoid, hermite_order: int = 16):
        self.density_profile = density
        self.mean_profile = mean
        self.temp_profile = temp
        self.hermite_order = hermite_order
        xs = np.linspace(0, 1, 257)
        if np.min(temp(xs)) <= 0:
            raise ValueError("temperature profile must stay positive")
        if np.min(density(xs)) < 0:
            raise ValueError("density profile must stay non-negative")

    def density(self, x):
        return self.density_profile(x)

    def mean(self, x):
        return self.mean_profile(x)

    def temp(self, x):
        return self.temp_profile(x)

    def value(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        T = self.temp_profile(x)
        d2 = np.sum((v - self.mean_profile(x)) ** 2, axis=-1)
        return self.density_profile(x) * np.exp(-0.5 * d2 / T) / (2 * np.pi * T) ** 1.5

    def grad_v(self, x, v):
        x = np.asarray(x, dtype=float)
        T = np.asarray(self.temp_profile(x))[..., None]
        return -self.value(x, v)[..., None] * (np.asarray(v) - self.mean_profile(x)) / T

    def sample_v(self, x, rng: np.random.Generator, m: int | None = None):
        """Draw v ~ F(x, .)/n(x); with array x, one draw per entry."""
        x = np.asarray(x, dtype=float)
        shape = x.shape if m is None else (m,)
        xb = np.broadcast_to(x, shape)
        z = rng.standard_normal(shape + (3,))
        return self.mean_profile(xb) + np.sqrt(self.temp_profile(xb))[..., None] * z

    def pdf_v(self, x, v):
        return self.value(x, v) / self.density_profile(x)

    def quad_v(self, x: float):
        """Gauss-Hermite nodes and weights adapted to F(x, .)."""
        y, w = gauss_hermite_3d(self.hermite_order)
        xa = np.array([float(x)])
        nodes = self.mean_profile(xa)[0] + np.sqrt(self.temp_profile(xa)[0]) * y
        return nodes, float(self.density_profile(xa)[0]) * w


def silverman_bandwidth(samples: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Silverman's rule for a d-dimensional Gaussian kernel, pooled over axes."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 1 and samples.shape[1] > 1:
        samples = samples.T
    n, d = samples.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    neff = w.sum() ** 2 / np.sum(w**2)
    mu = w @ samples / w.sum()
    sd = math.sqrt(float(np.mean(w @ (samples - mu) ** 2 / w.sum())))
    return sd * (4.0 / ((d + 2) * neff)) ** (1.0 / (d + 4))


class KDEField:
    """Gaussian kernel estimate sum_k w_k K_hx(x - x_k) K_hv(v - v_k), periodic in x.

    ``quad_v`` uses the sample velocities as nodes, i.e. exact particle sums in
    v with smoothing only in x.
    """

    fixed_nodes = True

    def __init__(self, x, v, weights, bandwidth_x: float, bandwidth_v: float | None = None):
        self.x = np.asarray(x, dtype=float) % 1.0
        self.v = np.asarray(v, dtype=float)
        self.w = np.asarray(weights, dtype=float)
        if bandwidth_x <= 0 or bandwidth_x > 0.25:
            raise ValueError("bandwidth_x must lie in (0, 0.25]")
        self.hx = float(bandwidth_x)
        self.hv = float(bandwidth_v) if bandwidth_v is not None else max(silverman_bandwidth(self.v, self.w), 1e-6)

    def _kx(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = x[:, None] - self.x[None, :]
        d -= np.round(d)
        # periodic image sum; images beyond +-2 are below exp(-50) for hx <= 0.25
        k = sum(np.exp(-0.5 * ((d + j) / self.hx) ** 2) for j in range(-2, 3))
        return k / (math.sqrt(2 * np.pi) * self.hx)

    def weights(self, x: float) -> np.ndarray:
        return self._kx(x)[0] * self.w

    def quad_v(self, x: float):
        return self.v, self.weights(x)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = self._kx(x.ravel()) @ self.w
        return out.reshape(x.shape)

    def mean(self, x):
        x = np.asarray(x, dtype=float)
        kw = self._kx(x.ravel()) * self.w
        return (kw @ self.v / kw.sum(1, keepdims=True)).reshape(x.shape + (3,))

    def _kv(self, v):
        d = v[:, None, :] - self.v[None, :, :]
        return np.exp(-0.5 * np.sum(d**2, axis=-1) / self.hv**2) / (2 * np.pi * self.hv**2) ** 1.5, d

    def value(self, x, v):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        kx = self._kx(x) * self.w
        kv, _ = self._kv(v)
        return np.sum(kx * kv, axis=1)

    def grad_v(self, x, v):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        kx = self._kx(x) * self.w
        kv, d = self._kv(v)
        return -np.einsum("mk,mki->mi", kx * kv, d) / self.hv**2

    def sample_v(self, x, rng: np.random.Generator, m: int | None = None):
        x = np.asarray(x, dtype=float)
        shape = x.shape if m is None else (m,)
        xb = np.broadcast_to(x, shape).ravel()
        out = np.empty((xb.size, 3))
        # group equal x to reuse the mixture weights
        for xv in np.unique(xb):
            sel = np.flatnonzero(xb == xv)
            p = self.weights(xv)
            p = p / p.sum()
            idx = rng.choice(len(p), size=sel.size, p=p)
            out[sel] = self.v[idx] + self.hv * rng.standard_normal((sel.size, 3))
        return out.reshape(shape + (3,))

    def pdf_v(self, x, v):
        return self.value(x, v) / self.density(np.atleast_1d(x))

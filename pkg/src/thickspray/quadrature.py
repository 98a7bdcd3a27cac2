"""Quadrature rules shared by the kernel, remainder and collision code."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MIN_N_THETA = 16
MIN_RADIAL_ORDER = 20


class QuadratureError(RuntimeError):
    """Raised when successive quadrature refinements disagree."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution settings for sphere and radial integrals.

    ``sphere_rule`` is ``"product"`` (Gauss-Legendre in cos(theta) split at the
    equator, trapezoid in phi) or ``"monte-carlo"``.  The Monte Carlo rule is
    kept for cross-checks; production code paths use the product grid.
    """

    sphere_rule: str = "product"
    n_theta: int = 32
    n_phi: int = 64
    n_samples: int = 200_000
    seed: int = 12345
    radial_order: int = 64
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.sphere_rule not in ("product", "monte-carlo"):
            raise ValueError(f"unknown sphere_rule {self.sphere_rule!r}")
        if self.n_theta < MIN_N_THETA or self.n_theta % 2:
            raise ValueError(f"n_theta must be even and >= {MIN_N_THETA}, got {self.n_theta}")
        if self.n_phi < 4:
            raise ValueError("n_phi must be >= 4")
        if self.radial_order < MIN_RADIAL_ORDER:
            raise ValueError(f"radial_order must be >= {MIN_RADIAL_ORDER}")
        if self.n_samples < 1000:
            raise ValueError("n_samples must be >= 1000")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_interval(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


@lru_cache(maxsize=16)
def gauss_hermite_prob(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for int g(y) N(0,1)(y) dy (probabilists' Hermite, normalised)."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / np.sqrt(2.0 * np.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_hermite_3d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor rule for E[g(Y)], Y ~ N(0, I_3). Returns (n^3, 3) nodes."""
    x, w = gauss_hermite_prob(n)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1), W.ravel()


def orthonormal_frame(axis: np.ndarray) -> np.ndarray:
    """Rows (e1, e2, e3) of a right-handed frame with e3 along ``axis``."""
    e3 = np.asarray(axis, dtype=float)
    e3 = e3 / np.linalg.norm(e3)
    helper = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(helper, e3)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.stack([e1, e2, e3])


@lru_cache(maxsize=32)
def _product_grid(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    half = n_theta // 2
    t_up, w_up = gauss_legendre_interval(half, 0.0, 1.0)
    t = np.concatenate([-t_up[::-1], t_up])
    wt = np.concatenate([w_up[::-1], w_up])
    phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
    T, P = np.meshgrid(t, phi, indexing="ij")
    s = np.sqrt(np.clip(1.0 - T**2, 0.0, None))
    nodes = np.stack([s * np.cos(P), s * np.sin(P), T], axis=-1).reshape(-1, 3)
    weights = (wt[:, None] * np.full(n_phi, 2.0 * np.pi / n_phi)[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def sphere_rule(quad: QuadratureSpec = DEFAULT_QUAD, axis=None) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (m, 3) and weights (m,) integrating over the unit sphere S^2.

    With ``axis`` given, the product grid's pole is rotated onto it so that the
    equator (where Heaviside factors in ``omega . axis`` jump) is a cell boundary.
    """
    if quad.sphere_rule == "monte-carlo":
        rng = np.random.default_rng(quad.seed)
        g = rng.standard_normal((quad.n_samples, 3))
        nodes = g / np.linalg.norm(g, axis=1, keepdims=True)
        weights = np.full(quad.n_samples, 4.0 * np.pi / quad.n_samples)
        return nodes, weights
    nodes, weights = _product_grid(quad.n_theta, quad.n_phi)
    if axis is not None and np.linalg.norm(axis) > 0:
        nodes = nodes @ orthonormal_frame(axis)
    return nodes, weights


def heaviside(z, at_zero: float = 0.5):
    """Heaviside step; value ``at_zero`` on the measure-zero set z == 0."""
    z = np.asarray(z, dtype=float)
    return np.where(z > 0, 1.0, np.where(z < 0, 0.0, at_zero))

"""Elastic collision maps for the gas-particle mixture and for gas-gas pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernels import as_vec3

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class VelocityPair:
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", as_vec3(self.v, "v"))
        object.__setattr__(self, "w", as_vec3(self.w, "w"))


def _check_unit(sigma, tol=UNIT_TOL):
    n = np.linalg.norm(sigma, axis=-1)
    if np.any(np.abs(n - 1.0) > tol):
        raise ValueError(f"sigma must be a unit vector (|sigma| - 1 up to {np.max(np.abs(n - 1.0)):.2e})")


def cross_collision_arrays(v, w, sigma, eta: float, check: bool = True):
    """Vectorised (v', w') for arrays of shape (..., 3)."""
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if check:
        _check_unit(sigma)
    k = np.sum((v - w) * sigma, axis=-1, keepdims=True)
    v_new = v - (2.0 * eta / (1.0 + eta)) * k * sigma
    w_new = w + (2.0 / (1.0 + eta)) * k * sigma
    return v_new, w_new


def cross_collision(pair: VelocityPair, sigma, eta: float) -> VelocityPair:
    """v' = v - 2 eta/(1+eta) ((v-w).s) s,  w' = w - 2/(1+eta) ((w-v).s) s."""
    sigma = as_vec3(sigma, "sigma")
    _check_unit(sigma)
    v, w = cross_collision_arrays(pair.v, pair.w, sigma, eta, check=False)
    return VelocityPair(v, w)


def same_species_collision(pair: VelocityPair, sigma) -> VelocityPair:
    """Equal-mass exchange of the normal relative velocity component."""
    sigma = as_vec3(sigma, "sigma")
    _check_unit(sigma)
    k = (pair.v - pair.w) @ sigma
    return VelocityPair(pair.v - k * sigma, pair.w + k * sigma)


def same_species_arrays(v, v1, sigma):
    k = np.sum((v - v1) * sigma, axis=-1, keepdims=True)
    return v - k * sigma, v1 + k * sigma


def cosine_weighted_sigma(axis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Unit vectors with density (axis_hat . s) H(axis_hat . s) / pi on S^2.

    Uses the fact that axis_hat + (uniform unit vector), normalised, is
    cosine-distributed about axis_hat.  Rows of zero length get a uniform
    direction.
    """
    m = axis.shape[0]
    g = rng.standard_normal((m, 3))
    u = g / np.sqrt(np.einsum("ij,ij->i", g, g))[:, None]
    norm = np.sqrt(np.einsum("ij,ij->i", axis, axis))[:, None]
    e = np.divide(axis, norm, out=np.zeros_like(axis, dtype=float), where=norm > 0)
    out = e + u
    n2 = np.sqrt(np.einsum("ij,ij->i", out, out))[:, None]
    bad = n2[:, 0] < 1e-12
    if np.any(bad):
        out[bad], n2[bad] = u[bad], 1.0
    return out / n2

"""Named initial conditions for the spray solver.

Gas densities passed here are the physical number density n (the gas state
stored in ``GasField``); alpha is computed from the particles, so the density
of the gas distribution per unit mixture volume is alpha * n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..collision.densities import GaussianField, Sinusoid, VecProfile
from .remainder import AnalyticGas
from .solver import volume_fraction
from .state import GasField, ParticlePhase

PRESETS = ("uniform", "sod", "comoving", "drag-relaxation", "sinusoidal-F")


@dataclass
class PresetState:
    gas: GasField
    phase: ParticlePhase
    analytic: tuple | None = None  # (F as GaussianField, AnalyticGas) when available


def lattice_positions(n: int, offset: float = 0.5) -> np.ndarray:
    return (np.arange(n) + offset) / max(n, 1)


def density_positions(n: int, profile: Sinusoid, grid: int = 4096) -> np.ndarray:
    """Deterministic positions with number density proportional to a positive profile."""
    xs = np.linspace(0, 1, grid + 1)
    mid = 0.5 * (xs[1:] + xs[:-1])
    cdf = np.concatenate([[0.0], np.cumsum(profile(mid))])
    cdf /= cdf[-1]
    x = np.interp((np.arange(n) + 0.5) / n, cdf, xs)
    return np.where(x >= 1.0, 0.0, x)


def _phase(x, v, total_number, a):
    n = len(x)
    w = np.full(n, total_number / n) if n else np.zeros(0)
    return ParticlePhase(np.asarray(x), np.asarray(v, dtype=float).reshape(-1, 3), w, a)


def _gas_with_alpha(phase, cells, n, u, theta, m_g, thin):
    alpha = np.ones(cells) if thin else volume_fraction(phase, cells)
    return GasField(alpha, n, u, theta, m_g)


def uniform(cells=64, a=0.05, n=1.0, u=(0.0, 0.0, 0.0), theta=1.0, m_g=1.0, particles=256,
            particle_density=1.0, particle_v=(0.0, 0.0, 0.0), particle_T=0.0, seed=0, thin=False) -> PresetState:
    rng = np.random.default_rng(seed)
    v = np.asarray(particle_v, dtype=float) + math.sqrt(particle_T) * rng.standard_normal((particles, 3))
    phase = _phase(lattice_positions(particles), v, particle_density, a)
    return PresetState(_gas_with_alpha(phase, cells, n, np.asarray(u, dtype=float), theta, m_g, thin), phase)


def comoving(cells=64, a=0.05, n=1.0, u=(0.3, 0.0, 0.0), theta=1.0, m_g=1.0, particles=256,
             particle_density=1.0, thin=False, **_) -> PresetState:
    return uniform(cells, a, n, u, theta, m_g, particles, particle_density, particle_v=u, particle_T=0.0, thin=thin)


def drag_relaxation(cells=32, a=0.05, n=1.0, theta=1.0, m_g=1.0, particles=128, particle_density=1.0,
                    slip=2.0, thin=False, **_) -> PresetState:
    """Uniform gas at rest, cold particles moving with velocity slip * e_1."""
    return uniform(cells, a, n, (0.0, 0.0, 0.0), theta, m_g, particles, particle_density, (slip, 0.0, 0.0), 0.0, thin=thin)


def sod(cells=200, m_g=1.0, a=0.0, left=(1.0, 1.0), right=(0.125, 0.8), thin=True, **_) -> PresetState:
    """Two mirrored shock-tube problems on the periodic domain, no particles.

    The (n, theta) state ``left`` fills [0.25, 0.75), ``right`` the rest, so a
    standard shock tube sits at x = 0.75 and its mirror image at x = 0.25.
    """
    x = (np.arange(cells) + 0.5) / cells
    inside = (x >= 0.25) & (x < 0.75)
    n = np.where(inside, left[0], right[0])
    theta = np.where(inside, left[1], right[1])
    gas = GasField(np.ones(cells), n, np.zeros(3), theta, m_g)
    return PresetState(gas, ParticlePhase.empty(a))


def sinusoidal_F(cells=64, a=0.05, n=1.0, theta=1.0, m_g=1.0, particles=2048, particle_density=1.0,
                 amplitude=0.3, particle_mean=(0.5, 0.0, 0.0), particle_T=0.25, gas_amplitude=0.2,
                 seed=0, thin=False, hermite_order=12) -> PresetState:
    """F = rho(x) N(v; V, s^2), rho = rho0 (1 + A sin 2 pi x); gas alpha n and T sinusoidal too.

    The analytic pair (GaussianField, AnalyticGas) describes the same state for
    quadrature-based remainder studies; the particle ensemble samples it.
    """
    rho = Sinusoid(particle_density, particle_density * amplitude)
    F = GaussianField(rho, VecProfile.constant(particle_mean), Sinusoid(particle_T), hermite_order)
    an = Sinusoid(n, n * gas_amplitude, phase=0.7)
    gas_profile = AnalyticGas(an, VecProfile(Sinusoid(0.0, 0.1, phase=1.3)), Sinusoid(theta / m_g, 0.1 * theta / m_g, phase=2.1), m_g)
    rng = np.random.default_rng(seed)
    x = density_positions(particles, rho)
    v = np.asarray(particle_mean) + math.sqrt(particle_T) * rng.standard_normal((particles, 3))
    phase = _phase(x, v, particle_density, a)
    xc = (np.arange(cells) + 0.5) / cells
    alpha = np.ones(cells) if thin else volume_fraction(phase, cells)
    gas = GasField(alpha, an(xc) / alpha, gas_profile.u(xc), m_g * gas_profile.T(xc), m_g)
    return PresetState(gas, phase, (F, gas_profile))


BUILDERS = {
    "uniform": uniform,
    "sod": sod,
    "comoving": comoving,
    "drag-relaxation": drag_relaxation,
    "sinusoidal-F": sinusoidal_F,
}


def build_preset(name: str, **kw) -> PresetState:
    if name not in BUILDERS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return BUILDERS[name](**kw)


def relaxation_rate(alpha_n: float, T: float, a: float, particle_density: float) -> float:
    """Linearised decay rate of v - u for cold particles in a uniform gas.

    d(v - u)/dt = -pi a^2 alpha n sqrt(T) qbar(0) (1 + rho_p / (alpha n)) (v - u),
    the bracket coming from momentum balance between the phases.
    """
    from ..kernels import QBAR_ZERO

    return math.pi * a**2 * alpha_n * math.sqrt(T) * QBAR_ZERO * (1.0 + particle_density / alpha_n)

"""State containers for the macroscopic thick-spray layer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

VOLUME_COEF = 4.0 * math.pi / 3.0
VACUUM_FLOOR = 1e-12


class SolverError(RuntimeError):
    """Raised by solver steps; ``record`` is a machine-readable failure summary."""

    def __init__(self, message: str, **record):
        super().__init__(message)
        self.record = {"error": type(self).__name__, "message": message, **record}


class CFLError(SolverError):
    pass


class OverpackedError(SolverError):
    pass


class NegativeTemperatureError(SolverError):
    pass


@dataclass
class GasField:
    """Cell-averaged gas state on the periodic unit interval (cell centres (j + 1/2) dx)."""

    alpha: np.ndarray
    n: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    m_g: float = 1.0
    vacuum: np.ndarray | None = None

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        C = self.alpha.size
        self.n = np.broadcast_to(np.asarray(self.n, dtype=float), (C,)).copy()
        self.theta = np.broadcast_to(np.asarray(self.theta, dtype=float), (C,)).copy()
        self.u = np.broadcast_to(np.asarray(self.u, dtype=float), (C, 3)).copy()
        if self.vacuum is None:
            self.vacuum = self.n < VACUUM_FLOOR
        errs = []
        if C < 3:
            errs.append("need at least 3 cells")
        if np.any(~(self.alpha > 0)) or np.any(self.alpha > 1):
            errs.append("alpha must lie in (0, 1]")
        if np.any(~(self.n >= 0)):
            errs.append("n must be >= 0")
        if np.any(~(self.theta > 0)):
            errs.append("theta must be > 0")
        if not np.all(np.isfinite(self.u)):
            errs.append("u must be finite")
        if not self.m_g > 0:
            errs.append("m_g must be > 0")
        if errs:
            raise ValueError("; ".join(errs))

    @classmethod
    def uniform(cls, cells: int, n: float, u, theta: float, m_g: float = 1.0, alpha: float = 1.0):
        return cls(np.full(cells, alpha), n, u, theta, m_g)

    @property
    def cells(self) -> int:
        return self.alpha.size

    @property
    def dx(self) -> float:
        return 1.0 / self.cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx

    @property
    def rho(self):
        return self.m_g * self.n

    @property
    def p(self):
        return self.n * self.theta

    @property
    def alpha_n(self):
        return self.alpha * self.n

    @property
    def T(self):
        """theta / m_g, the Maxwellian variance."""
        return self.theta / self.m_g

    @property
    def E(self):
        return 0.5 * np.sum(self.u**2, axis=1) + 1.5 * self.theta / self.m_g

    def conserved(self) -> np.ndarray:
        """(alpha rho, alpha rho u, alpha rho E) per cell, shape (C, 5)."""
        ar = self.alpha * self.rho
        return np.column_stack([ar, ar[:, None] * self.u, ar * self.E])

    def totals(self) -> dict:
        U = self.conserved() * self.dx
        return {"mass": U[:, 0].sum(), "momentum": U[:, 1:4].sum(axis=0), "energy": U[:, 4].sum()}

    def copy(self) -> "GasField":
        return replace(self, alpha=self.alpha.copy(), n=self.n.copy(), u=self.u.copy(), theta=self.theta.copy(), vacuum=self.vacuum.copy())


@dataclass
class ParticlePhase:
    """Weighted macro-particles; weights are number weights of F."""

    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    a: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.v = np.asarray(self.v, dtype=float).reshape(-1, 3)
        self.w = np.broadcast_to(np.asarray(self.w, dtype=float), self.x.shape).copy()
        errs = []
        if len(self.v) != len(self.x):
            errs.append("x and v differ in length")
        if self.x.size and (self.x.min() < 0 or self.x.max() >= 1):
            errs.append("x must lie in [0, 1)")
        if np.any(~(self.w > 0)):
            errs.append("weights must be > 0")
        if not self.a >= 0:
            errs.append("a must be >= 0")
        if not np.all(np.isfinite(self.v)):
            errs.append("v must be finite")
        if errs:
            raise ValueError("; ".join(errs))

    @classmethod
    def empty(cls, a: float) -> "ParticlePhase":
        return cls(np.zeros(0), np.zeros((0, 3)), np.zeros(0), a)

    def __len__(self):
        return self.x.size

    def totals(self, m_g: float = 1.0) -> dict:
        return {
            "number": float(self.w.sum()),
            "momentum": m_g * (self.w @ self.v) if len(self) else np.zeros(3),
            "kinetic_energy": 0.5 * m_g * float(self.w @ np.sum(self.v**2, axis=1)) if len(self) else 0.0,
        }

    def bulk_velocity(self) -> np.ndarray:
        return self.w @ self.v / self.w.sum()

    def copy(self) -> "ParticlePhase":
        return replace(self, x=self.x.copy(), v=self.v.copy(), w=self.w.copy())


@dataclass(frozen=True)
class RemainderReport:
    P_norm: float
    Q_norm: float
    R_norm: float
    a: float
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for k in ("P_norm", "Q_norm", "R_norm"):
            v = getattr(self, k)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{k} must be finite and >= 0, got {v}")

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ScalingParams:
    """Dimensionless parameters of the coupled kinetic system.

    eta is the mass ratio m_g / m_p, delta the inverse gas collision rate
    scale and a the particle radius relative to the (unit) periodic box.
    The gas and particle thermal velocity scales coincide, so no separate
    epsilon parameter exists.
    """

    eta: float
    delta: float
    a: float
    m_g: float = 1.0
    m_p: float | None = None

    def __post_init__(self):
        if self.m_p is None:
            object.__setattr__(self, "m_p", self.m_g / self.eta if self.eta > 0 else math.nan)
        errs = self.violations()
        if errs:
            raise ValueError("; ".join(errs))

    def violations(self) -> list[str]:
        errs = []
        vals = dict(eta=self.eta, delta=self.delta, a=self.a, m_g=self.m_g, m_p=self.m_p)
        for k, v in vals.items():
            if not math.isfinite(v):
                errs.append(f"{k} must be finite, got {v}")
        if not 0 < self.eta <= 1:
            errs.append(f"eta must lie in (0, 1], got {self.eta}")
        if not self.delta > 0:
            errs.append(f"delta must be > 0, got {self.delta}")
        if not 0 < self.a < 0.5:
            errs.append(f"a must lie in (0, 0.5) so the contact offset fits the periodic box, got {self.a}")
        if not self.m_g > 0:
            errs.append(f"m_g must be > 0, got {self.m_g}")
        if not (self.m_p is not None and self.m_p > 0):
            errs.append(f"m_p must be > 0, got {self.m_p}")
        elif self.eta > 0 and abs(self.eta - self.m_g / self.m_p) > 1e-12:
            errs.append(f"eta={self.eta} differs from m_g/m_p={self.m_g / self.m_p}")
        return errs

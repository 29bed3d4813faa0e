"""Fluid state at one time level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ScalarField, VectorField


@dataclass
class FluidState:
    rho: ScalarField
    v: VectorField
    time: float = 0.0
    step_index: int = 0
    epsilon_used: float = 0.0

    @property
    def grid(self):
        return self.rho.grid

    def copy(self) -> "FluidState":
        return FluidState(self.rho.copy(), self.v.copy(), self.time,
                          self.step_index, self.epsilon_used)

    def check_invariants(self, m2: float, tol: float = 1e-12):
        """Raise if the state violates rho >= 0, rho <= m2 or slip."""
        scale = max(1.0, float(np.abs(self.rho.values).max()))
        if float(self.rho.values.min()) < -tol * scale:
            raise ValueError(f"state has negative density: {self.rho.values.min()}")
        if float(self.rho.values.max()) > m2 + tol * scale:
            raise ValueError(f"state density exceeds m2={m2}: {self.rho.values.max()}")
        if not self.v.is_slip_compatible(tol=0.0):
            raise ValueError("state velocity has nonzero wall-normal components")

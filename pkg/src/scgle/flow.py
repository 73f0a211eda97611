"""Exact flow of the pointwise cubic ODE z' = R z - (1 + i mu)|z|^2 z.

The scalar maps accept Python complex numbers or numpy arrays; arrays are
evaluated by the compiled kernels in :mod:`scgle._kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .spectral import GridField


@dataclass(frozen=True)
class FlowParams:
    R: float
    mu: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"R must be > 0 (got {self.R})")

    @classmethod
    def from_model(cls, model) -> "FlowParams":
        return cls(R=model.R, mu=model.mu)

    def alpha(self, dt: float) -> float:
        """(e^{2 R dt} - 1) / R."""
        return math.expm1(2.0 * self.R * dt) / self.R


def _scalar_or_array(fn, z, *args):
    if np.ndim(z) == 0:
        return complex(fn(np.array([z], dtype=np.complex128), *args)[0])
    return fn(z, *args)


def psi0(z, p: FlowParams):
    return _scalar_or_array(_kernels.psi0_array, z, p.R, p.mu)


def phi_flow(z, dt: float, p: FlowParams):
    """Time-``dt`` solution of the pointwise ODE started at ``z``."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0 (got {dt})")
    return _scalar_or_array(_kernels.phi_array, z, dt, p.R, p.mu)


def psi_dt(z, dt: float, p: FlowParams):
    """(Phi_dt(z) - z) / dt, continuously extended by psi0 at dt = 0."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0 (got {dt})")
    return _scalar_or_array(_kernels.psi_array, z, dt, p.R, p.mu)


def apply_flow(g: GridField, dt: float, p: FlowParams) -> GridField:
    return GridField(g.N, _kernels.phi_array(g.values, dt, p.R, p.mu))

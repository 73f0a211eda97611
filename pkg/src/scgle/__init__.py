"""Exact splitting spectral solver for the stochastic complex Ginzburg-Landau equation on the 1-D torus."""

__version__ = "0.1.0"

from .config import Method, ModelParams, NoiseKind, NoiseSpec, RunConfig, load_config, qk_value
from .convergence import ConvergenceReport, LadderSpec, rmse_pair, run_ladder
from .flow import FlowParams, apply_flow, phi_flow, psi0, psi_dt
from .integrators import SolverState, Trajectory, esm_step, expsm_step, run, tam_step
from .spectral import GridField, SpectralField

__all__ = [
    "ConvergenceReport",
    "FlowParams",
    "GridField",
    "LadderSpec",
    "Method",
    "ModelParams",
    "NoiseKind",
    "NoiseSpec",
    "RunConfig",
    "SolverState",
    "SpectralField",
    "Trajectory",
    "apply_flow",
    "esm_step",
    "expsm_step",
    "load_config",
    "phi_flow",
    "psi0",
    "psi_dt",
    "qk_value",
    "rmse_pair",
    "run",
    "run_ladder",
    "tam_step",
]

"""Phase-field simulation of hydrogen-assisted fatigue crack growth."""

from .params import FatigueParams, HydrogenParams, MaterialParams, UNITS
from .mesh import CTGeometry, Mesh, generate_ct_half_mesh, rectangle_mesh
from .driver import LoadProgram, SimState, Simulation, SolverOptions
from .experiment import CrackGrowthRecord, compute_delta_K, paris_fit, run_experiment, run_sweep
from .config import ExperimentConfig, parse_config

__all__ = [
    "FatigueParams", "HydrogenParams", "MaterialParams", "UNITS",
    "CTGeometry", "Mesh", "generate_ct_half_mesh", "rectangle_mesh",
    "LoadProgram", "SimState", "Simulation", "SolverOptions",
    "CrackGrowthRecord", "compute_delta_K", "paris_fit", "run_experiment", "run_sweep",
    "ExperimentConfig", "parse_config",
]
__version__ = "0.1.0"

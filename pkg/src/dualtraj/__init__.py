"""Global trajectories for quadratic ODE systems by canonical dual
optimization, with structural chaos classification and adaptive
Runge-Kutta baselines."""

from .canonical import (GLOBAL_MINIMUM, LOCAL_CLASS, UNCERTIFIED,
                        TrialityCertificate, certify, collect, dual_function,
                        dual_map, recover, xi_collected, xi_direct)
from .classify import (BOUNDARY_ONLY, INDEFINITE_ONLY, PD_ATTAINABLE, Verdict,
                       classify, pencil, verdict_to_prognosis)
from .discretize import (gradient, objective, residuals, write_trajectory_csv,
                         zero_trajectory)
from .integrate import (modified_euler, resample, resample_linear, rk23,
                        rk45)
from .model import (Forcing, Grid, IvpSpec, QuadraticSystem, eval_field,
                    load_system_file, parse_system_file, registry,
                    serialize_system)
from .solver import (SolveConfig, SolveReport, march_fixed_point, solve,
                     solve_levmarq, solve_primal_dual, step_fixed_point,
                     y_step)

__version__ = "0.1.0"

__all__ = [
    "BOUNDARY_ONLY", "Forcing", "GLOBAL_MINIMUM", "Grid", "INDEFINITE_ONLY",
    "IvpSpec", "LOCAL_CLASS", "PD_ATTAINABLE", "QuadraticSystem",
    "SolveConfig", "SolveReport", "TrialityCertificate", "UNCERTIFIED",
    "Verdict", "certify", "classify", "collect", "dual_function", "dual_map",
    "eval_field", "gradient", "load_system_file", "march_fixed_point",
    "modified_euler", "objective", "parse_system_file", "pencil", "recover",
    "registry", "resample", "resample_linear", "residuals", "rk23", "rk45",
    "serialize_system",
    "solve", "solve_levmarq", "solve_primal_dual", "step_fixed_point",
    "verdict_to_prognosis", "write_trajectory_csv", "xi_collected",
    "xi_direct", "y_step", "zero_trajectory",
]

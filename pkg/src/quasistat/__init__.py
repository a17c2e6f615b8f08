"""Quasi-stationary states of an optically pumped atom weakly coupled to a thermal reservoir."""

from ._backend import BACKEND
from .dynamics import (IntegrationError, Trajectory, integrate_master, integrate_pauli,
                       integrate_premaster, period_average)
from .einstein import EinsteinTable, bb_check, einstein_A, einstein_B, einstein_table
from .howland import build_howland, riesz_subspace, semigroup_compare, spectral_report
from .lindblad import scenario_generators
from .model import (AtomSpec, CouplingSpec, ExpRadial, PumpSpec, RateTable, RunControls, Scenario,
                    Tabulated, build_atom, four_level_scenario, gibbs_state, make_scenario,
                    populations)
from .scenario_io import load_scenario, scenario_from_dict, scenario_to_dict
from .steady import balance_solve, effective_generator, pump_operator
from .verify import VerifyReport, b_positivity_condition, gkls_check, spohn_irreducibility

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AtomSpec", "CouplingSpec", "EinsteinTable", "ExpRadial", "IntegrationError",
    "PumpSpec", "RateTable", "RunControls", "Scenario", "Tabulated", "Trajectory", "VerifyReport",
    "b_positivity_condition", "balance_solve", "bb_check", "build_atom", "build_howland",
    "effective_generator", "einstein_A", "einstein_B", "einstein_table", "four_level_scenario",
    "gibbs_state", "gkls_check", "integrate_master", "integrate_pauli", "integrate_premaster",
    "load_scenario", "make_scenario", "period_average", "populations", "pump_operator",
    "riesz_subspace", "scenario_from_dict", "scenario_generators", "scenario_to_dict",
    "semigroup_compare", "spectral_report", "spohn_irreducibility",
]

"""Numerical laboratory for energy decay of nonlinearly damped waves and hinged plates."""
from .spectral import BoxDomain, make_box_domain, forward_transform, inverse_transform, lp_norm, sobolev_seminorms
from .dynamics import (DampingSpec, OperatorSpec, State, InitSpec, RecordSpec, SimConfig, SimulationError,
                       simulate, simulate_ode, strang_step, contractivity_check, initial_state)
from .functionals import (TrajectoryRecord, Trajectory, ExponentReport, energy, f_functional, perturbed_energy,
                          mu_exponents, gn_delta, lp_growth_bound, bound_curve)

__version__ = "0.1.0"

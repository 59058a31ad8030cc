"""One-dimensional transfer-matrix optomechanics: forces, friction, diffusion and
temperatures of a mobile scatterer in a stack of thin optical elements."""

__version__ = "0.1.0"

from .dynamics import (DynamicalResponse, ModulationProbe, diffusion, equilibrium_temperature,
                       friction_coefficient, respond, temperature_asymptote)
from .elements import (AtomModel, MirrorCoefficients, OpticalElement, Polarizability, atom_polarizability,
                       mirror_coefficients, propagation_matrix, scatterer_matrix)
from .errors import (CavityCoolError, ConfigError, ConvergenceError, DomainError, HeatingError,
                     SaturationError, SolverError)
from .scenarios import (CustomScenario, InsideScenario, OutsideScenario, build, build_inside, build_outside,
                        max_power_for_saturation)
from .stack import (CavityFigures, FieldState, PumpSpec, Stack, characterize_cavity, compose, force_on,
                    local_saturation, solve_fields)
from .sweeps import SweepResult, SweepSpec, average_over_wavelength, find_optimum, scaling_scan, scan

__all__ = [n for n in dir() if not n.startswith("_")]

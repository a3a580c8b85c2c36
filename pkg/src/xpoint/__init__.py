"""Exact and numerical solutions of the Hall-MHD X-point collapse coefficients."""

from .closedform import (OrbitSolution, PlacedOrbit, blowup_time, exact_orbit, place_orbit,
                         reconstruct_alpha_beta, solve, solve_A, solve_B_bounded,
                         solve_B_unbounded, solve_C, solve_separatrix, solve_weierstrass)
from .elliptic import complete_K, jacobi_sncndn, weierstrass_p
from .integrate import IntegratorConfig, integrate_full, integrate_q
from .model import (CoefficientState, DerivedParams, InitialData, RegimeLabel, VorticitySpec,
                    classify, compute_c)

__version__ = "0.1.0"

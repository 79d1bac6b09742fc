"""boselab: bosonic-chain simulation toolkit.

Charge-conserving TEBD on canonical matrix product states, exact folding of
quadratic-chain condensates into MPS form, end-to-end entanglement measures,
and split-step dynamics of a periodically kicked ring condensate with
Bogoliubov stability diagnostics.
"""

from ._backend import BACKEND as kernel_backend
from .bosehubbard import (BhChainSpec, build_gate, hopping_profile,
                          lattice_params, perturbation_profile, trotter_schedule)
from .entanglement import (EndPairRdm, PartialTransposeRdm, end_pair_rdm,
                           epsilon_ab, log_negativity, partial_transpose, zeta)
from .errors import NumericalError, ResourceError, ValidationError
from .evolve import (EvolutionReport, energy_expectation, ground_state,
                     ground_state_ladder, quench_protocol, real_time,
                     recanonicalize, standard_observers)
from .freeboson import (CollisionResult, FoldPlan, RMatrix,
                        apply_creation_power, binomial_entanglement, build_r,
                        collision_experiment, evolve_coefficients, fold_double,
                        fold_mode_into_mps, fold_single, ground_mode,
                        mode_occupations, propagate, quench_occupations,
                        transfer_f_continuous, transfer_weight_table,
                        unfold_into_mps)
from .gates import (TwoSiteGate, current_gate, pair_basis, phase_gate,
                    random_number_conserving_gate)
from .kickedgp import (BdgMode, GpField, KickSchedule, KickedRunResult,
                       alpha_rate, analytic_psi, bdg_evolve, bogoliubov_data,
                       fit_nnp_growth, gp_energy, gp_evolve, kicked_run, nnp,
                       resonance_locations, stability_scan)
from .linalg import (eig_hermitian, expm_hermitian_scaled, fft_ring, ifft_ring)
from .mps import CanonicalMps, occupation_basis, total_number
from .serialize import load_mps, save_mps

__version__ = "0.1.0"

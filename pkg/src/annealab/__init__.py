"""annealab: exact-diagonalization laboratory for annealing dynamics on
small Ising systems.

Classical single-spin-flip dynamics, its symmetric-Hamiltonian similarity
transform, imaginary-time evolution with first-order slow-driving analysis,
spectral-gap scans and schedule convergence criteria, all at desk scale
(N <= 20 spins, dense matrices).
"""

from ._kernels import USING_COMPILED
from .adiabatic import (AdiabaticReport, CoefficientTable, ImaginaryTimeTrajectory,
                        MappedFlow, depletion_rate, depletion_rate_mapped,
                        derivative_identity_residual, excitation_coefficient,
                        integrate_imaginary_time, integrated_depletion,
                        measure_ground_probability, predict_ground_probability,
                        project_onto_levels, residual_slope, run_adiabatic_sweep)
from .convergence import (DeltaCondition, DichotomyReport, GapBoundParams, GapFit,
                          GapScan, TimePath, delta_integral, dichotomy_experiment,
                          fit_gap_bound, gap_scan, lowest_gap)
from .errors import (AnnealabError, ConfigError, DegeneracyError, MappingError,
                     StabilityError)
from .ising import (GroundSet, IsingModel, SpinConfiguration, energy,
                    ferromagnetic_chain, ground_states, h0_diagonal,
                    index_from_spins, model_from_dict, random_model,
                    spins_from_index)
from .markov import (MasterTrajectory, build_generator, build_glauber,
                     build_metropolis, generator_residuals, gibbs,
                     integrate_master)
from .qmap import (EffectiveHamiltonian, MappedHamiltonian, SpectralData,
                   align_signs, chain_closed_form, chain_closed_form_dbeta,
                   effective_hamiltonian, eigendecompose, equilibrium_mode,
                   map_generator, mapped_from_model, p_from_psi, psi_from_p,
                   spectral_grid)
from .schedule import (GemanParams, GemanSchedule, LinearSchedule, QuenchSchedule,
                       SampledSchedule, Schedule, constant_schedule,
                       geman_beta_of_t, schedule_from_dict)

__version__ = "0.1.0"

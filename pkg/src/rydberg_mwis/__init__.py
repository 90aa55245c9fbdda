"""Weighted maximum independent set on Rydberg atom arrays.

Modules
-------
graph        weighted graphs, the MWIS cost and an exact brute-force solver
embedding    atom layouts, unit-disk graphs and ancilla gadget embeddings
hamiltonian  Rydberg Hamiltonian with per-site light-shift weighting
schedule     cubic detuning sweep split into global detuning and light shift
evolve       state-vector evolution, readout sampling and run records
optimizer    closed-loop Nelder-Mead tuning of the ramp
calibration  multiplicative feedback balancing of light-shift weights
experiment   JSON configs and the bundled fixtures
cli          command-line runner
"""

from .calibration import (CalibrationHistory, PlantModel, identity_plant, random_plant,
                          rms_relative_error, run_calibration)
from .embedding import (AtomLayout, Embedding, chain_layout, decode, embed, grid_positions,
                        grid_gadget_embedding, udg_from_layout, validate_embedding)
from .errors import (CalibrationError, CapacityError, DomainError, EmbeddingError, InstanceError,
                     IntegrationError, MwisError, ParameterError)
from .evolve import (EvolutionConfig, EvolutionResult, RunRecord, anneal, evolve, ground_state,
                     probabilities, sample)
from .experiment import build_experiment, load_config, load_fixture
from .graph import (MwisResult, WeightedGraph, brute_force_mwis, expectation_cost, mwis_cost,
                    path_graph)
from .hamiltonian import (DriveSample, RydbergSystem, blockade_radius, build_hamiltonian,
                          check_blockade_cap, interaction)
from .optimizer import OptProblem, OptResult, optimize, verify
from .schedule import ConstantDrive, RampParams, Schedule, crossing_time, cubic_delta, params_for_crossing

__version__ = "0.1.0"

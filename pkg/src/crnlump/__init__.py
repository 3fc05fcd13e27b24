"""crnlump: lumping, simulation and control reconstruction for mass-action
reaction networks whose kinetic rates are interval-valued control inputs."""

from .model import (BlockProjection, Multiset, Partition, RateInterval,
                    Reaction, ReactionNetwork, Species, StructuralError,
                    block_projection, falling_binomial, refines)
from .parser import (EdgeListGraph, ModelDocument, ParseError, parse_edge_list,
                     parse_model, parse_partition_file, serialize_model)
from .lumping import (BlockMap, InvalidPartitionError, Signature,
                      check_equivalence, coarsest_equivalence, quotient,
                      rate_between, refine_partition, species_signature)
from .ode import (ControlSchedule, CostSpec, DivergenceError,
                  ProjectionFailureError, Trajectory, VectorField, block_sums,
                  block_indicator, evaluate_cost, project_control,
                  schedule_from_csv, schedule_to_csv, simulate,
                  trajectory_from_csv, trajectory_to_csv, vector_field)
from .ctmc import (ApproximateResultWarning, CapacityError, Generator,
                   JumpPath, LumpabilityResult, PropensityOverflowError,
                   ScaledKinetics, StateSpace, build_generator,
                   check_ordinary_lumpability, distribution_to_csv,
                   enumerate_ball, enumerate_states, jump_path_to_csv,
                   scaled_generator, ssa_simulate, transient_solve)
from .reconstruct import (BoxLsResult, DriftMatchProblem,
                          ReconstructionFailureError, ReconstructionResult,
                          build_drift_match, reconstruct_trajectory,
                          solve_box_ls)
from .generators import (DEFAULT_ASSOCIATION, DEFAULT_DISSOCIATION, SirParams,
                         multisite_binding_model, sir_network_model,
                         sir_star_model)

__version__ = "0.1.0"

__all__ = [
    "ApproximateResultWarning", "BlockMap", "BlockProjection", "BoxLsResult",
    "CapacityError", "ControlSchedule", "CostSpec", "DEFAULT_ASSOCIATION",
    "DEFAULT_DISSOCIATION", "DivergenceError", "DriftMatchProblem",
    "EdgeListGraph", "Generator", "InvalidPartitionError", "JumpPath",
    "LumpabilityResult", "ModelDocument", "Multiset", "ParseError",
    "Partition", "ProjectionFailureError", "PropensityOverflowError",
    "RateInterval", "Reaction", "ReactionNetwork", "ReconstructionFailureError",
    "ReconstructionResult", "ScaledKinetics", "Signature", "SirParams",
    "Species", "StateSpace", "StructuralError", "Trajectory", "VectorField",
    "block_indicator", "block_projection", "block_sums", "build_drift_match",
    "build_generator", "check_equivalence", "check_ordinary_lumpability",
    "coarsest_equivalence", "distribution_to_csv", "enumerate_ball",
    "enumerate_states", "jump_path_to_csv",
    "evaluate_cost", "falling_binomial", "multisite_binding_model",
    "parse_edge_list", "parse_model", "parse_partition_file",
    "project_control", "quotient", "rate_between", "reconstruct_trajectory",
    "refine_partition", "refines", "scaled_generator", "schedule_from_csv",
    "schedule_to_csv", "serialize_model", "simulate", "sir_network_model",
    "sir_star_model", "solve_box_ls", "species_signature", "ssa_simulate",
    "trajectory_from_csv", "trajectory_to_csv", "transient_solve",
    "vector_field",
]

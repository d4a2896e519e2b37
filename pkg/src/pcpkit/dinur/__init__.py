"""CNF to constant-query verifier: the reduction chain and its runner."""
from ..cnf import Cnf, parse_dimacs, split_to_width3
from .alphabet import alphabet_reduce
from .config import PipelineConfig, dumps_config, loads_config
from .cooklevin import TmSpec, cooklevin, simulate_accepts
from .pipeline import (PartialRun, VerifierDescriptor, accept_prob, amplify_once, descriptor_for,
                       dumps_descriptor, honest_proof, loads_descriptor, np_witness_check, pcp_verify,
                       run_pipeline)
from .powering import PoweredInstance, plurality_assignment, power_t
from .stages import Stage, make_nice, qcsp_to_2cspW, regularize, stage_unsat, to_qcsp

__all__ = [
    "Cnf", "parse_dimacs", "split_to_width3", "alphabet_reduce", "PipelineConfig", "dumps_config",
    "loads_config", "TmSpec", "cooklevin", "simulate_accepts", "PartialRun", "VerifierDescriptor",
    "accept_prob", "amplify_once", "descriptor_for", "dumps_descriptor", "honest_proof",
    "loads_descriptor", "np_witness_check", "pcp_verify", "run_pipeline", "PoweredInstance",
    "plurality_assignment", "power_t", "Stage", "make_nice", "qcsp_to_2cspW", "regularize",
    "stage_unsat", "to_qcsp",
]

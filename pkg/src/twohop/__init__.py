"""Two-hop noisy teaching: exponents, block protocols and ML decoding."""
from .channel import Dmc, compose, from_descriptor, make_bsc, make_reverse_z, swap_inputs
from .errors import ConsistencyError, DomainError
from .exponent import (ExponentReport, binary_kl, block_converse, e1, gamma_balanced, mu,
                       one_hop_rate, rho_s, trivial_converse, two_hop_rate)
from .harness import ExperimentConfig, exact_block_verification, fit_exponent, run_point, sweep
from .protocol import ProtocolSpec, teach_stream

__all__ = [
    "Dmc", "compose", "from_descriptor", "make_bsc", "make_reverse_z", "swap_inputs",
    "ConsistencyError", "DomainError",
    "ExponentReport", "binary_kl", "block_converse", "e1", "gamma_balanced", "mu",
    "one_hop_rate", "rho_s", "trivial_converse", "two_hop_rate",
    "ExperimentConfig", "exact_block_verification", "fit_exponent", "run_point", "sweep",
    "ProtocolSpec", "teach_stream",
]

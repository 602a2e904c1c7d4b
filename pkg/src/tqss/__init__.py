"""Simulation of (t, n) threshold d-level quantum secret sharing over the QFT."""

from .field import (
    FieldElement,
    Polynomial,
    PrimeModulus,
    Shadow,
    Share,
    compute_shadow,
    distribute_shares,
    eval_polynomial,
    lagrange_coefficient,
    mod_inverse,
    reconstruct_classical,
    sample_polynomial,
    select_prime,
)
from .protocol import ProtocolConfig, ReconstructionResult, Transcript, run_protocol
from .qudit import Basis, BasisLabel, MeasurementOutcome, QuditState

__version__ = "0.1.0"

"""Broadcast Bell scenario: simulation, witness functional and self-testing checks."""

__version__ = "0.1.0"

from .bowles import bowles_score, classical_bound_bruteforce, correlators, link_scores
from .kit import (
    Instrument,
    Povm,
    bell_state,
    binary_povm,
    ghz,
    pauli,
    purify,
    random_density,
    random_product,
    random_pure,
    w_state,
    werner_state,
)
from .network import Behavior, BroadcastModel, behavior, honest_model, mixture_behavior, transpose_model
from .selftest import (
    BranchDecomposition,
    corrected_channel,
    extract_branches,
    extraction_instrument,
    pauli_tomography,
    pt_spectrum_report,
    pure_refinement_check,
    reconstruct,
)
from .tensor import (
    LabeledOperator,
    apply,
    hermitian_eigs,
    kron,
    partial_trace,
    partial_transpose,
    permute_subsystems,
)
from .witness import (
    NotNPTError,
    WitnessExpansion,
    broadcast_functional,
    npt_witness,
    pauli_expansion,
    verify_honest_identity,
    werner_sweep,
)

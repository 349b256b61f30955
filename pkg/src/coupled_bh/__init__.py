"""Two excitations in coupled Bose-Hubbard chains: exact diagonalization, Bethe ansatz and dynamics."""

from .model import ModelParams, TwoExcitationState, aa_pair, ab_pair, apply_hamiltonian, normalize_state, residual

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "TwoExcitationState",
    "aa_pair",
    "ab_pair",
    "apply_hamiltonian",
    "normalize_state",
    "residual",
    "__version__",
]

from pqci.sparsesim.layout import Register, RegisterLayout
from pqci.sparsesim.state import (
    NORM_TOL,
    PRUNE_TOL,
    SimulationError,
    SparseState,
    as_rng,
    fidelity,
    new_state,
)

__all__ = [
    "NORM_TOL",
    "PRUNE_TOL",
    "Register",
    "RegisterLayout",
    "SimulationError",
    "SparseState",
    "as_rng",
    "fidelity",
    "new_state",
]

"""Random Clifford circuits built from graph-state blocks.

Exact stabilizer evolution, Heisenberg Pauli dynamics, block descriptors
and LC classification, ensemble simulation, and velocity extraction.
"""

__version__ = "0.1.0"

from .graphs import (
    BlockDescriptors,
    GraphSpec,
    average_height,
    connectivity_wp,
    height_function,
    lc_equivalent,
    lc_orbit,
    local_complement,
    path_graph,
    preparation_circuit,
    ring_graph,
    star_graph,
)
from .pauli import PauliString
from .stabilizer import StabilizerTableau

__all__ = [
    "BlockDescriptors",
    "GraphSpec",
    "PauliString",
    "StabilizerTableau",
    "average_height",
    "connectivity_wp",
    "height_function",
    "lc_equivalent",
    "lc_orbit",
    "local_complement",
    "path_graph",
    "preparation_circuit",
    "ring_graph",
    "star_graph",
    "__version__",
]

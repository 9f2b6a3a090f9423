"""Theory uploads: classical probability theory and finite-dimensional quantum theory."""

from .classical import ClassicalBackend, ClassicalOperation, classical_all_black
from .oracle import oracle_probability
from .quantum import QuantumBackend, QuantumOperation, default_quantum_fiducials, quantum_all_black

BACKENDS = {"classical": ClassicalBackend, "quantum": QuantumBackend}


def get_backend(name):
    if not isinstance(name, str):
        return name
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None


__all__ = [
    "BACKENDS",
    "ClassicalBackend",
    "ClassicalOperation",
    "QuantumBackend",
    "QuantumOperation",
    "classical_all_black",
    "default_quantum_fiducials",
    "get_backend",
    "oracle_probability",
    "quantum_all_black",
]

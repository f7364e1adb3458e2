"""Core package: spin networks, operators, propagation and scheduling."""

__all__ = [
    "errors",
    "network",
    "factory",
    "hamiltonian",
    "propagation",
    "toggling",
    "scheduler",
    "trace_io",
]

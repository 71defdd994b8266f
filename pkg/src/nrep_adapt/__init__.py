"""nrep-adapt - stochastic ADAPT evolution of N-body states toward alleged reduced density matrices."""

__version__ = "1.0.0"

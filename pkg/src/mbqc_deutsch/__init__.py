"""Deutsch's algorithm on a four-qubit cluster state, simulated in the one-way model.

Submodules
----------
qcore
    Dense state, gate, measurement and metric primitives.
cluster
    Ideal cluster resources and noise channels.
mbqc
    Measurement programs with feed-forward, and oracle classification.
tomography
    Pauli-basis count simulation, maximum-likelihood reconstruction,
    Monte Carlo error bars.
cli
    ``mbqc-deutsch`` command line.
"""

from .errors import ConfigurationError, EstimationError, ImpossibleOutcomeError, MBQCError
from .tomography import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigurationError",
    "EstimationError",
    "ImpossibleOutcomeError",
    "MBQCError",
]

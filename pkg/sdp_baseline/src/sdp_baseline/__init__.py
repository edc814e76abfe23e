"""Convex-relaxation baseline for budgeted sensor selection.

Exchanges instance and selection files with the `ksched` scheduler without
importing it: `parse_instance` reads the shared instance format (explicit or
generator measurements), `solve_sdp` computes the semidefinite lower bound
on the budget-K posterior MSE, `round_topk` converts the fractional weights
to an integral selection, and `save_selection` writes it in the shared
selection format for the scheduler CLI to score.
"""

from .io import (
    InstanceFormatError,
    ParameterError,
    ParsedInstance,
    parse_instance,
    save_selection,
)
from .solver import SdpSolution, SolverError, round_topk, solve_sdp

__all__ = [
    "InstanceFormatError",
    "ParameterError",
    "ParsedInstance",
    "SdpSolution",
    "SolverError",
    "parse_instance",
    "round_topk",
    "save_selection",
    "solve_sdp",
]

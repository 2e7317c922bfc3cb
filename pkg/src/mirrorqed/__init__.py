"""Simulator and analysis toolkit for a driven two-level emitter in a
semi-infinite waveguide (an atom in front of a mirror).

The feedback delay is handled by a time-bin matrix-product-state
integration of the pure-state dynamics; steady states are classified
against the full Markovian steady-state family by trace distance.
"""

__version__ = "0.1.0"

from .feedback import (
    ConvergenceError,
    SteadyStateResult,
    Trajectory,
    UndefinedRateError,
    effective_decay_rate,
    markov_limit_unitary,
    simulate,
    steady_state_nm,
    step_unitary,
)
from .lindblad import (
    DegenerateParametersError,
    MarkovParams,
    evolve,
    markov_boundary,
    steady_state,
)
from .measures import (
    BlpResult,
    NonInvertibleStateError,
    NssOptions,
    NssResult,
    UnphysicalFitError,
    blp,
    fit_effective_rates,
    nss,
    trace_distance,
)
from .params import NumericsParams, SystemParams
from .qubit import QubitDensityMatrix

__all__ = [
    "BlpResult",
    "ConvergenceError",
    "DegenerateParametersError",
    "MarkovParams",
    "NonInvertibleStateError",
    "NssOptions",
    "NssResult",
    "NumericsParams",
    "QubitDensityMatrix",
    "SteadyStateResult",
    "SystemParams",
    "Trajectory",
    "UndefinedRateError",
    "UnphysicalFitError",
    "blp",
    "effective_decay_rate",
    "evolve",
    "fit_effective_rates",
    "markov_boundary",
    "markov_limit_unitary",
    "nss",
    "simulate",
    "steady_state",
    "steady_state_nm",
    "step_unitary",
    "trace_distance",
    "__version__",
]

"""Pre-orthogonal adaptive Fourier decomposition over Poisson, heat,
spherical Poisson and convolution kernel dictionaries."""

__version__ = "0.1.0"

from .kernels import (
    Atom,
    ConvolutionProfile,
    KernelError,
    KernelFamily,
    Kind,
    ParamPoint,
    QuadratureBox,
    eval_E,
    eval_h,
    eval_K,
    eval_K_derivative,
    kernel_norm,
)
from .signals import (
    KernelCombination,
    SampledBoundary,
    reconstruct_boundary,
    signal_inner,
    signal_norm,
)
from .engine import (
    BoxBoundaryWarning,
    Decomposition,
    DegenerateCandidate,
    DictionaryExhausted,
    SelectionConfig,
    candidate_score,
    commit_atom,
    gram_matrix,
    gs_step,
    is_consecutive,
    maximal_select,
    multiple_candidates,
    poafd_run,
    relative_error,
)

__all__ = [
    "Atom",
    "BoxBoundaryWarning",
    "ConvolutionProfile",
    "Decomposition",
    "DegenerateCandidate",
    "DictionaryExhausted",
    "KernelCombination",
    "KernelError",
    "KernelFamily",
    "Kind",
    "ParamPoint",
    "QuadratureBox",
    "SampledBoundary",
    "SelectionConfig",
    "candidate_score",
    "commit_atom",
    "eval_E",
    "eval_K",
    "eval_K_derivative",
    "eval_h",
    "gram_matrix",
    "gs_step",
    "is_consecutive",
    "kernel_norm",
    "maximal_select",
    "multiple_candidates",
    "poafd_run",
    "reconstruct_boundary",
    "relative_error",
    "signal_inner",
    "signal_norm",
]

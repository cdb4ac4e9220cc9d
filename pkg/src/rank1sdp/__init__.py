"""Best rank-1 approximations of real tensors via semidefinite relaxations."""

from .generators import FAMILIES, generate
from .io import TensorFormatError, read_tensor, write_report, write_tensor
from .pipeline import (
    PipelineConfig,
    Rank1Report,
    approx_auto,
    approx_nonsym,
    approx_sym_even,
    approx_sym_odd,
    baseline,
    compare_methods,
)
from .tensor import GenTensor, Rank1Tensor, SymTensor, norm, residual

__all__ = [
    "FAMILIES",
    "generate",
    "TensorFormatError",
    "read_tensor",
    "write_report",
    "write_tensor",
    "PipelineConfig",
    "Rank1Report",
    "approx_auto",
    "approx_nonsym",
    "approx_sym_even",
    "approx_sym_odd",
    "baseline",
    "compare_methods",
    "GenTensor",
    "Rank1Tensor",
    "SymTensor",
    "norm",
    "residual",
]

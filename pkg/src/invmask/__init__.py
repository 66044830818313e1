"""Invertible image masking: hide a protected image inside a cover image.

put_on embeds, put_off recovers; the same network weights drive both
directions exactly, so nothing is lost when the residual m is kept, and a
trained network recovers well even when m is replaced by fresh noise.
"""

from .losses import LossReport, LossWeights
from .metrics import MetricReport, compute_metrics
from .network import MaskedResult, MaskNetwork, RecoveredResult, sample_aux
from .tensor import Parameter, Tensor, grad_check, no_grad
from .trainer import EvalReport, TrainConfig, TrainLog, evaluate, sweep_lambda, train

__version__ = "0.1.0"

__all__ = [
    "Tensor",
    "Parameter",
    "no_grad",
    "grad_check",
    "MaskNetwork",
    "MaskedResult",
    "RecoveredResult",
    "sample_aux",
    "LossWeights",
    "LossReport",
    "MetricReport",
    "compute_metrics",
    "TrainConfig",
    "TrainLog",
    "EvalReport",
    "train",
    "evaluate",
    "sweep_lambda",
    "__version__",
]

"""Training losses: embedding, recovering, and low-frequency wavelet terms.

All three reduce a difference to a scalar mean over every element.  Squared
error is the default; absolute error is available as a switch.  Losses live
in the [0,1] pixel domain; the 0-255 scale belongs to reported metrics.
"""

from dataclasses import dataclass

from .errors import ShapeError
from .tensor import Tensor
from .wavelet import dwt_haar, extract_ll


@dataclass(frozen=True)
class LossWeights:
    """Weights for the three loss terms; 1:3:1 recovers best in practice."""

    lambda1: float = 1.0
    lambda2: float = 3.0
    lambda3: float = 1.0

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValueError(f"loss weights must be non-negative, got {self}")
        if self.lambda1 == self.lambda2 == self.lambda3 == 0:
            raise ValueError("at least one loss weight must be positive")

    @classmethod
    def from_string(cls, text):
        """Parse a colon-separated ratio such as '1:3:1'."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected three colon-separated weights, got {text!r}")
        return cls(*(float(p) for p in parts))


@dataclass(frozen=True)
class LossReport:
    embedding: float
    recovering: float
    low_frequency: float
    total: float


def _reduce(diff, error):
    if error == "squared":
        return (diff * diff).mean()
    if error == "absolute":
        return diff.abs().mean()
    raise ValueError(f"error must be 'squared' or 'absolute', got {error!r}")


def _check(a, b, what):
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shapes {a.shape} and {b.shape} differ")


def embedding_loss(mask, masked, error="squared"):
    """How far the masked image drifted from the cover it should resemble."""
    _check(mask, masked, "embedding_loss")
    return _reduce(masked - mask, error)


def recovering_loss(protected, recovered, error="squared"):
    """How far the recovered image is from the original protected image."""
    _check(protected, recovered, "recovering_loss")
    return _reduce(recovered - protected, error)


def low_frequency_loss(mask, masked, error="squared"):
    """Difference between the LL wavelet sub-bands of cover and masked image.

    Penalizes visible low-frequency drift while leaving the network free to
    hide information in the high-frequency sub-bands.
    """
    _check(mask, masked, "low_frequency_loss")
    return _reduce(extract_ll(dwt_haar(masked)) - extract_ll(dwt_haar(mask)), error)


def total_loss(embedding, recovering, low_frequency, weights=LossWeights()):
    """Weighted sum as a differentiable tensor plus a plain-float report.

    The report's total is recomputed in python floats so the identity
    total == l1*e + l2*r + l3*lf holds exactly on the report fields.
    """
    for t in (embedding, recovering, low_frequency):
        if not isinstance(t, Tensor) or t.values.size != 1:
            raise ShapeError("total_loss expects scalar tensors")
    total = (
        embedding * weights.lambda1
        + recovering * weights.lambda2
        + low_frequency * weights.lambda3
    )
    report = LossReport(
        embedding=embedding.item(),
        recovering=recovering.item(),
        low_frequency=low_frequency.item(),
        total=weights.lambda1 * embedding.item()
        + weights.lambda2 * recovering.item()
        + weights.lambda3 * low_frequency.item(),
    )
    return total, report

"""The full invertible masking network: DWT, N coupling blocks, IWT.

put_on embeds a protected image into a mask image, yielding the masked
image plus the lost-information residual m.  put_off runs the blocks in
reverse; fed the true m it reconstructs both inputs up to float rounding,
fed a fresh Gaussian sample it performs the normal recovery path that
training makes accurate.

Values stay in the [0,1] float domain throughout and are never clamped
here; quantization belongs to image I/O, and clamping inside the network
would break invertibility.
"""

from dataclasses import dataclass

import numpy as np

from .coupling import CouplingBlock
from .errors import ShapeError
from .tensor import Tensor
from .wavelet import dwt_haar, iwt_haar


@dataclass
class MaskedResult:
    masked: Tensor
    lost: Tensor


@dataclass
class RecoveredResult:
    recovered: Tensor
    r_mask: Tensor


def sample_aux(shape, seed):
    """Reproducible standard-normal tensor to stand in for the discarded m."""
    values = np.random.default_rng(seed).standard_normal(shape).astype(np.float32)
    return Tensor(values)


class MaskNetwork:
    """N invertible blocks operating on wavelet sub-bands of both images.

    Fully convolutional: a network built (or trained) at one resolution runs
    at any even H, W.  Freshly constructed networks are exactly the identity,
    so put_on returns (mask, protected) untouched up to transform rounding.
    """

    def __init__(self, num_blocks=8, image_channels=3, growth=32, clamp=2.0, seed=0, dtype=np.float32):
        if not 1 <= num_blocks <= 32:
            raise ValueError(f"num_blocks must be in 1..32, got {num_blocks}")
        self.num_blocks = num_blocks
        self.image_channels = image_channels
        self.growth = growth
        self.clamp = float(clamp)
        self.metadata = {}
        rng = np.random.default_rng(seed)
        branch = 4 * image_channels
        self.blocks = [
            CouplingBlock(branch, growth, clamp, f"block{i + 1}", rng, dtype)
            for i in range(num_blocks)
        ]

    def _check_pair(self, a, b, what):
        if a.shape != b.shape:
            raise ShapeError(f"{what}: shapes {a.shape} and {b.shape} differ")
        if a.shape[1] != self.image_channels:
            raise ShapeError(f"{what}: expected {self.image_channels} channels, got {a.shape[1]}")

    def put_on(self, protected, mask):
        """Embed protected into mask: returns the masked image and lost info m."""
        self._check_pair(protected, mask, "put_on")
        p = dwt_haar(protected)
        m = dwt_haar(mask)
        for block in self.blocks:
            p, m = block.forward(p, m)
        return MaskedResult(masked=iwt_haar(m), lost=iwt_haar(p))

    def put_off(self, masked, aux):
        """Invert the embedding: aux is the true m for exact recovery, or a
        sample_aux draw for the normal path."""
        self._check_pair(masked, aux, "put_off")
        p = dwt_haar(aux)
        m = dwt_haar(masked)
        for block in reversed(self.blocks):
            p, m = block.inverse(p, m)
        return RecoveredResult(recovered=iwt_haar(p), r_mask=iwt_haar(m))

    def parameters(self):
        for block in self.blocks:
            yield from block.parameters()

    def named_parameters(self):
        for p in self.parameters():
            yield p.name, p

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def to_dtype(self, dtype):
        """In-place parameter dtype change; used for float64 gradient checks."""
        for p in self.parameters():
            p.values = p.values.astype(dtype)
            p.grad = None
        return self

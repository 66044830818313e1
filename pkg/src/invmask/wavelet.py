"""Single-level 2-D Haar transform, orthonormal normalization.

A (B, C, H, W) image maps to (B, 4C, H/2, W/2) sub-bands in sub-band-major
channel order: channels [0,C) hold LL, then HL, LH, HH.  With the orthonormal
scaling (divide by 2 per 2x2 block) the transform preserves energy, so its
adjoint equals its inverse and both directions backpropagate through the
opposite transform.

For a 2x2 block [[a, b], [c, d]] per channel:

    LL = (a+b+c+d)/2    HL = (a-b+c-d)/2
    LH = (a+b-c-d)/2    HH = (a-b-c+d)/2

Odd image sizes are rejected rather than padded; pad before calling so the
conceal and reveal paths cannot disagree about geometry.
"""

import numpy as np

from .errors import ShapeError
from .tensor import Tensor, _make, _accumulate, narrow_channels


def _dwt_values(x):
    a = x[:, :, 0::2, 0::2]
    b = x[:, :, 0::2, 1::2]
    c = x[:, :, 1::2, 0::2]
    d = x[:, :, 1::2, 1::2]
    half = x.dtype.type(0.5)
    return np.concatenate(
        [
            (a + b + c + d) * half,
            (a - b + c - d) * half,
            (a + b - c - d) * half,
            (a - b - c + d) * half,
        ],
        axis=1,
    )


def _iwt_values(s):
    n, c4, h2, w2 = s.shape
    c = c4 // 4
    ll, hl, lh, hh = s[:, :c], s[:, c : 2 * c], s[:, 2 * c : 3 * c], s[:, 3 * c :]
    half = s.dtype.type(0.5)
    out = np.empty((n, c, h2 * 2, w2 * 2), dtype=s.dtype)
    out[:, :, 0::2, 0::2] = (ll + hl + lh + hh) * half
    out[:, :, 0::2, 1::2] = (ll - hl + lh - hh) * half
    out[:, :, 1::2, 0::2] = (ll + hl - lh - hh) * half
    out[:, :, 1::2, 1::2] = (ll - hl - lh + hh) * half
    return out


def dwt_haar(image):
    """Forward transform: (B, C, H, W) -> (B, 4C, H/2, W/2); H and W even."""
    _, _, h, w = image.shape
    if h % 2 or w % 2:
        raise ShapeError(
            f"dwt_haar needs even height and width, got {h}x{w}; pad the image first"
        )
    out = _make(_dwt_values(image.values), (image,), "dwt_haar")
    if out._parents:
        out._backward_fn = lambda g: _accumulate(image, _iwt_values(g))
    return out


def iwt_haar(subbands):
    """Inverse transform: (B, 4C, H/2, W/2) -> (B, C, H, W)."""
    c4 = subbands.shape[1]
    if c4 % 4:
        raise ShapeError(f"iwt_haar needs a channel count divisible by 4, got {c4}")
    out = _make(_iwt_values(subbands.values), (subbands,), "iwt_haar")
    if out._parents:
        out._backward_fn = lambda g: _accumulate(subbands, _dwt_values(g))
    return out


def extract_ll(subbands):
    """The LL quarter of a sub-band tensor: channels [0, C)."""
    c4 = subbands.shape[1]
    if c4 % 4:
        raise ShapeError(f"extract_ll needs a channel count divisible by 4, got {c4}")
    return narrow_channels(subbands, 0, c4 // 4)

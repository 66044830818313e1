"""Image and raw-tensor file handling.

Images are 8-bit RGB PNG on disk and (1, 3, H, W) float32 in [0,1] in
memory.  Saving clamps, scales by 255 and rounds half to even, so loading a
file and saving it again reproduces the raster bytes exactly.

The lost-information tensor m is unbounded and must survive a round trip
bit-exactly, so it gets its own raw format instead of an image: four
little-endian u32 shape fields followed by float32 values.
"""

import struct

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageReadError, ShapeError
from .tensor import Tensor


def load_image(path):
    """Read a PNG (or other 8-bit raster) into a (1, 3, H, W) tensor."""
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            raster = np.asarray(rgb, dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise ImageReadError(f"cannot read image {path}: {exc}") from exc
    values = (raster.astype(np.float32) / 255.0).transpose(2, 0, 1)[None]
    return Tensor(values)


def save_image(path, tensor):
    """Write a single-image batch as 8-bit RGB PNG (clamp, x255, round-half-even)."""
    values = tensor.values if isinstance(tensor, Tensor) else np.asarray(tensor)
    if values.ndim != 4 or values.shape[0] != 1 or values.shape[1] != 3:
        raise ShapeError(f"save_image expects shape (1, 3, H, W), got {values.shape}")
    scaled = np.rint(np.clip(values[0], 0.0, 1.0).astype(np.float64) * 255.0)
    raster = scaled.astype(np.uint8).transpose(1, 2, 0)
    Image.fromarray(raster, mode="RGB").save(path)


def quantize_to_bytes(values):
    """The exact 8-bit mapping save_image applies, for in-memory comparisons."""
    return np.rint(np.clip(values, 0.0, 1.0).astype(np.float64) * 255.0).astype(np.uint8)


def save_tensor(path, tensor):
    """Raw float32 dump: 4 x u32 little-endian shape header, then values."""
    values = tensor.values if isinstance(tensor, Tensor) else np.asarray(tensor)
    if values.ndim != 4:
        raise ShapeError(f"save_tensor expects a rank-4 tensor, got shape {values.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4I", *values.shape))
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def load_tensor(path):
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ImageReadError(f"cannot read tensor file {path}: {exc}") from exc
    if len(blob) < 16:
        raise ImageReadError(f"tensor file {path} is truncated (no shape header)")
    shape = struct.unpack("<4I", blob[:16])
    count = int(np.prod(shape))
    body = blob[16:]
    if len(body) != 4 * count:
        raise ImageReadError(
            f"tensor file {path}: header promises {count} float32 values, "
            f"found {len(body) // 4}"
        )
    values = np.frombuffer(body, dtype="<f4").reshape(shape).astype(np.float32)
    return Tensor(values)

"""Binary model checkpoints with a named parameter table and CRC tail.

Layout, all little-endian:

    magic "IMN1" | u16 version | u32 num_blocks | u32 image_channels
    | u32 growth | f32 clamp | u32 param_count
    | per parameter: u16 name_len, name utf-8, 4 x u32 shape, f32 values
    | u32 CRC-32 of everything before it

Parameters are matched by name on load, so the table order never matters.
Any magic, version, CRC, name or shape disagreement refuses the file.
"""

import struct
import zlib

import numpy as np

from .errors import CheckpointError
from .network import MaskNetwork

MAGIC = b"IMN1"
VERSION = 1


def save_checkpoint(path, model):
    parts = [MAGIC, struct.pack("<H", VERSION)]
    parts.append(
        struct.pack(
            "<IIIfI",
            model.num_blocks,
            model.image_channels,
            model.growth,
            model.clamp,
            sum(1 for _ in model.parameters()),
        )
    )
    for name, param in model.named_parameters():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<4I", *param.shape))
        parts.append(np.ascontiguousarray(param.values, dtype="<f4").tobytes())
    blob = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob)))


def load_checkpoint(path):
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(blob) < 4 + 2 + 20 + 4:
        raise CheckpointError(f"checkpoint {path} is truncated")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError(f"checkpoint {path} failed its CRC check")
    if body[:4] != MAGIC:
        raise CheckpointError(f"checkpoint {path} has wrong magic bytes {body[:4]!r}")
    (version,) = struct.unpack("<H", body[4:6])
    if version != VERSION:
        raise CheckpointError(f"checkpoint {path} has unsupported version {version}")
    num_blocks, channels, growth, clamp, count = struct.unpack("<IIIfI", body[6:26])

    model = MaskNetwork(num_blocks=num_blocks, image_channels=channels, growth=growth, clamp=clamp, seed=0)
    table = dict(model.named_parameters())
    seen = set()
    at = 26
    for _ in range(count):
        try:
            (name_len,) = struct.unpack_from("<H", body, at)
            at += 2
            name = body[at : at + name_len].decode("utf-8")
            at += name_len
            shape = struct.unpack_from("<4I", body, at)
            at += 16
            size = 4 * int(np.prod(shape))
            values = np.frombuffer(body[at : at + size], dtype="<f4").reshape(shape)
            at += size
        except (struct.error, ValueError) as exc:
            raise CheckpointError(f"checkpoint {path}: malformed parameter table: {exc}") from exc
        if name not in table:
            raise CheckpointError(f"checkpoint {path}: unknown parameter {name!r}")
        if name in seen:
            raise CheckpointError(f"checkpoint {path}: duplicate parameter {name!r}")
        if table[name].shape != shape:
            raise CheckpointError(
                f"checkpoint {path}: parameter {name!r} has shape {shape}, model expects {table[name].shape}"
            )
        table[name].values = values.astype(np.float32).copy()
        seen.add(name)
    if at != len(body):
        raise CheckpointError(f"checkpoint {path} has {len(body) - at} trailing bytes")
    if len(seen) != len(table):
        missing = sorted(set(table) - seen)
        raise CheckpointError(f"checkpoint {path}: missing parameters {missing[:3]}...")
    return model

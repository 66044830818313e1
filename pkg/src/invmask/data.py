"""Dataset loading and a procedural image corpus for desk-scale runs.

Training images are center-cropped square, bilinearly resized to the
working size and stacked as one float32 array.  The synthetic generator
produces smooth colorful compositions (gradients, soft shapes, gentle
texture, a little grain) so that a small corpus still has the broad
structure natural photographs have.
"""

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFilter
from scipy.ndimage import gaussian_filter

from .errors import ImageReadError

EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


def list_images(dataset_dir):
    root = Path(dataset_dir)
    if not root.is_dir():
        raise ImageReadError(f"dataset directory {dataset_dir} does not exist")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in EXTENSIONS)
    if not paths:
        raise ImageReadError(f"no images found under {dataset_dir}")
    return paths


def load_images(dataset_dir, image_size):
    """All images in a directory as one (K, 3, size, size) float32 array."""
    stack = []
    for path in list_images(dataset_dir):
        try:
            with Image.open(path) as img:
                rgb = img.convert("RGB")
                side = min(rgb.size)
                left = (rgb.size[0] - side) // 2
                top = (rgb.size[1] - side) // 2
                rgb = rgb.crop((left, top, left + side, top + side))
                if side != image_size:
                    rgb = rgb.resize((image_size, image_size), Image.BILINEAR)
                raster = np.asarray(rgb, dtype=np.uint8)
        except OSError as exc:
            raise ImageReadError(f"cannot read image {path}: {exc}") from exc
        stack.append((raster.astype(np.float32) / 255.0).transpose(2, 0, 1))
    return np.stack(stack)


def _random_color(rng):
    return tuple(int(v) for v in rng.integers(30, 226, size=3))


def synth_image(size, rng):
    """One synthetic photo-like image as a PIL RGB image."""
    # smooth two-color gradient background
    ax = rng.random() * 2 - 1
    ay = rng.random() * 2 - 1
    xs, ys = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size))
    ramp = (ax * xs + ay * ys - min(ax, 0) - min(ay, 0)) / (abs(ax) + abs(ay) + 1e-6)
    c0 = np.array(_random_color(rng), dtype=np.float64)
    c1 = np.array(_random_color(rng), dtype=np.float64)
    base = c0[None, None] * (1 - ramp[..., None]) + c1[None, None] * ramp[..., None]
    img = Image.fromarray(base.astype(np.uint8), "RGB")

    draw = ImageDraw.Draw(img, "RGBA")
    for _ in range(int(rng.integers(4, 10))):
        x0, y0 = rng.integers(-size // 3, size, size=2)
        w, h = rng.integers(size // 8, size // 2, size=2)
        color = _random_color(rng) + (int(rng.integers(90, 220)),)
        box = (int(x0), int(y0), int(x0 + w), int(y0 + h))
        if rng.random() < 0.5:
            draw.ellipse(box, fill=color)
        else:
            draw.rectangle(box, fill=color)

    # gentle large-scale texture: coarse noise field upsampled bilinearly
    coarse = rng.random((size // 16 + 1, size // 16 + 1, 3)) * 30 - 15
    texture = np.asarray(
        Image.fromarray(((coarse + 15) * 8).clip(0, 255).astype(np.uint8), "RGB").resize(
            (size, size), Image.BILINEAR
        ),
        dtype=np.float64,
    ) / 8.0 - 15.0
    blended = np.asarray(img, dtype=np.float64) + texture
    img = Image.fromarray(blended.clip(0, 255).astype(np.uint8), "RGB")
    img = img.filter(ImageFilter.GaussianBlur(radius=1.5))

    # fine grain, added after the blur so it survives it; band-limited
    # (blurred white noise) rather than i.i.d. so it reads as film grain
    raw = rng.standard_normal((size, size, 3))
    soft = gaussian_filter(raw, sigma=(1.0, 1.0, 0.0))
    grain = soft * (6.5 / max(soft.std(), 1e-9))
    out = np.asarray(img, dtype=np.float64) + grain
    return Image.fromarray(out.clip(0, 255).astype(np.uint8), "RGB")


def make_corpus(out_dir, count, size, seed):
    """Write ``count`` synthetic PNGs; returns the directory path."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for i in range(count):
        synth_image(size, rng).save(root / f"img_{i:04d}.png")
    return root

"""Image decoding, encoding and resizing (Pillow backed)."""

import numpy as np
from PIL import Image

from ._validation import check_image
from .errors import DataError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def read_image(path):
    """Decode a PNG/JPEG file into an (H, W, 3) uint8 RGB array."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot decode image {path}: {exc}") from exc


def write_png(path, image):
    try:
        Image.fromarray(check_image(image), mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def resize_bilinear(image, size):
    """Resize to ``size = (height, width)``; a same-size request is a copy."""
    image = check_image(image)
    h, w = size
    if image.shape[:2] == (h, w):
        return image.copy()
    out = Image.fromarray(image, mode="RGB").resize((w, h), resample=Image.Resampling.BILINEAR)
    return np.asarray(out, dtype=np.uint8).copy()


def to_tensor(images):
    """Stack uint8 (H, W, 3) images into a float32 (N, 3, H, W) batch in [0, 1]."""
    arr = np.stack([check_image(im) for im in images]).astype(np.float32) / np.float32(255)
    return np.ascontiguousarray(arr.transpose(0, 3, 1, 2))

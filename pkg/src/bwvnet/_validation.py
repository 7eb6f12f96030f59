"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

import numpy as np

from .errors import InvalidInputError

LABELS = ("bwv", "nonbwv")
BWV, NON_BWV = 0, 1


def check_image(image, name="image"):
    """Return ``image`` as a C-contiguous ``uint8`` array of shape (H, W, 3)."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidInputError(f"{name} is empty")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 255:
            raise InvalidInputError(f"{name} must hold 8-bit pixel values, got dtype {arr.dtype}")
        arr = arr.astype(np.uint8)
    return np.ascontiguousarray(arr)


def check_batch(x, channels=None, name="x"):
    """Validate an NCHW float tensor."""
    x = np.asarray(x)
    if x.ndim != 4:
        raise InvalidInputError(f"{name} must be 4-D (N, C, H, W), got shape {x.shape}")
    if x.shape[0] == 0:
        raise InvalidInputError(f"{name} has an empty batch")
    if channels is not None and x.shape[1] != channels:
        raise InvalidInputError(f"{name} has {x.shape[1]} channels, expected {channels}")
    return x


def encode_labels(y):
    """Map label tokens (``"bwv"``/``"nonbwv"``, any case) or ints to class indices.

    Class 0 is BWV (the positive class), class 1 is non-BWV.
    """
    out = []
    for v in y:
        if isinstance(v, (str, np.str_)):
            token = str(v).strip().lower().replace("-", "").replace("_", "")
            if token not in LABELS:
                raise InvalidInputError(f"unknown label token {v!r}")
            out.append(LABELS.index(token))
        else:
            iv = int(v)
            if iv not in (BWV, NON_BWV) or iv != v:
                raise InvalidInputError(f"class index must be 0 or 1, got {v!r}")
            out.append(iv)
    return np.asarray(out, dtype=np.int64)


def decode_labels(idx):
    return [LABELS[int(i)] for i in idx]

"""Deterministic dataset augmentation: three rotations, two flips and a
centered zoom applied to the first half of the images."""

import math
import os
from dataclasses import replace
from enum import Enum

import numpy as np

from ._validation import check_image
from .errors import DataError, InvalidInputError
from .images import read_image, resize_bilinear, write_png


class Transform(str, Enum):
    IDENTITY = "identity"
    ROT90 = "rot90"
    ROT180 = "rot180"
    ROT270 = "rot270"
    FLIP_H = "fliph"
    FLIP_V = "flipv"
    ZOOM_IN = "zoomin"


ALWAYS = (Transform.ROT90, Transform.ROT180, Transform.ROT270, Transform.FLIP_H, Transform.FLIP_V)
DEFAULT_ZOOM = 1.25


def apply_transform(image, transform, zoom_factor=DEFAULT_ZOOM):
    """Apply one transform. ROT90 turns clockwise: pixel (r, c) moves to (c, H-1-r)."""
    image = check_image(image)
    t = Transform(transform)
    if t is Transform.IDENTITY:
        return image.copy()
    if t is Transform.ROT90:
        return np.ascontiguousarray(np.rot90(image, k=-1))
    if t is Transform.ROT180:
        return np.ascontiguousarray(np.rot90(image, k=2))
    if t is Transform.ROT270:
        return np.ascontiguousarray(np.rot90(image, k=1))
    if t is Transform.FLIP_H:
        return np.ascontiguousarray(image[:, ::-1])
    if t is Transform.FLIP_V:
        return np.ascontiguousarray(image[::-1])
    return zoom_in(image, zoom_factor)


def zoom_in(image, zoom_factor=DEFAULT_ZOOM):
    if not zoom_factor > 1:
        raise InvalidInputError(f"zoom_factor must exceed 1, got {zoom_factor}")
    h, w = image.shape[:2]
    ch, cw = max(1, int(h / zoom_factor)), max(1, int(w / zoom_factor))
    top, left = (h - ch) // 2, (w - cw) // 2
    return resize_bilinear(image[top:top + ch, left:left + cw], (h, w))


def augmented_count(n):
    return 6 * n + math.ceil(n / 2)


def augment_dataset(manifest, out_dir, zoom_factor=DEFAULT_ZOOM):
    """Write augmented copies of every original entry into ``out_dir``.

    Returns a new manifest holding the input entries followed by the new
    augmented entries, which inherit the label and split of their source.
    Originals that already have augmented copies are left alone.
    """
    if not zoom_factor > 1:
        raise InvalidInputError(f"zoom_factor must exceed 1, got {zoom_factor}")
    originals = [e for e in manifest.entries if e.origin == "original"]
    if not originals:
        return manifest.__class__([])
    os.makedirs(out_dir, exist_ok=True)
    n_zoom = math.ceil(len(originals) / 2)
    out = list(manifest.entries)
    done = {e.source_id for e in manifest.entries if e.origin == "augmented"}
    for i, entry in enumerate(originals):
        if entry.id in done:
            continue
        image = read_image(entry.path)
        kinds = ALWAYS + ((Transform.ZOOM_IN,) if i < n_zoom else ())
        stem = os.path.splitext(os.path.basename(entry.path))[0]
        for t in kinds:
            path = os.path.join(out_dir, f"{stem}__{t.value}.png")
            try:
                write_png(path, apply_transform(image, t, zoom_factor))
            except DataError as exc:
                raise DataError(f"failed writing augmented image {path}") from exc
            out.append(replace(entry, id=f"{entry.id}__{t.value}", path=path, origin="augmented",
                               source_id=entry.id, transform=t.value))
    return manifest.__class__(out)

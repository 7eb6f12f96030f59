"""Synthetic labeled lesion-like images for tests and demos.

BWV images carry one or more elliptical blobs whose pixels all lie inside
the default veil color range; non-BWV images carry a brown blob whose green
channel stays below that range. Backgrounds are noisy skin tones.
"""

import os

import numpy as np

from ._validation import BWV, LABELS, NON_BWV
from .images import write_png

SKIN = (205, 160, 140)
VEIL = (105, 86, 86)
BROWN = (120, 62, 45)


def _blob_mask(rng, size):
    yy, xx = np.mgrid[0:size, 0:size]
    cy, cx = rng.uniform(0.3, 0.7, 2) * size
    ry, rx = rng.uniform(0.12, 0.25, 2) * size
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def make_image(label, size=64, rng=None):
    rng = np.random.default_rng(rng)
    noise = rng.integers(-12, 13, size=(size, size, 3))
    img = np.clip(np.array(SKIN) + noise, 0, 255)
    mask = _blob_mask(rng, size)
    if label == BWV:
        # jitter stays inside the veil box: R 45..166, G and B 73..98
        jitter = rng.integers(-10, 11, size=(size, size, 3))
        blob = np.array(VEIL) + jitter
    else:
        jitter = rng.integers(-10, 11, size=(size, size, 3))
        blob = np.array(BROWN) + jitter
    img[mask] = blob[mask]
    return img.astype(np.uint8)


def make_dataset(n, size=64, seed=0):
    """Return ``(images, labels)`` with alternating classes, BWV first."""
    rng = np.random.default_rng(seed)
    labels = np.array([BWV if i % 2 == 0 else NON_BWV for i in range(n)])
    images = [make_image(int(lab), size, rng) for lab in labels]
    return images, labels


def write_dataset(out_dir, n, size=64, seed=0, prefix="img"):
    """Write PNGs plus ``labels.csv`` into ``out_dir``; returns the labels path."""
    os.makedirs(out_dir, exist_ok=True)
    images, labels = make_dataset(n, size, seed)
    rows = []
    for i, (img, lab) in enumerate(zip(images, labels)):
        stem = f"{prefix}{i:04d}"
        write_png(os.path.join(out_dir, f"{stem}.png"), img)
        rows.append(f"{stem},{LABELS[lab]}")
    path = os.path.join(out_dir, "labels.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("stem,label\n" + "\n".join(rows) + "\n")
    return path

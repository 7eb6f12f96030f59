"""Color-threshold patch annotation of blue-white veil (BWV).

A pixel has "veil color" when it falls inside an RGB box derived from 80
reference palette colors. Images are scanned in square patches; an image is
labeled BWV when enough patches contain veil-colored pixels.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ._validation import BWV, LABELS, NON_BWV, check_image, encode_labels
from .errors import InvalidInputError
from .metrics import ConfusionMatrix

RED = np.array([255, 0, 0], dtype=np.uint8)

_PALETTE_R = (
    73, 98, 83, 92, 79, 97, 85, 108, 71, 82, 80, 86, 75, 109, 89, 119, 96, 94, 103, 125,
    66, 90, 84, 117, 93, 81, 110, 138, 121, 50, 99, 139, 95, 120, 62, 88, 137, 114, 126, 106,
    118, 78, 102, 61, 87, 115, 56, 77, 74, 136, 98, 112, 116, 75, 130, 56, 129, 124, 104, 113,
    81, 92, 88, 166, 90, 109, 131, 79, 101, 114, 61, 108, 46, 161, 110, 111, 132, 91, 121, 135,
)
# green and blue are 73 for the first 50 palette colors and 98 for the last 30
PALETTE = tuple((r, 73, 73) if i < 50 else (r, 98, 98) for i, r in enumerate(_PALETTE_R))


@dataclass(frozen=True)
class ColorRange:
    r_min: int = 45
    r_max: int = 166
    g_min: int = 73
    g_max: int = 98
    b_min: int = 73
    b_max: int = 98

    def __post_init__(self):
        for lo, hi in (("r_min", "r_max"), ("g_min", "g_max"), ("b_min", "b_max")):
            a, b = getattr(self, lo), getattr(self, hi)
            if not (0 <= a <= 255 and 0 <= b <= 255):
                raise InvalidInputError(f"{lo}/{hi} must lie in 0..255, got {a}, {b}")
            if a > b:
                raise InvalidInputError(f"{lo}={a} exceeds {hi}={b}")

    @property
    def lower(self):
        return np.array([self.r_min, self.g_min, self.b_min], dtype=np.uint8)

    @property
    def upper(self):
        return np.array([self.r_max, self.g_max, self.b_max], dtype=np.uint8)

    @classmethod
    def from_palette(cls, palette=PALETTE):
        arr = np.asarray(palette)
        lo, hi = arr.min(axis=0), arr.max(axis=0)
        return cls(int(lo[0]), int(hi[0]), int(lo[1]), int(hi[1]), int(lo[2]), int(hi[2]))


DEFAULT_RANGE = ColorRange()


@dataclass
class PatchGrid:
    patch_size: int
    rows: int
    cols: int
    hit_counts: np.ndarray  # (rows, cols) int
    min_pixels: int = 1

    @property
    def flags(self):
        return self.hit_counts >= self.min_pixels

    def flagged(self):
        """Flagged patches as sorted ``[row, col]`` pairs."""
        return [[int(r), int(c)] for r, c in np.argwhere(self.flags)]


@dataclass
class AnnotationResult:
    label: str
    grid: PatchGrid
    rgb_extrema: dict = None  # {"r": [min, max], "g": ..., "b": ...} or None

    @property
    def is_bwv(self):
        return self.label == LABELS[BWV]


def pixel_in_range(rgb, color_range=DEFAULT_RANGE):
    r, g, b = (int(v) for v in rgb)
    cr = color_range
    return cr.r_min <= r <= cr.r_max and cr.g_min <= g <= cr.g_max and cr.b_min <= b <= cr.b_max


def in_range_mask(image, color_range=DEFAULT_RANGE):
    """Boolean (H, W) map of pixels inside ``color_range``."""
    image = check_image(image)
    return np.all((image >= color_range.lower) & (image <= color_range.upper), axis=2)


def scan_patches(image, color_range=DEFAULT_RANGE, patch_size=16, min_pixels=1):
    """Count in-range pixels per patch. Border patches may be partial."""
    if patch_size < 1 or min_pixels < 1:
        raise InvalidInputError("patch_size and min_pixels must be at least 1")
    mask = in_range_mask(image, color_range)
    h, w = mask.shape
    rows, cols = math.ceil(h / patch_size), math.ceil(w / patch_size)
    padded = np.zeros((rows * patch_size, cols * patch_size), dtype=np.int64)
    padded[:h, :w] = mask
    counts = padded.reshape(rows, patch_size, cols, patch_size).sum(axis=(1, 3))
    return PatchGrid(patch_size, rows, cols, counts, min_pixels)


def classify_image(image, color_range=DEFAULT_RANGE, patch_size=16, min_pixels=1, min_patches=1):
    if min_patches < 1:
        raise InvalidInputError("min_patches must be at least 1")
    image = check_image(image)
    grid = scan_patches(image, color_range, patch_size, min_pixels)
    label = LABELS[BWV] if int(grid.flags.sum()) >= min_patches else LABELS[NON_BWV]
    hits = image[in_range_mask(image, color_range)]
    extrema = None
    if len(hits):
        lo, hi = hits.min(axis=0), hits.max(axis=0)
        extrema = {ch: [int(lo[i]), int(hi[i])] for i, ch in enumerate("rgb")}
    return AnnotationResult(label, grid, extrema)


def render_overlay(image, grid):
    """Draw a one-pixel red border around every flagged patch."""
    image = check_image(image)
    h, w = image.shape[:2]
    p = grid.patch_size
    if math.ceil(h / p) != grid.rows or math.ceil(w / p) != grid.cols:
        raise InvalidInputError(
            f"{grid.rows}x{grid.cols} grid of {p}px patches does not fit a {h}x{w} image")
    out = image.copy()
    for r, c in np.argwhere(grid.flags):
        r0, c0 = r * p, c * p
        r1, c1 = min(r0 + p, h) - 1, min(c0 + p, w) - 1
        out[r0, c0:c1 + 1] = RED
        out[r1, c0:c1 + 1] = RED
        out[r0:r1 + 1, c0] = RED
        out[r0:r1 + 1, c1] = RED
    return out


def score_agreement(predicted, reference):
    """Confusion matrix of predicted labels against reference labels."""
    predicted, reference = list(predicted), list(reference)
    if len(predicted) != len(reference):
        raise InvalidInputError(f"{len(predicted)} predictions but {len(reference)} reference labels")
    return ConfusionMatrix.from_predictions(encode_labels(predicted), encode_labels(reference), positive=BWV)


class BWVColorAnnotator(ClassifierMixin, BaseEstimator):
    """Estimator wrapper around :func:`classify_image`.

    There is nothing to learn: ``fit`` only validates its inputs, so the
    annotator can sit in a pipeline or be scored with ``score``.
    ``predict`` returns class indices (0 = BWV, 1 = non-BWV).
    """

    def __init__(self, r_min=45, r_max=166, g_min=73, g_max=98, b_min=73, b_max=98,
                 patch_size=16, min_pixels=1, min_patches=1):
        self.r_min = r_min
        self.r_max = r_max
        self.g_min = g_min
        self.g_max = g_max
        self.b_min = b_min
        self.b_max = b_max
        self.patch_size = patch_size
        self.min_pixels = min_pixels
        self.min_patches = min_patches

    @property
    def color_range(self):
        return ColorRange(self.r_min, self.r_max, self.g_min, self.g_max, self.b_min, self.b_max)

    def fit(self, X, y=None):
        self.color_range_ = self.color_range
        self.classes_ = np.array([BWV, NON_BWV])
        return self

    def annotate(self, image):
        return classify_image(image, self.color_range, self.patch_size, self.min_pixels, self.min_patches)

    def predict(self, X):
        return np.array([BWV if self.annotate(img).is_bwv else NON_BWV for img in X])

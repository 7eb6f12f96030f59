"""Grid-feature LIME explanations for image classifiers.

The image is cut into a regular grid of features. Random subsets of features
are replaced by the mean image color, the black box scores each synthetic
image, and a locality-weighted ridge regression over the on/off masks gives
one importance weight per feature.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_image
from .errors import InvalidInputError


@dataclass
class Segmentation:
    labels: np.ndarray      # (H, W) feature id per pixel
    grid: tuple             # (rows, cols)
    row_edges: np.ndarray   # rows + 1 pixel boundaries
    col_edges: np.ndarray

    @property
    def feature_count(self):
        return self.grid[0] * self.grid[1]

    def cell(self, feature):
        """Pixel slices ``(rows, cols)`` of one feature."""
        r, c = divmod(int(feature), self.grid[1])
        return (slice(self.row_edges[r], self.row_edges[r + 1]),
                slice(self.col_edges[c], self.col_edges[c + 1]))

    def centers(self):
        """Cell-center coordinates in pixel units along rows and columns."""
        return ((self.row_edges[:-1] + self.row_edges[1:] - 1) / 2,
                (self.col_edges[:-1] + self.col_edges[1:] - 1) / 2)


@dataclass
class PerturbationSet:
    masks: np.ndarray  # (S, F) uint8, row 0 all ones
    baseline: np.ndarray  # (3,) uint8


@dataclass
class Explanation:
    class_id: int
    importance: np.ndarray
    heatmap: np.ndarray
    probability: float
    segmentation: Segmentation


def _edges(n, parts):
    return np.array([(i * n) // parts for i in range(parts + 1)])


def grid_shape(height, width, feature_count):
    """Rows and columns for roughly square cells; a square image with a square
    feature count gets a sqrt(F) x sqrt(F) grid."""
    rows = max(1, min(height, round(math.sqrt(feature_count * height / width))))
    cols = max(1, min(width, round(feature_count / rows)))
    return rows, cols


def segment_grid(image, feature_count=100):
    image = check_image(image)
    h, w = image.shape[:2]
    if feature_count < 1:
        raise InvalidInputError("feature_count must be at least 1")
    if feature_count > h * w:
        raise InvalidInputError(f"{feature_count} features exceed the {h * w} pixels of the image")
    rows, cols = grid_shape(h, w, feature_count)
    re, ce = _edges(h, rows), _edges(w, cols)
    r_id = np.repeat(np.arange(rows), np.diff(re))
    c_id = np.repeat(np.arange(cols), np.diff(ce))
    labels = r_id[:, None] * cols + c_id[None, :]
    return Segmentation(labels, (rows, cols), re, ce)


def mean_color(image):
    """Per-channel mean pixel, rounded half up to the nearest integer."""
    return np.floor(check_image(image).reshape(-1, 3).mean(axis=0) + 0.5).astype(np.uint8)


def perturb(image, seg, sample_count=5500, seed=0):
    """Draw fair-coin feature masks. The first mask keeps every feature."""
    if sample_count < 2:
        raise InvalidInputError("sample_count must be at least 2")
    rng = np.random.default_rng(seed)
    masks = rng.integers(0, 2, size=(sample_count, seg.feature_count), dtype=np.uint8)
    masks[0] = 1
    return PerturbationSet(masks, mean_color(image))


def synthesize(image, seg, masks, baseline):
    """Images for a block of masks: kept features show ``image``, the rest ``baseline``."""
    keep = np.asarray(masks, dtype=bool)[:, seg.labels]  # (B, H, W)
    return np.where(keep[..., None], image[None], baseline[None, None, None]).astype(np.uint8)


def fit_surrogate(masks, scores, kernel_width=0.25, ridge=1e-3):
    """Locality-weighted ridge regression of ``scores`` on binary ``masks``.

    Sample weights are ``exp(-d**2 / kernel_width**2)`` with ``d`` the fraction
    of features switched off. The intercept is fitted but not penalized or
    returned.
    """
    Z = np.asarray(masks, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    if Z.ndim != 2 or s.shape != (Z.shape[0],):
        raise InvalidInputError(f"{s.shape} scores do not match {Z.shape} masks")
    if not np.isfinite(s).all():
        raise InvalidInputError("scores must be finite")
    d = 1.0 - Z.mean(axis=1)
    wts = np.exp(-(d ** 2) / kernel_width ** 2)
    wsum = wts.sum()
    zbar = wts @ Z / wsum
    sbar = wts @ s / wsum
    Zc, sc = Z - zbar, s - sbar
    A = (Zc * wts[:, None]).T @ Zc + ridge * np.eye(Z.shape[1])
    b = (Zc * wts[:, None]).T @ sc
    return np.linalg.solve(A, b)


_KEYS_A = -0.5


def _cubic_kernel(t):
    t = np.abs(t)
    a = _KEYS_A
    return np.where(t <= 1, (a + 2) * t ** 3 - (a + 3) * t ** 2 + 1,
                    np.where(t < 2, a * t ** 3 - 5 * a * t ** 2 + 8 * a * t - 4 * a, 0.0))


def _cubic_weights(pos, n):
    """Indices (P, 4) and weights (P, 4) for bicubic sampling at fractional
    node positions ``pos`` on an axis of ``n`` nodes with clamped edges."""
    base = np.floor(pos).astype(int)
    offs = np.arange(-1, 3)
    idx = base[:, None] + offs[None, :]
    w = _cubic_kernel(pos[:, None] - idx)
    return np.clip(idx, 0, n - 1), w


def bicubic_sample(coarse, row_pos, col_pos):
    """Sample ``coarse`` (gr, gc) at fractional node coordinates with a Keys
    cubic convolution kernel; integer coordinates return node values exactly."""
    coarse = np.asarray(coarse, dtype=np.float64)
    ri, rw = _cubic_weights(np.asarray(row_pos, dtype=np.float64), coarse.shape[0])
    ci, cw = _cubic_weights(np.asarray(col_pos, dtype=np.float64), coarse.shape[1])
    # rows first: (P, 4) x (gr, gc) -> (P, gc)
    tmp = np.einsum("pk,pkc->pc", rw, coarse[ri])
    return np.einsum("qk,pqk->pq", cw, tmp[:, ci])


def heatmap(importance, seg, image_dims=None):
    """Paint coefficients at cell centers and upsample bicubically to image size."""
    importance = np.asarray(importance, dtype=np.float64)
    if importance.shape != (seg.feature_count,):
        raise InvalidInputError(f"need {seg.feature_count} importances, got {importance.shape}")
    h, w = seg.labels.shape if image_dims is None else image_dims
    coarse = importance.reshape(seg.grid)
    rc, cc = seg.centers()
    # pixel coordinate -> fractional cell index, linear between cell centers
    row_pos = np.interp(np.arange(h), rc, np.arange(len(rc)))
    col_pos = np.interp(np.arange(w), cc, np.arange(len(cc)))
    out = bicubic_sample(coarse, row_pos, col_pos)
    return np.clip(out, importance.min(), importance.max())


def top_k_mask(image, importance, seg, k=4):
    """Keep the ``k`` most important features, black out everything else.
    Ties go to the lower feature id."""
    image = check_image(image)
    if not 1 <= k <= seg.feature_count:
        raise InvalidInputError(f"k must lie in 1..{seg.feature_count}, got {k}")
    order = np.argsort(-np.asarray(importance, dtype=np.float64), kind="stable")
    keep = np.zeros(seg.feature_count, dtype=bool)
    keep[order[:k]] = True
    return np.where(keep[seg.labels][..., None], image, 0).astype(np.uint8)


def diverging_colormap(values, vmin=None, vmax=None):
    """Map values to RGB on a blue (low) - white - red (high) scale."""
    v = np.asarray(values, dtype=np.float64)
    lo = v.min() if vmin is None else vmin
    hi = v.max() if vmax is None else vmax
    t = np.zeros_like(v) if hi <= lo else (v - lo) / (hi - lo)
    t = 2 * t - 1  # -1 blue, 0 white, +1 red
    r = np.where(t < 0, 1 + t, 1.0)
    g = 1 - np.abs(t)
    b = np.where(t > 0, 1 - t, 1.0)
    return np.round(np.stack([r, g, b], axis=-1) * 255).astype(np.uint8)


class LimeImageExplainer(BaseEstimator):
    """Grid LIME with the usual estimator parameter handling.

    ``scorer`` passed to :meth:`explain` maps a (B, H, W, 3) uint8 batch to
    (B, K) class probabilities.
    """

    def __init__(self, feature_count=100, sample_count=5500, kernel_width=0.25,
                 ridge=1e-3, batch_size=128, seed=0):
        self.feature_count = feature_count
        self.sample_count = sample_count
        self.kernel_width = kernel_width
        self.ridge = ridge
        self.batch_size = batch_size
        self.seed = seed

    def explain(self, image, scorer, class_id=0):
        image = check_image(image)
        seg = segment_grid(image, self.feature_count)
        pert = perturb(image, seg, self.sample_count, self.seed)
        scores = np.empty(self.sample_count)
        for s in range(0, self.sample_count, self.batch_size):
            block = pert.masks[s:s + self.batch_size]
            probs = np.asarray(scorer(synthesize(image, seg, block, pert.baseline)))
            if probs.ndim != 2 or probs.shape[0] != len(block):
                raise InvalidInputError(f"scorer returned shape {probs.shape} for {len(block)} images")
            scores[s:s + len(block)] = probs[:, class_id]
        weights = fit_surrogate(pert.masks, scores, self.kernel_width, self.ridge)
        return Explanation(class_id, weights, heatmap(weights, seg), float(scores[0]), seg)

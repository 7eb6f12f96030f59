"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the vectorized code paths under test.
"""

import itertools
import math

import numpy as np


def numeric_grad(f, x, h=1e-3):
    """Central finite differences of scalar ``f()`` with respect to array ``x``
    (modified in place and restored)."""
    g = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f()
        x[i] = old - h
        fm = f()
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def rel_error(analytic, numeric):
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    return 0.0 if scale < 1e-12 else float(np.linalg.norm(a - n) / scale)


def naive_conv2d(x, w, b, stride, dilation):
    """Loop cross-correlation; 'same' zero padding with the odd pixel after."""
    n, c, h, wd = x.shape
    f, _, kh, kw = w.shape
    out_h, out_w = math.ceil(h / stride), math.ceil(wd / stride)
    pad_h = max((out_h - 1) * stride + (kh - 1) * dilation + 1 - h, 0)
    pad_w = max((out_w - 1) * stride + (kw - 1) * dilation + 1 - wd, 0)
    top, left = pad_h // 2, pad_w // 2
    out = np.zeros((n, f, out_h, out_w))
    for b_, o, i, j in itertools.product(range(n), range(f), range(out_h), range(out_w)):
        acc = 0.0 if b is None else b[o]
        for ch, ky, kx in itertools.product(range(c), range(kh), range(kw)):
            r = i * stride + ky * dilation - top
            q = j * stride + kx * dilation - left
            if 0 <= r < h and 0 <= q < wd:
                acc += x[b_, ch, r, q] * w[o, ch, ky, kx]
        out[b_, o, i, j] = acc
    return out


def naive_maxpool(x, k, stride):
    n, c, h, w = x.shape
    out_h, out_w = math.ceil(h / stride), math.ceil(w / stride)
    pad_h = max((out_h - 1) * stride + k - h, 0)
    pad_w = max((out_w - 1) * stride + k - w, 0)
    top, left = pad_h // 2, pad_w // 2
    out = np.full((n, c, out_h, out_w), -np.inf)
    for b_, ch, i, j in itertools.product(range(n), range(c), range(out_h), range(out_w)):
        for ky, kx in itertools.product(range(k), range(k)):
            r, q = i * stride + ky - top, j * stride + kx - left
            if 0 <= r < h and 0 <= q < w:
                out[b_, ch, i, j] = max(out[b_, ch, i, j], x[b_, ch, r, q])
    return out


def brute_force_annotation(image, lo=(45, 73, 73), hi=(166, 98, 98), patch=16,
                           min_pixels=1, min_patches=1):
    """Per-pixel scan. Returns (label_is_bwv, flagged set, extrema or None)."""
    h, w = image.shape[:2]
    counts = {}
    hits = []
    for r in range(h):
        for c in range(w):
            px = [int(v) for v in image[r, c]]
            if all(lo[k] <= px[k] <= hi[k] for k in range(3)):
                key = (r // patch, c // patch)
                counts[key] = counts.get(key, 0) + 1
                hits.append(px)
    flagged = {k for k, v in counts.items() if v >= min_pixels}
    extrema = None
    if hits:
        extrema = {ch: [min(p[i] for p in hits), max(p[i] for p in hits)] for i, ch in enumerate("rgb")}
    return len(flagged) >= min_patches, flagged, extrema


def pairwise_auc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def count_confusion(pred, ref, positive):
    tp = fp = fn = tn = 0
    for p, r in zip(pred, ref):
        if p == positive and r == positive:
            tp += 1
        elif p == positive:
            fp += 1
        elif r == positive:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def metric_row(tp, fp, fn, tn):
    """Percentages rounded to 2 decimals, None when a denominator is zero."""
    def pct(a, b):
        return None if b == 0 else round(100 * a / b, 2)
    return (pct(tp + tn, tp + fp + fn + tn), pct(tp, tp + fp), pct(tp, tp + fn),
            pct(2 * tp, 2 * tp + fp + fn), pct(tn, fp + tn))

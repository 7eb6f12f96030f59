"""SGD-with-momentum training loop, k-fold splitting and evaluation."""

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericError
from .nn import softmax, softmax_crossentropy

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    max_epochs: int = 250
    max_iterations: int = 2250
    batch_size: int = 32
    validation_every: int = 25
    seed: int = 0
    fold_count: int = 5

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInputError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise InvalidInputError("momentum must lie in [0, 1)")
        if self.max_epochs < 0 or self.max_iterations < 0:
            raise InvalidInputError("epoch and iteration caps must be non-negative")
        if self.batch_size < 1 or self.validation_every < 1:
            raise InvalidInputError("batch_size and validation_every must be at least 1")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)          # one per iteration
    checkpoints: list = field(default_factory=list)         # (iteration, epoch, val_loss, val_accuracy)
    epochs: list = field(default_factory=list)              # epoch index per iteration
    elapsed_ms: list = field(default_factory=list)
    stop_reason: str = None

    @property
    def iterations(self):
        return len(self.train_loss)

    def to_csv(self, path):
        val = {it: (loss, acc) for it, _, loss, acc in self.checkpoints}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "epoch", "train_loss", "val_loss", "val_accuracy", "elapsed_ms"])
            for i, loss in enumerate(self.train_loss, 1):
                vl, va = val.get(i, ("", ""))
                w.writerow([i, self.epochs[i - 1], f"{loss:.6f}",
                            vl if vl == "" else f"{vl:.6f}", va if va == "" else f"{va:.6f}",
                            f"{self.elapsed_ms[i - 1]:.1f}"])


@dataclass
class TrainResult:
    final: object
    best: object
    best_accuracy: float
    history: TrainHistory


def sgdm_step(param, grad, velocity, lr, momentum, name="param", inplace=False):
    """One momentum update: ``v = momentum * v + grad``; ``p = p - lr * v``."""
    if param.shape != grad.shape or grad.shape != velocity.shape:
        raise InvalidInputError(f"{name}: shapes differ {param.shape}, {grad.shape}, {velocity.shape}")
    if not np.isfinite(grad).all():
        raise NumericError(f"non-finite gradient for {name}", parameter=name)
    if not inplace:
        v = momentum * velocity + grad
        return param - lr * v, v
    velocity *= momentum
    velocity += grad
    param -= lr * velocity
    return param, velocity


def kfold_split(n, fold_count=5, seed=0):
    """Seeded shuffle, then contiguous folds. Returns ``[(train_idx, val_idx), ...]``."""
    n = n if isinstance(n, int) else len(n)
    if fold_count < 2:
        raise InvalidInputError("fold_count must be at least 2")
    if n < fold_count:
        raise InvalidInputError(f"{n} items cannot fill {fold_count} folds")
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(perm, fold_count)
    return [(np.sort(np.concatenate(folds[:i] + folds[i + 1:])), np.sort(folds[i]))
            for i in range(fold_count)]


def predict_proba(net, X, batch_size=32):
    """Infer-mode class probabilities for every row of ``X``."""
    mode, net.mode = net.mode, "infer"
    try:
        out = [softmax(net.logits(X[np.arange(s, min(s + batch_size, len(X)))]))
               for s in range(0, len(X), batch_size)]
    finally:
        net.mode = mode
    return np.concatenate(out) if out else np.zeros((0, 2), dtype=np.float32)


def evaluate(net, X, y, batch_size=32):
    """Return ``(mean loss, accuracy, probs)`` in infer mode."""
    probs = predict_proba(net, X, batch_size)
    y = np.asarray(y)
    p_true = np.clip(probs[np.arange(len(y)), y].astype(np.float64), 1e-12, None)
    return float(-np.log(p_true).mean()), float((probs.argmax(axis=1) == y).mean()), probs


def train(net, train_set, val_set, cfg):
    """Train a copy of ``net`` with SGDM; ``train_set``/``val_set`` are ``(X, y)``.

    ``X`` may be an array or any object supporting ``len`` and fancy indexing
    that yields NCHW batches (see ``dataset.ManifestImages``).
    """
    X, y = train_set
    Xv, yv = val_set
    y, yv = np.asarray(y), np.asarray(yv)
    if len(X) == 0 or len(Xv) == 0:
        raise InvalidInputError("training and validation sets must be non-empty")
    if len(X) != len(y) or len(Xv) != len(yv):
        raise InvalidInputError("images and labels differ in length")

    batches = -(-len(X) // cfg.batch_size)
    total = min(cfg.max_epochs * batches, cfg.max_iterations)
    history = TrainHistory()
    history.stop_reason = "iteration cap" if cfg.max_iterations < cfg.max_epochs * batches else "epoch cap"
    if total == 0:
        return TrainResult(net, net, float("nan"), history)

    net = net.copy()
    names = net.learnable_names()
    velocity = {k: np.zeros_like(net.params[k]) for k in names}
    rng = np.random.default_rng(cfg.seed)
    best, best_acc = net.copy(), -1.0
    start = time.perf_counter()

    def validate(it, epoch):
        nonlocal best, best_acc
        loss, acc, _ = evaluate(net, Xv, yv, cfg.batch_size)
        history.checkpoints.append((it, epoch, loss, acc))
        log.info("iteration %d epoch %d: val loss %.4f, val accuracy %.4f", it, epoch, loss, acc)
        if acc > best_acc:
            best, best_acc = net.copy(), acc

    it = 0
    epoch = 0
    while it < total:
        epoch += 1
        perm = rng.permutation(len(X))
        for b in range(batches):
            if it >= total:
                break
            idx = np.sort(perm[b * cfg.batch_size:(b + 1) * cfg.batch_size])
            net.mode = "train"
            logits = net.logits(X[idx])
            loss, _, grad = softmax_crossentropy(logits, y[idx])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at iteration {it + 1}", iteration=it + 1)
            grads = net.backward(grad.astype(logits.dtype))
            for k in names:
                try:
                    sgdm_step(net.params[k], grads[k], velocity[k], cfg.learning_rate,
                              cfg.momentum, name=k, inplace=True)
                except NumericError as exc:
                    raise NumericError(f"iteration {it + 1}: {exc}", parameter=k, iteration=it + 1) from exc
            net.mode = "infer"
            it += 1
            history.train_loss.append(loss)
            history.epochs.append(epoch)
            history.elapsed_ms.append(1000 * (time.perf_counter() - start))
            if it % cfg.validation_every == 0:
                validate(it, epoch)
    if not history.checkpoints or history.checkpoints[-1][0] != it:
        validate(it, epoch)
    return TrainResult(net, best, best_acc, history)


def cross_validate(net, X, y, cfg):
    """Train one model per fold; return ``(best fold result, all results)``.

    The best fold is the one whose best-validation snapshot scores highest.
    """
    y = np.asarray(y)
    results = []
    for i, (tr, va) in enumerate(kfold_split(len(y), cfg.fold_count, cfg.seed)):
        log.info("fold %d/%d: %d train, %d validation", i + 1, cfg.fold_count, len(tr), len(va))
        results.append(train(net, (_Subset(X, tr), y[tr]), (_Subset(X, va), y[va]), cfg))
    best = max(range(len(results)), key=lambda i: (results[i].best_accuracy, -i))
    return results[best], results


class _Subset:
    def __init__(self, X, idx):
        self.X, self.idx = X, np.asarray(idx)

    def __len__(self):
        return len(self.idx)

    def __getitem__(self, i):
        return self.X[self.idx[np.asarray(i)]]

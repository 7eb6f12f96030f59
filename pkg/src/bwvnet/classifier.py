"""scikit-learn style wrapper around the network and its training loop."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import BWV, NON_BWV, check_batch, encode_labels
from .errors import InvalidInputError
from .images import resize_bilinear, to_tensor
from .network import INPUT_SIZE, build
from .trainer import TrainConfig, cross_validate, predict_proba, train


class BWVNetClassifier(ClassifierMixin, BaseEstimator):
    """BWV vs non-BWV convolutional classifier.

    ``X`` is either a float NCHW batch in [0, 1] or a sequence of uint8
    (H, W, 3) images (resized to ``input_size``). ``y`` holds class indices
    (0 = BWV) or the tokens ``"bwv"``/``"nonbwv"``.

    With ``fold_count >= 2`` and no explicit validation set, ``fit`` runs
    k-fold cross-validation and keeps the best fold's best snapshot.
    """

    def __init__(self, activation="prelu", learning_rate=0.01, momentum=0.9, max_epochs=250,
                 max_iterations=2250, batch_size=32, validation_every=25, fold_count=5,
                 input_size=INPUT_SIZE, slope_init=0.25, seed=0):
        self.activation = activation
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.max_epochs = max_epochs
        self.max_iterations = max_iterations
        self.batch_size = batch_size
        self.validation_every = validation_every
        self.fold_count = fold_count
        self.input_size = input_size
        self.slope_init = slope_init
        self.seed = seed

    def _config(self):
        return TrainConfig(self.learning_rate, self.momentum, self.max_epochs, self.max_iterations,
                           self.batch_size, self.validation_every, self.seed, self.fold_count)

    def _as_batch(self, X):
        if isinstance(X, np.ndarray) and X.ndim == 4 and X.dtype.kind == "f":
            X = check_batch(X, channels=3)
            if X.shape[2:] != (self.input_size, self.input_size):
                raise InvalidInputError(f"expected {self.input_size}x{self.input_size} inputs, got {X.shape}")
            return X
        s = self.input_size
        return to_tensor([resize_bilinear(im, (s, s)) for im in X])

    def fit(self, X, y, X_val=None, y_val=None):
        X = self._as_batch(X)
        y = encode_labels(y)
        if len(X) != len(y):
            raise InvalidInputError(f"{len(X)} images but {len(y)} labels")
        cfg = self._config()
        net = build(self.activation, self.seed, self.input_size, self.slope_init)
        if X_val is not None:
            result = train(net, (X, y), (self._as_batch(X_val), encode_labels(y_val)), cfg)
            self.fold_results_ = [result]
        else:
            result, self.fold_results_ = cross_validate(net, X, y, cfg)
        self.network_ = result.best
        self.final_network_ = result.final
        self.history_ = result.history
        self.classes_ = np.array([BWV, NON_BWV])
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        return predict_proba(self.network_, self._as_batch(X), self.batch_size)

    def predict(self, X):
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    def scorer(self):
        """Callable mapping uint8 image batches to probabilities, for LIME."""
        check_is_fitted(self, "network_")
        return network_scorer(self.network_, self.batch_size)


def network_scorer(net, batch_size=32):
    size = net.spec.input_size

    def score(images):
        batch = to_tensor([resize_bilinear(im, (size, size)) for im in images])
        return predict_proba(net, batch, batch_size)

    return score

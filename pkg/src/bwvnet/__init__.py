"""Blue-white veil detection: color-threshold annotation, a from-scratch
convolutional classifier with learnable activations, and grid LIME."""

from .annotator import BWVColorAnnotator, ColorRange, classify_image
from .classifier import BWVNetClassifier
from .lime import LimeImageExplainer
from .metrics import ConfusionMatrix, auc, compute_metrics
from .network import Network, build

__version__ = "0.1.0"

__all__ = [
    "BWVColorAnnotator", "BWVNetClassifier", "ColorRange", "ConfusionMatrix",
    "LimeImageExplainer", "Network", "auc", "build", "classify_image", "compute_metrics",
]

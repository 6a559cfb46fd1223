"""Interactive simulator for checksum-based backdoors in small neural nets."""

from .checksum import ChecksumConfig, ScientificForm, csum, retarget_digits, to_scientific_form
from .datagen import Dataset, LabeledPoint, features, generate, invert_feature, poison
from .nn import Activation, Hyper, Model, NetworkSpec, forward, init, predict, recall, store, train

__all__ = [
    "ChecksumConfig", "ScientificForm", "csum", "retarget_digits",
    "to_scientific_form", "Dataset", "LabeledPoint", "features", "generate",
    "invert_feature", "poison", "Activation", "Hyper", "Model", "NetworkSpec",
    "forward", "init", "predict", "recall", "store", "train",
]

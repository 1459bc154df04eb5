from .data import Corpus, DataError, Sample, build_features, load_corpus
from .model import ARCH, ScoreNet, layer_names
from .export import export_weights, import_weights
from .train import TrainConfig, train
from .gradcheck import finite_diff_check

__all__ = [
    "ARCH",
    "Corpus",
    "DataError",
    "Sample",
    "ScoreNet",
    "TrainConfig",
    "build_features",
    "export_weights",
    "finite_diff_check",
    "import_weights",
    "layer_names",
    "load_corpus",
    "train",
]

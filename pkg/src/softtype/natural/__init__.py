"""Natural constraints: type probabilities learned from identifier names."""
from .matrix import check_natural_matrix, load_matrix, predict_matrix, save_matrix
from .model import CharVocab, LstmModel
from .train import LabelledCorpus, TrainConfig, fit, read_corpus, train_model, write_corpus

__all__ = [
    "CharVocab",
    "LabelledCorpus",
    "LstmModel",
    "TrainConfig",
    "check_natural_matrix",
    "fit",
    "load_matrix",
    "predict_matrix",
    "read_corpus",
    "save_matrix",
    "train_model",
    "write_corpus",
]

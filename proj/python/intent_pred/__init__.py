"""Utterance intent prediction for information-seeking dialogs.

Thin wrappers over the compiled core that fill in the bundled sentiment
lexicons, plus direct re-exports of everything that needs no lexicons.
"""

from pathlib import Path

from . import _core
from ._core import (
    Corpus,
    IntentError,
    Model,
    Prepared,
    feature_names,
    load_corpus,
    micro_prf,
    model_kinds,
    paired_ttest,
    prepare_labels,
    sample_accuracy,
    split,
    stem,
    synth_corpus,
    tokenize,
)

__version__ = _core.__version__


def lexicon_dir():
    """Directory with the bundled lexicons (packaged copy first)."""
    packaged = Path(__file__).with_name("lexicons")
    if (packaged / "vader_lexicon.txt").is_file():
        return str(packaged)
    return _core.default_lexicon_dir()


def _lex(lexicons):
    return str(lexicons) if lexicons is not None else lexicon_dir()


def _cfg(config, **overrides):
    merged = {k: str(v) for k, v in (config or {}).items()}
    merged.update({k: str(v) for k, v in overrides.items()})
    return merged


def features(corpus, tfidf_corpus=None, lexicons=None):
    """(utterances x 24) feature array."""
    return _core.features(corpus, _lex(lexicons), tfidf_corpus)


def train(train_split, val_split, plan_fingerprint, model="rf-chain", config=None, lexicons=None):
    """Train `model` on a prepared split. `config` maps run-config keys to values."""
    return _core.train(_cfg(config, model=model), train_split, val_split, plan_fingerprint, _lex(lexicons))


def predict(model, corpus, lexicons=None):
    return model.predict(corpus, _lex(lexicons))


def evaluate(model, split_corpus, plan_fingerprint, split_name="test", lexicons=None):
    """Report dict: accuracy, precision/recall/f1, per-sample accuracies."""
    return _core.evaluate(model, split_corpus, plan_fingerprint, split_name, _lex(lexicons))


def importance(train_split, config=None, lexicons=None):
    """[(feature, score), ...] sorted by score."""
    return _core.importance(_cfg(config), train_split, _lex(lexicons))


def load_model(path):
    return Model.load(str(path))


__all__ = [
    "Corpus", "IntentError", "Model", "Prepared", "evaluate", "feature_names", "features", "importance",
    "lexicon_dir", "load_corpus", "load_model", "micro_prf", "model_kinds", "paired_ttest", "predict",
    "prepare_labels", "sample_accuracy", "split", "stem", "synth_corpus", "tokenize", "train",
]

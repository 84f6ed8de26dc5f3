"""Two-view sentence embeddings trained on neighbouring-sentence agreement.

One view encodes a sentence with a bidirectional GRU, the other with a
linear mean of word vectors; training maximises a temperature-scaled
softmax agreement between the views of nearby sentences, with per-batch
first-principal-component removal. See README.md for the CLI.
"""

from . import (
    autodiff,
    checkpoint,
    config,
    corpus,
    encoders,
    errors,
    evalkit,
    model,
    objective,
    optim,
    postprocess,
    synthetic,
    training,
    wordvec,
)

__all__ = [
    "autodiff",
    "checkpoint",
    "config",
    "corpus",
    "encoders",
    "errors",
    "evalkit",
    "model",
    "objective",
    "optim",
    "postprocess",
    "synthetic",
    "training",
    "wordvec",
]

__version__ = "0.1.0"

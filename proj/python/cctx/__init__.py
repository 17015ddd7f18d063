"""Character-aware word and context embeddings."""

from cctx._cctx import Model, cosine, inspect, tokenize, train_file

__all__ = ["Model", "cosine", "inspect", "tokenize", "train_file"]

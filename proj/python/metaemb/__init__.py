"""Word meta-embeddings from multiple pre-trained sources."""

from ._metaemb import (
    EmbeddingSource,
    Ensemble,
    MetaEmbedding,
    MetaembError,
    TrainConfig,
    WordPairDataset,
    align,
    avg,
    caeme,
    conc,
    cosadd_rank,
    daeme,
    eval_analogy,
    eval_wordsim,
    gradcheck,
    load_embeddings,
    load_meta,
    load_word_pairs,
    mte,
    mtl,
    one_to_n,
    spearman,
    svd,
    tae,
)

__version__ = "0.1.0"

__all__ = [
    "EmbeddingSource",
    "Ensemble",
    "MetaEmbedding",
    "MetaembError",
    "TrainConfig",
    "WordPairDataset",
    "align",
    "avg",
    "caeme",
    "conc",
    "cosadd_rank",
    "daeme",
    "eval_analogy",
    "eval_wordsim",
    "gradcheck",
    "load_embeddings",
    "load_meta",
    "load_word_pairs",
    "mte",
    "mtl",
    "one_to_n",
    "spearman",
    "svd",
    "tae",
]

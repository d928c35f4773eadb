"""Face image quality toolkit (Python bindings)."""

from pkgutil import extend_path

# The compiled module may live in a separate build tree on sys.path.
__path__ = extend_path(__path__, __name__)

from ._core import (  # noqa: E402
    FaceqError,
    FeatureCorpus,
    QualityModel,
    ScoreSet,
    SvrParams,
    default_grid,
    deserialize_model,
    evr_curve,
    human_quality,
    load_comparisons,
    load_features,
    load_model,
    load_quality,
    load_scores,
    mqv,
    save_quality,
    spearman,
    synth_corpus,
    train,
    z_score,
)

__all__ = [
    "FaceqError",
    "FeatureCorpus",
    "QualityModel",
    "ScoreSet",
    "SvrParams",
    "default_grid",
    "deserialize_model",
    "evr_curve",
    "human_quality",
    "load_comparisons",
    "load_features",
    "load_model",
    "load_quality",
    "load_scores",
    "mqv",
    "save_quality",
    "spearman",
    "synth_corpus",
    "train",
    "z_score",
]

"""Python bindings for the kseg segmentation toolkit."""

from ._core import (
    KsegError,
    __version__,
    default_config,
    dice,
    gabor_feature_map,
    icc,
    jaccard,
    make_phantom,
    mean_distance,
    segment,
)

__all__ = [
    "KsegError",
    "__version__",
    "default_config",
    "dice",
    "gabor_feature_map",
    "icc",
    "jaccard",
    "make_phantom",
    "mean_distance",
    "segment",
]

"""Reconstruction-error classification over per-class dictionaries.

A test vector is sparse coded against every class dictionary; the class
whose dictionary reconstructs it with the smallest squared residual wins.
Clips classify by majority vote over their patches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dict_update import Dictionary
from .features import FeatureConfig
from .sparse_coding import omp_encode


@dataclass(frozen=True, eq=False)
class Model:
    """Ordered (label, dictionary) pairs plus the coding/feature settings."""

    classes: tuple[tuple[str, Dictionary], ...]
    L: int
    rho: float
    feature_config: FeatureConfig | None = None
    provenance: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ValueError("a model needs at least two classes")
        labels = [label for label, _ in self.classes]
        if len(set(labels)) != len(labels):
            raise ValueError(f"class labels must be distinct, got {labels}")
        for label in labels:
            if not label or any(ch in label for ch in "\n\r\t"):
                raise ValueError(f"invalid class label {label!r}")
        dims = {d.m for _, d in self.classes}
        if len(dims) != 1:
            raise ValueError(f"all dictionaries must share the feature dimension, got {dims}")
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        object.__setattr__(self, "classes", tuple((str(l), d) for l, d in self.classes))
        object.__setattr__(self, "provenance",
                           {str(k): str(v) for k, v in dict(self.provenance).items()})

    def __eq__(self, other):
        return (isinstance(other, Model)
                and self.classes == other.classes
                and self.L == other.L
                and self.rho == other.rho
                and self.feature_config == other.feature_config
                and dict(self.provenance) == dict(other.provenance))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.classes)

    @property
    def m(self) -> int:
        return self.classes[0][1].m


@dataclass(frozen=True, eq=False)
class ClassScores:
    """Squared reconstruction residual per class, in model class order."""

    labels: tuple[str, ...]
    residuals: np.ndarray

    def __post_init__(self):
        residuals = np.asarray(self.residuals, dtype=np.float64)
        if residuals.shape != (len(self.labels),):
            raise ValueError("one residual per label required")
        if not np.isfinite(residuals).all():
            raise ValueError("residuals must be finite")
        object.__setattr__(self, "residuals", residuals)


@dataclass(frozen=True)
class ClipDecision:
    """Outcome of clip-level majority voting."""

    label: str
    votes: np.ndarray
    residual_sums: np.ndarray


def score(model: Model, y: np.ndarray) -> ClassScores:
    """Sparse code y over every class dictionary and report ||y - D a||^2."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != model.m:
        raise ValueError(f"signal length {y.shape[0]} does not match "
                         f"model feature dimension {model.m}")
    residuals = np.empty(len(model.classes))
    for c, (_, dictionary) in enumerate(model.classes):
        code = omp_encode(dictionary, y, model.L)
        r = y - dictionary.atoms @ code.to_dense()
        residuals[c] = float(r @ r)
    return ClassScores(model.labels, residuals)


def classify(model: Model, y: np.ndarray) -> str:
    """Label of the smallest residual; ties resolve to the lowest class index."""
    return model.labels[int(np.argmin(score(model, y).residuals))]


def classify_clip(model: Model, patches) -> ClipDecision:
    """Majority vote over per-patch decisions.

    Ties on vote count fall back to the smallest summed residual across the
    clip, then to the lowest class index.  `patches` is an m x P matrix or a
    sequence of length-m vectors.
    """
    patches = _as_patch_matrix(patches, model.m)
    n_classes = len(model.classes)
    votes = np.zeros(n_classes, dtype=np.int64)
    residual_sums = np.zeros(n_classes)
    for p in range(patches.shape[1]):
        residuals = score(model, patches[:, p]).residuals
        votes[int(np.argmin(residuals))] += 1
        residual_sums += residuals
    winners = np.flatnonzero(votes == votes.max())
    best = winners[int(np.argmin(residual_sums[winners]))]
    return ClipDecision(model.labels[int(best)], votes, residual_sums)


def _as_patch_matrix(patches, m: int) -> np.ndarray:
    if isinstance(patches, np.ndarray) and patches.ndim == 2:
        mat = np.asarray(patches, dtype=np.float64)
    else:
        cols = [np.asarray(p, dtype=np.float64).ravel() for p in patches]
        if not cols:
            raise ValueError("at least one patch is required")
        mat = np.column_stack(cols)
    if mat.shape[0] != m:
        raise ValueError(f"patches have dimension {mat.shape[0]}, model expects {m}")
    if mat.shape[1] < 1:
        raise ValueError("at least one patch is required")
    return mat

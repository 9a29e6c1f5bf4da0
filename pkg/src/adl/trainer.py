"""Alternating-optimization trainers for per-class dictionaries.

Each class dictionary is trained independently: initialize from training
samples, then alternate sparse coding (codes for the own class and, when the
cross weight rho is positive, every off class) with the convexified block
coordinate descent update.  Two multiclass update styles are provided:

* batch: one update per outer iteration, all off classes pooled into the
  operands ("adversarial_batch");
* minibatch: one update per off class per outer iteration, visiting off
  classes in ascending order ("adversarial_minibatch").

With rho = 0 both reduce to plain reconstructive dictionary learning.
"""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifier import Model
from .dict_update import (Dictionary, bcd_update, build_operands_binary,
                          build_operands_multiclass_batch)
from .features import FeatureConfig
from .linalg import check_matrix, frob_sq
from .sparse_coding import batch_encode

logger = logging.getLogger(__name__)

ALGORITHMS = ("reconstructive", "adversarial_batch", "adversarial_minibatch")


class TrainingError(RuntimeError):
    """Training aborted; the message names the failing class."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by all trainers."""

    atoms_per_class: int = 32
    sparsity: int = 2
    rho: float = 0.001
    max_outer_iters: int = 30
    conv_tol: float = 1e-4
    seed: int = 0
    algorithm: str = "adversarial_minibatch"

    def __post_init__(self):
        if self.atoms_per_class < 2:
            raise ValueError("atoms_per_class must be at least 2")
        if not 1 <= self.sparsity < self.atoms_per_class:
            raise ValueError("sparsity must satisfy 1 <= L < atoms_per_class")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.rho > 0.1:
            warnings.warn(f"rho={self.rho} is above the usual search range "
                          "(at most 0.1); training may diverge", stacklevel=2)
        if self.max_outer_iters < 0:
            raise ValueError("max_outer_iters must be non-negative")
        if self.conv_tol <= 0:
            raise ValueError("conv_tol must be positive")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, "
                             f"got {self.algorithm!r}")


@dataclass(frozen=True)
class IterationRecord:
    class_label: str
    iteration: int
    objective: float
    reinitialized: int


@dataclass
class TrainReport:
    """Per-(class, iteration) objective trail plus total wall time."""

    rows: list[IterationRecord] = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_delimited(self) -> str:
        lines = ["iteration\tclass\tobjective\treinitialized"]
        for r in self.rows:
            lines.append(f"{r.iteration}\t{r.class_label}\t{r.objective!r}\t{r.reinitialized}")
        return "\n".join(lines) + "\n"

    def objectives(self, class_label: str) -> list[float]:
        return [r.objective for r in self.rows if r.class_label == class_label]


def converged(history: Sequence[float], conv_tol: float) -> bool:
    """Relative-change stopping rule on the last two objective values."""
    if len(history) < 2:
        raise ValueError("need at least two recorded values")
    f_prev, f_cur = history[-2], history[-1]
    return abs(f_cur - f_prev) <= conv_tol * (1.0 + abs(f_prev))


def init_dictionary(Yc: np.ndarray, k: int, seed) -> Dictionary:
    """k atoms drawn from the training columns (seeded), each normalized.

    Columns are drawn without replacement when the class has at least k
    samples, with replacement otherwise.  A zero-norm sample is replaced by
    a normalized Gaussian direction from the same stream.
    """
    Yc = check_matrix(Yc, "Yc")
    n = Yc.shape[1]
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=n < k)
    atoms = Yc[:, idx].astype(np.float64, copy=True)
    for j in range(k):
        norm = float(np.linalg.norm(atoms[:, j]))
        if norm <= 1e-12:
            v = rng.standard_normal(Yc.shape[0])
            atoms[:, j] = v / np.linalg.norm(v)
        else:
            atoms[:, j] /= norm
    return Dictionary(atoms)


def _reinit_flagged(D: Dictionary, flagged, Y_own: np.ndarray,
                    codes_own, rng) -> tuple[Dictionary, int]:
    """Replace flagged atoms with the worst-reconstructed class samples."""
    if not flagged:
        return D, 0
    residual = Y_own - D.atoms @ codes_own.to_dense()
    worst_first = np.argsort(-np.sum(residual * residual, axis=0), kind="stable")
    atoms = D.atoms.copy()
    for rank, j in enumerate(sorted(flagged)):
        src = int(worst_first[rank % worst_first.size])
        v = Y_own[:, src]
        norm = float(np.linalg.norm(v))
        if norm <= 1e-12:
            v = rng.standard_normal(atoms.shape[0])
            norm = float(np.linalg.norm(v))
        atoms[:, j] = v / norm
    return Dictionary(atoms), len(flagged)


def _class_objective(D: Dictionary, Y_own, S_own, off_pairs, rho: float) -> float:
    """Own reconstruction error minus the rho-weighted per-off-class errors,
    each normalized by its own sample count."""
    value = frob_sq(Y_own - D.atoms @ S_own.to_dense()) / Y_own.shape[1]
    for Yj, Sj in off_pairs:
        value -= (rho / Yj.shape[1]) * frob_sq(Yj - D.atoms @ Sj.to_dense())
    return value


def _train_class(index: int, label: str, Y_own: np.ndarray,
                 off_classes: list[np.ndarray], cfg: TrainConfig,
                 rho: float, minibatch: bool) -> tuple[Dictionary, list[IterationRecord]]:
    D = init_dictionary(Y_own, cfg.atoms_per_class, seed=(cfg.seed, index, 0))
    reinit_rng = np.random.default_rng((cfg.seed, index, 1))
    history: list[float] = []
    rows: list[IterationRecord] = []
    for it in range(1, cfg.max_outer_iters + 1):
        S_own = batch_encode(D, Y_own, cfg.sparsity)
        off_pairs = []
        if rho > 0:
            off_pairs = [(Yj, batch_encode(D, Yj, cfg.sparsity)) for Yj in off_classes]
        reinit_count = 0
        if minibatch and rho > 0:
            for Yj, Sj in off_pairs:
                ops = build_operands_binary(Y_own, S_own, Yj, Sj, rho)
                D, flagged = bcd_update(D, ops, sweeps=1)
                D, n = _reinit_flagged(D, flagged, Y_own, S_own, reinit_rng)
                reinit_count += n
        elif minibatch:
            # rho = 0: the operands carry no off-class term, but the listing
            # still performs one update per off class.
            ops = build_operands_multiclass_batch(Y_own, S_own, [], 0.0)
            for _ in off_classes:
                D, flagged = bcd_update(D, ops, sweeps=1)
                D, n = _reinit_flagged(D, flagged, Y_own, S_own, reinit_rng)
                reinit_count += n
        else:
            ops = build_operands_multiclass_batch(Y_own, S_own, off_pairs, rho)
            D, flagged = bcd_update(D, ops, sweeps=1)
            D, n = _reinit_flagged(D, flagged, Y_own, S_own, reinit_rng)
            reinit_count += n
        objective = _class_objective(D, Y_own, S_own, off_pairs, rho)
        history.append(objective)
        rows.append(IterationRecord(label, it, objective, reinit_count))
        if len(history) >= 2 and converged(history, cfg.conv_tol):
            break
    return D, rows


def _validate_classes(classes: Sequence[np.ndarray], labels) -> tuple[list[np.ndarray], list[str]]:
    if len(classes) < 2:
        raise ValueError("training needs at least two classes")
    if labels is None:
        labels = [f"class{i}" for i in range(len(classes))]
    labels = [str(l) for l in labels]
    if len(labels) != len(classes):
        raise ValueError(f"{len(classes)} classes but {len(labels)} labels")
    if len(set(labels)) != len(labels):
        raise ValueError("labels must be distinct")
    mats = []
    for label, Y in zip(labels, classes):
        Y = check_matrix(Y, f"class '{label}'")
        if Y.shape[1] < 1:
            raise ValueError(f"class '{label}' has no samples")
        mats.append(Y)
    dims = {Y.shape[0] for Y in mats}
    if len(dims) != 1:
        raise ValueError(f"classes must share the feature dimension, got {dims}")
    return mats, labels


def _train(classes: Sequence[np.ndarray], cfg: TrainConfig, labels,
           rho: float, minibatch: bool, algorithm_name: str,
           feature_config: FeatureConfig | None,
           threads: int = 1) -> tuple[Model, TrainReport]:
    mats, labels = _validate_classes(classes, labels)
    start = time.perf_counter()

    def run_one(i: int):
        off = [mats[j] for j in range(len(mats)) if j != i]
        try:
            return _train_class(i, labels[i], mats[i], off, cfg, rho, minibatch)
        except Exception as exc:
            raise TrainingError(f"training class '{labels[i]}' failed: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, range(len(mats))))
    else:
        results = [run_one(i) for i in range(len(mats))]

    report = TrainReport(wall_time_s=time.perf_counter() - start)
    dictionaries = []
    for D, rows in results:
        dictionaries.append(D)
        report.rows.extend(rows)
    model = Model(classes=tuple(zip(labels, dictionaries)),
                  L=cfg.sparsity, rho=rho, feature_config=feature_config,
                  provenance={"algorithm": algorithm_name, "seed": str(cfg.seed)})
    return model, report


def train(classes: Sequence[np.ndarray], cfg: TrainConfig, labels=None,
          feature_config: FeatureConfig | None = None,
          threads: int = 1) -> tuple[Model, TrainReport]:
    """Train per cfg.algorithm: reconstructive forces rho = 0, the batch
    variant pools off classes, the minibatch variant visits them one by one."""
    rho = 0.0 if cfg.algorithm == "reconstructive" else cfg.rho
    minibatch = cfg.algorithm == "adversarial_minibatch"
    return _train(classes, cfg, labels, rho, minibatch, cfg.algorithm,
                  feature_config, threads)


def train_binary(Y1: np.ndarray, Y2: np.ndarray, cfg: TrainConfig, labels=None,
                 feature_config: FeatureConfig | None = None,
                 threads: int = 1) -> tuple[Model, TrainReport]:
    """Two-class special case; with a single off class the batch and
    minibatch styles coincide."""
    return train([Y1, Y2], cfg, labels, feature_config, threads)


def train_multiclass_batch(classes: Sequence[np.ndarray], cfg: TrainConfig,
                           labels=None, feature_config: FeatureConfig | None = None,
                           threads: int = 1) -> tuple[Model, TrainReport]:
    """All off classes pooled into one operand set per outer iteration."""
    return _train(classes, cfg, labels, cfg.rho, False, "adversarial_batch",
                  feature_config, threads)


def train_multiclass_minibatch(classes: Sequence[np.ndarray], cfg: TrainConfig,
                               labels=None, feature_config: FeatureConfig | None = None,
                               threads: int = 1) -> tuple[Model, TrainReport]:
    """One update per off class per outer iteration, ascending class order."""
    return _train(classes, cfg, labels, cfg.rho, True, "adversarial_minibatch",
                  feature_config, threads)

"""Accuracy, stratified k-fold splitting and (C, gamma) grid search."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptyMatrix, LengthMismatch, NonPositiveHyperparameter, SingleClass
from .svm import KKT_TOL, MAX_KERNEL_EVALS, fit_ovo, predict_ovo, rbf_kernel

log = logging.getLogger(__name__)

C_VALUES = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
GAMMA_FACTORS = (0.1, 1.0, 10.0)


def accuracy(y_pred, y_true) -> float:
    """Fraction of correctly classified samples."""
    y_pred = np.asarray(y_pred)
    y_true = np.asarray(y_true)
    if y_pred.shape != y_true.shape:
        raise LengthMismatch(f"{y_pred.shape} vs {y_true.shape}")
    if y_true.size == 0:
        raise EmptyMatrix("no predictions")
    return int((y_pred == y_true).sum()) / y_true.size


def default_grid(X, C_values=C_VALUES, gamma_factors=GAMMA_FACTORS) -> list[tuple[float, float]]:
    """C values x {g/10, g, 10 g} with g = 1 / (n_features * pooled feature variance)."""
    X = np.asarray(X, dtype=np.float64)
    var = float(X.var())
    g = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    return [(float(C), float(g * f)) for C in C_values for f in gamma_factors]


def stratified_folds(y, n_folds: int, seed: int) -> np.ndarray:
    """Fold number per row; each class is shuffled then dealt round-robin."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    fold = np.empty(len(y), dtype=int)
    offset = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        # rotate the starting fold so small classes don't all land in fold 0
        fold[idx] = (np.arange(len(idx)) + offset) % n_folds
        offset += len(idx)
    return fold


@dataclass(frozen=True)
class CVReport:
    results: tuple            # ((C, gamma, mean accuracy), ...) in grid order
    selected: tuple           # (C, gamma)
    folds: int

    @property
    def best_accuracy(self) -> float:
        return max(r[2] for r in self.results)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["C", "gamma", "mean_accuracy", "selected"])
        for C, g, acc in self.results:
            w.writerow([repr(C), repr(g), repr(acc), int((C, g) == self.selected)])
        return buf.getvalue()


def cross_validate(X, y, grid: Sequence[tuple[float, float]], folds: int = 10, seed: int = 0,
                   tol: float = KKT_TOL, max_kernel_evals: int = MAX_KERNEL_EVALS) -> CVReport:
    """Mean held-out accuracy of every (C, gamma) over stratified folds.

    Folds shrink to the smallest class count when a class has fewer rows than
    ``folds``. Ties go to the smallest C, then the smallest gamma.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes, y_idx = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise SingleClass("cross-validation needs at least two classes")
    if not grid:
        raise ValueError("empty hyperparameter grid")
    if any(not (C > 0 and g > 0) for C, g in grid):
        raise NonPositiveHyperparameter("grid values of C and gamma must be positive")
    min_count = int(np.bincount(y_idx).min())
    k = min(folds, min_count)
    if k < folds:
        log.info("reducing folds from %d to %d (smallest class has %d rows)", folds, k, min_count)

    n_cls = len(classes)
    acc = np.zeros(len(grid))
    if k < 2:
        # no held-out data possible: fall back to training accuracy
        for gi, (C, gamma) in enumerate(grid):
            K = rbf_kernel(X, X, gamma)
            pred = predict_ovo(K, fit_ovo(K, y_idx, n_cls, C, tol, max_kernel_evals), n_cls)
            acc[gi] = accuracy(pred, y_idx)
        k = 1
    else:
        fold = stratified_folds(y_idx, k, seed)
        for gamma in sorted({g for _, g in grid}):
            K = rbf_kernel(X, X, gamma)
            for f in range(k):
                tr, va = np.flatnonzero(fold != f), np.flatnonzero(fold == f)
                Ktr = K[np.ix_(tr, tr)]
                Kva = K[np.ix_(va, tr)]
                for gi, (C, g) in enumerate(grid):
                    if g == gamma:
                        machines = fit_ovo(Ktr, y_idx[tr], n_cls, C, tol, max_kernel_evals)
                        acc[gi] += accuracy(predict_ovo(Kva, machines, n_cls), y_idx[va])
        acc /= k

    results = tuple((float(C), float(g), float(a)) for (C, g), a in zip(grid, acc))
    best = max(r[2] for r in results)
    ties = [r for r in results if abs(r[2] - best) <= 1e-12]
    C_sel, g_sel, _ = min(ties, key=lambda r: (r[0], r[1]))
    return CVReport(results, (C_sel, g_sel), k)

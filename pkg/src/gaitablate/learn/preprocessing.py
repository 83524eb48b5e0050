"""Standardization and PCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyMatrix

_STD_EPS = 1e-12
_EIG_REL_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class ScalerModel:
    mean: np.ndarray
    std: np.ndarray

    @property
    def scale(self) -> np.ndarray:
        return np.where(self.std < _STD_EPS, 1.0, self.std)


def _check(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise EmptyMatrix(f"need a 2-D matrix with at least 2 rows, got shape {X.shape}")
    return X


def fit_scaler(X) -> ScalerModel:
    X = _check(X)
    return ScalerModel(X.mean(axis=0), X.std(axis=0))


def apply_scaler(model: ScalerModel, X) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - model.mean) / model.scale


@dataclass(frozen=True, eq=False)
class PCAModel:
    """Retained components ``(k, d)`` plus the full explained-variance spectrum."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def fit_pca(X, variance_fraction: float = 0.95, n_components: int | None = None) -> PCAModel:
    """Principal components of the sample covariance, largest variance first.

    Keeps the smallest k reaching ``variance_fraction`` of the total variance
    (at least 1, at most ``min(rows - 1, cols)``) unless ``n_components`` is
    given. Uses the Gram matrix when rows < cols.
    """
    X = _check(X)
    n, d = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean
    cap = min(n - 1, d)

    if n < d:
        w, V = np.linalg.eigh(Xc @ Xc.T / (n - 1))
        order = np.argsort(w)[::-1][:cap]
        w = np.clip(w[order], 0.0, None)
        V = V[:, order]
        nz = w > _EIG_REL_EPS * max(w[0], 0.0) if w[0] > 0 else np.zeros(len(w), bool)
        comps = np.zeros((cap, d))
        comps[nz] = (Xc.T @ V[:, nz] / np.sqrt(w[nz] * (n - 1))).T
    else:
        w, V = np.linalg.eigh(Xc.T @ Xc / (n - 1))
        order = np.argsort(w)[::-1][:cap]
        w = np.clip(w[order], 0.0, None)
        comps = V[:, order].T
        nz = w > _EIG_REL_EPS * w[0] if w[0] > 0 else np.zeros(len(w), bool)

    total = w.sum()
    usable = max(int(nz.sum()), 1)
    if n_components is not None:
        k = int(n_components)
        if not 1 <= k <= cap:
            raise ValueError(f"n_components must lie in [1, {cap}]")
    elif total <= 0:
        k = 1
    else:
        frac = np.cumsum(w) / total
        k = int(np.searchsorted(frac, variance_fraction - 1e-12) + 1)
        k = min(max(k, 1), usable, cap)
    comps = comps[:k].copy()
    if total <= 0:
        comps[0] = 0.0
        comps[0, 0] = 1.0
    signs = np.sign(comps[np.arange(k), np.abs(comps).argmax(axis=1)])
    comps *= np.where(signs == 0, 1.0, signs)[:, None]
    return PCAModel(mean, comps, w)


def pca_transform(model: PCAModel, X) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - model.mean) @ model.components.T


def pca_inverse_transform(model: PCAModel, Z) -> np.ndarray:
    return np.asarray(Z) @ model.components + model.mean

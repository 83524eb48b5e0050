"""RBF-kernel SVM trained by SMO, one-vs-one for multiclass problems."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numba import njit

from ..errors import CapReachedWarning, NonPositiveHyperparameter, SingleClass

KKT_TOL = 1e-3
MAX_KERNEL_EVALS = 10**7


@njit(cache=True, nogil=True)
def _smo(K, y, C, tol, max_iter):
    """Solve min 0.5 a'Qa - sum(a), 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.

    Working set: maximal violating pair. Returns (alpha, rho, iterations).
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while it < max_iter:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for t in range(n):
            v = -y[t] * G[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if v > gmax:
                    gmax = v
                    i = t
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                if v < gmin:
                    gmin = v
                    j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            break
        it += 1
        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if quad <= 0:
                quad = 1e-12
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if quad <= 0:
                quad = 1e-12
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        d_i = alpha[i] - old_i
        d_j = alpha[j] - old_j
        for t in range(n):
            G[t] += y[t] * (y[i] * K[i, t] * d_i + y[j] * K[j, t] * d_j)

    # offset: average over free vectors, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    s = 0.0
    nfree = 0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            s += yg
    rho = s / nfree if nfree > 0 else (ub + lb) / 2.0
    return alpha, rho, it


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True, eq=False)
class BinaryMachine:
    """One pairwise machine: class ``pos`` (y=+1) against class ``neg`` (y=-1)."""

    pos: int
    neg: int
    index: np.ndarray   # rows of the training matrix used by this machine
    alpha: np.ndarray
    y: np.ndarray
    rho: float
    iterations: int
    cap_reached: bool

    @property
    def coef(self) -> np.ndarray:
        return self.alpha * self.y


@dataclass(frozen=True, eq=False)
class SVMModel:
    classes: np.ndarray
    gamma: float
    C: float
    X: np.ndarray           # support vectors (rows with a nonzero alpha in any machine)
    machines: list = field(default_factory=list)

    def decision_matrix(self, X) -> np.ndarray:
        """Pairwise decision values ``(n, n_machines)``."""
        Kx = rbf_kernel(X, self.X, self.gamma)
        return np.column_stack([Kx[:, m.index] @ m.coef - m.rho for m in self.machines])

    def predict(self, X) -> np.ndarray:
        return self.classes[_vote(self.decision_matrix(X), self.machines, len(self.classes))]


def _vote(decisions: np.ndarray, machines, n_classes: int) -> np.ndarray:
    votes = np.zeros((decisions.shape[0], n_classes), dtype=np.int64)
    for k, m in enumerate(machines):
        winner = np.where(decisions[:, k] > 0, m.pos, m.neg)
        np.add.at(votes, (np.arange(decisions.shape[0]), winner), 1)
    # argmax returns the first maximum: ties go to the lowest class index
    return votes.argmax(axis=1)


def fit_ovo(K: np.ndarray, y_idx: np.ndarray, n_classes: int, C: float,
            tol: float = KKT_TOL, max_kernel_evals: int = MAX_KERNEL_EVALS) -> list:
    """Train all pairwise machines on a precomputed training kernel matrix."""
    machines = []
    for a, b in combinations(range(n_classes), 2):
        idx = np.flatnonzero((y_idx == a) | (y_idx == b))
        yy = np.where(y_idx[idx] == a, 1.0, -1.0)
        # each iteration reads two kernel rows
        max_iter = max(max_kernel_evals // (2 * len(idx)), 1)
        alpha, rho, it = _smo(np.ascontiguousarray(K[np.ix_(idx, idx)]), yy, float(C), tol, max_iter)
        cap = it >= max_iter
        if cap:
            warnings.warn(f"SMO hit its iteration cap for classes {a} vs {b}", CapReachedWarning)
        machines.append(BinaryMachine(a, b, idx, alpha, yy, float(rho), int(it), bool(cap)))
    return machines


def predict_ovo(Kx: np.ndarray, machines, n_classes: int) -> np.ndarray:
    """Class indices for rows of ``Kx`` (kernel against the full training matrix)."""
    dec = np.column_stack([Kx[:, m.index] @ m.coef - m.rho for m in machines])
    return _vote(dec, machines, n_classes)


def train_svm(X, y, C: float = 1.0, gamma: float = 1.0, tol: float = KKT_TOL,
              max_kernel_evals: int = MAX_KERNEL_EVALS) -> SVMModel:
    if not (C > 0 and gamma > 0):
        raise NonPositiveHyperparameter(f"C and gamma must be positive, got C={C}, gamma={gamma}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes, y_idx = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise SingleClass("need at least two classes")
    machines = fit_ovo(rbf_kernel(X, X, gamma), y_idx, len(classes), C, tol, max_kernel_evals)

    # keep only the rows that carry weight and re-index machines onto them
    used = np.zeros(len(X), dtype=bool)
    for m in machines:
        used[m.index[m.alpha > 0]] = True
    remap = -np.ones(len(X), dtype=int)
    remap[used] = np.arange(used.sum())
    compact = []
    for m in machines:
        keep = m.alpha > 0
        compact.append(BinaryMachine(m.pos, m.neg, remap[m.index[keep]], m.alpha[keep],
                                     m.y[keep], m.rho, m.iterations, m.cap_reached))
    return SVMModel(classes, float(gamma), float(C), X[used], compact)

"""Per-subject eigenposture + sinusoid gait model and group-level equalization."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import DegenerateData
from ..mocap import Dataset, GaitSample

N_COMPONENTS = 4
FREQ_GRID = np.round(np.arange(0.25, 4.0 + 1e-9, 0.01), 10)
_VAR_EPS = 1e-18


@dataclass(frozen=True, eq=False)
class SinusoidGaitModel:
    """mean pose + sum_i (a_i sin(2 pi f_i t / T + phi_i) + c_i) * component_i.

    ``components`` has shape ``(4, M*3)`` (flattened poses); amplitudes in mm,
    frequencies in cycles per stride, phases in radians. The score offsets
    ``c_i`` absorb the non-zero frame mean of a sinusoid that does not
    complete a whole number of cycles, which centring moves into the scores.
    """

    mean_pose: np.ndarray
    components: np.ndarray
    amplitudes: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray
    residual_rms: float
    n_frames: int = 100
    offsets: np.ndarray | None = None

    def synthesize(self, n_frames: int | None = None, amplitudes=None, frequencies=None) -> np.ndarray:
        """Frames ``(T, M, 3)`` of the model, optionally with substituted parameters."""
        T = self.n_frames if n_frames is None else n_frames
        a = self.amplitudes if amplitudes is None else np.asarray(amplitudes, dtype=float)
        f = self.frequencies if frequencies is None else np.asarray(frequencies, dtype=float)
        t = np.arange(T)[:, None]
        scores = a * np.sin(2 * np.pi * f * t / T + self.phases)
        if self.offsets is not None:
            scores = scores + self.offsets
        flat = self.mean_pose.reshape(-1) + scores @ self.components
        return flat.reshape(T, -1, 3)


def _fit_given_freq(y: np.ndarray, t: np.ndarray, T: int, f: float):
    """Closed-form least squares y ~ A sin(wt) + B cos(wt) + c. Returns (sse, a, phi, c)."""
    w = 2 * np.pi * f * t / T
    D = np.column_stack([np.sin(w), np.cos(w), np.ones_like(w)])
    coef, *_ = np.linalg.lstsq(D, y, rcond=None)
    resid = y - D @ coef
    A, B, c = coef
    return float(resid @ resid), float(np.hypot(A, B)), float(np.arctan2(B, A)), float(c)


def _grid_sse(y: np.ndarray, t: np.ndarray, T: int) -> np.ndarray:
    """Residual sum of squares of the 3-term fit at every grid frequency at once."""
    w = 2 * np.pi * FREQ_GRID[:, None] * t[None, :] / T
    basis = np.stack([np.sin(w), np.cos(w), np.broadcast_to(np.ones_like(t), w.shape)], axis=1)
    gram = np.einsum("fin,fjn->fij", basis, basis)
    rhs = basis @ y
    # tiny ridge keeps the solve defined where sin and the constant coincide
    gram = gram + 1e-12 * np.trace(gram, axis1=1, axis2=2)[:, None, None] * np.eye(3)
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    return np.maximum(y @ y - np.einsum("fi,fi->f", coef, rhs), 0.0)


def fit_sinusoid(y: np.ndarray, t: np.ndarray, T: int, offset: bool = False):
    """Fit ``y(t) ~ a sin(2 pi f t / T + phi) + c``; returns (a, f, phi) or (a, f, phi, c).

    Frequency: grid search over 0.25..4.0 cycles/stride at 0.01 spacing, then
    bounded scalar refinement within one grid cell of the best node.
    """
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    sse = _grid_sse(y, t, T)
    best = float(FREQ_GRID[int(np.argmin(sse))])
    lo, hi = max(best - 0.01, FREQ_GRID[0]), min(best + 0.01, FREQ_GRID[-1])
    res = minimize_scalar(lambda f: _fit_given_freq(y, t, T, f)[0], bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-8})
    f = float(res.x) if res.fun <= sse.min() else best
    _, a, phi, c = _fit_given_freq(y, t, T, f)
    return (a, f, phi, c) if offset else (a, f, phi)


def fit_sinusoid_model(samples: Sequence[GaitSample]) -> SinusoidGaitModel:
    """Fit the eigenposture/sinusoid model to all samples of one subject."""
    if not samples:
        raise DegenerateData("no samples to fit")
    T = samples[0].n_frames
    if any(s.n_frames != T for s in samples):
        raise DegenerateData("samples must share one frame count")
    X = np.concatenate([s.frames.reshape(T, -1) for s in samples])
    t = np.tile(np.arange(T), len(samples)).astype(float)
    mean = X.mean(axis=0)
    D = X - mean
    if float((D * D).sum()) / D.size <= _VAR_EPS:
        raise DegenerateData("zero pose variance")

    _, sv, vt = np.linalg.svd(D, full_matrices=False)
    k = min(N_COMPONENTS, vt.shape[0])
    comps = vt[:k]
    # deterministic sign: largest-magnitude loading positive
    signs = np.sign(comps[np.arange(k), np.abs(comps).argmax(axis=1)])
    comps = comps * np.where(signs == 0, 1.0, signs)[:, None]
    scores = D @ comps.T

    params = np.array([fit_sinusoid(scores[:, i], t, T, offset=True) for i in range(k)])
    model = SinusoidGaitModel(
        mean_pose=mean.reshape(-1, 3), components=comps,
        amplitudes=params[:, 0], frequencies=params[:, 1], phases=params[:, 2],
        residual_rms=0.0, n_frames=T, offsets=params[:, 3],
    )
    recon = model.synthesize().reshape(T, -1)
    resid = (X.reshape(len(samples), T, -1) - recon).ravel()
    return dataclasses.replace(model, residual_rms=float(np.sqrt(np.mean(resid ** 2))))


def equalize(dataset: Dataset, target: str = "frequency") -> Dataset:
    """Replace each subject's sinusoid amplitudes or frequencies by the group mean.

    Every sample is resynthesized from its subject's model, so all samples
    of one subject become identical; components are matched across subjects
    by explained-variance rank only.
    """
    if target not in ("amplitude", "frequency"):
        raise ValueError("target must be 'amplitude' or 'frequency'")
    models = {s.subject_id: fit_sinusoid_model(s.samples) for s in dataset.subjects}
    key = "amplitudes" if target == "amplitude" else "frequencies"
    group_mean = np.mean([getattr(m, key) for m in models.values()], axis=0)

    subjects = []
    for sub in dataset.subjects:
        m = models[sub.subject_id]
        frames = m.synthesize(**{key: group_mean})
        subjects.append(dataclasses.replace(
            sub, samples=tuple(s.with_frames(frames) for s in sub.samples)))
    return dataset.with_subjects(subjects)

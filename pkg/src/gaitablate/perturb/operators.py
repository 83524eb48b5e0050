"""Frame-local feature-masking operators.

Each operator takes a :class:`GaitSample` and returns a new one; inputs are
never modified. Channels are the ``M*3`` marker-axis time series.
"""

from __future__ import annotations

import numpy as np

from ..errors import TooFewFrames, UnknownPart, WindowTooLarge
from ..layout import GROUPS
from ..mocap import BodyPartMap, GaitSample, MarkerLayout, resample_frames

METHODS = ("rolling_average", "interpolation")
WINDOWS = (1, 3)
NORM_MODES = ("y_axis", "all_axes", "per_dimension")
POSE_MODES = ("average", "first")
_EPS_STD = 1e-12


def _smooth(c: np.ndarray, method: str, w: int) -> np.ndarray:
    T = c.shape[0]
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if w < 1 or T <= 2 * w:
        raise WindowTooLarge(f"window {w} needs more than {2 * w} frames, got {T}")
    if method == "rolling_average":
        out = np.empty_like(c)
        for t in range(T):
            window = c[max(t - w, 0):t + w + 1]
            # averaging deviations keeps constant channels bit-exact
            out[t] = c[t] + (window - c[t]).mean(axis=0)
        return out
    out = c.copy()
    out[w:T - w] = (c[:T - 2 * w] + c[2 * w:]) / 2.0
    return out


def _exact_residual(s: np.ndarray, ideal: np.ndarray) -> np.ndarray:
    # Nudge s - ideal by single ulps until ideal + residual == s bit-for-bit;
    # this converges whenever |residual| is not much larger than |s|.
    r = s - ideal
    for _ in range(4):
        total = ideal + r
        bad = total != s
        if not bad.any():
            break
        step = np.where(total > s, -np.inf, np.inf)
        r = np.where(bad, np.nextafter(r, step), r)
    return r


def ideal_trajectory(sample: GaitSample, method: str = "rolling_average", w: int = 1) -> GaitSample:
    """Smoothed ("ideal") trajectory; keeps macro movement, drops small variations.

    ``rolling_average`` averages frames ``t-w..t+w`` (window truncated at the
    ends); ``interpolation`` takes the midpoint of frames ``t-w`` and ``t+w``
    and copies the first/last ``w`` frames unchanged.
    """
    return sample.with_frames(_smooth(sample.frames, method, w))


def remove_trajectories(sample: GaitSample, method: str = "rolling_average", w: int = 1) -> GaitSample:
    """Residual after subtracting the ideal trajectory (keeps micro variations)."""
    ideal = _smooth(sample.frames, method, w)
    return sample.with_frames(_exact_residual(sample.frames, ideal))


def _floor_split(x: np.ndarray, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Split x into (multiple of step, remainder in [0, step))."""
    if step <= 0:
        raise ValueError("step must be positive")
    q = np.floor(x / step) * step
    r = x - q
    # x / step can round across an integer boundary
    q = np.where(r >= step, q + step, q)
    r = x - q
    q = np.where(r < 0, q - step, q)
    r = np.minimum(x - q, np.nextafter(step, 0.0))
    return q, r


def coarsen_macro(sample: GaitSample, step: float = 1000) -> GaitSample:
    return sample.with_frames(_floor_split(sample.frames, float(step))[0])


def coarsen_micro(sample: GaitSample, modulus: float = 10) -> GaitSample:
    return sample.with_frames(_floor_split(sample.frames, float(modulus))[1])


def body_part(sample: GaitSample, layout: MarkerLayout, body_map: BodyPartMap,
              part: str, mode: str = "remove") -> GaitSample:
    """Zero the markers of ``part`` (``remove``) or of every other part (``keep``)."""
    if part not in GROUPS:
        raise UnknownPart(part)
    if mode not in ("keep", "remove"):
        raise ValueError(f"mode must be keep or remove, got {mode!r}")
    in_part = np.zeros(layout.n_markers, dtype=bool)
    in_part[body_map.part_indices(layout, part)] = True
    zero = in_part if mode == "remove" else ~in_part
    frames = sample.frames.copy()
    frames[:, zero, :] = 0.0
    return sample.with_frames(frames)


def static_pose(sample: GaitSample, pose_mode: str = "average") -> GaitSample:
    if pose_mode == "average":
        pose = sample.frames.mean(axis=0, keepdims=True)
    elif pose_mode == "first":
        pose = sample.frames[:1]
    else:
        raise ValueError(f"pose_mode must be one of {POSE_MODES}")
    return sample.with_frames(pose)


def resample_static(sample: GaitSample, target: int = 10) -> GaitSample:
    return sample.with_frames(resample_frames(sample.frames, target))


def motion_extraction(sample: GaitSample) -> GaitSample:
    """Frame-to-frame differences; output has one frame fewer."""
    if sample.n_frames < 2:
        raise TooFewFrames("motion extraction needs at least 2 frames")
    return sample.with_frames(np.diff(sample.frames, axis=0))


def _zscore(x: np.ndarray, axis) -> np.ndarray:
    mu = x.mean(axis=axis, keepdims=True)
    sd = x.std(axis=axis, keepdims=True)
    centered = x - mu
    return np.where(sd < _EPS_STD, centered, centered / np.where(sd < _EPS_STD, 1.0, sd))


def normalize(sample: GaitSample, norm_mode: str = "all_axes") -> GaitSample:
    """Z-score coordinates using statistics pooled over the whole sequence.

    ``y_axis`` pools every y value and leaves x/z untouched, ``all_axes``
    pools per axis, ``per_dimension`` uses one mean/std per marker-axis
    channel. Near-constant pools are only centred. A single-frame input is
    accepted (axis pools still span all markers).
    """
    f = sample.frames
    if norm_mode == "y_axis":
        out = f.copy()
        out[:, :, 1] = _zscore(f[:, :, 1], axis=None)
    elif norm_mode == "all_axes":
        out = _zscore(f, axis=(0, 1))
    elif norm_mode == "per_dimension":
        out = _zscore(f, axis=0)
    else:
        raise ValueError(f"norm_mode must be one of {NORM_MODES}")
    return sample.with_frames(out)


def identity(sample: GaitSample) -> GaitSample:
    return sample

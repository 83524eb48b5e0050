"""Seeded synthetic walkers on the reference 62-marker layout.

Each subject is a rigid-segment skeleton whose joints oscillate
sinusoidally over the stride. Sex shifts the distributions of stature and
shoulder/hip width. Per-sample variation (marker jitter, start offset,
small amplitude/phase changes) scales with ``noise_mm``; with
``noise_mm=0`` every sample of a subject is identical.

The walker stays in place (treadmill-style) and all lab coordinates are
positive: x forward around 1500 mm, y up from the floor, z lateral around
800 mm (left side at smaller z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams
from pathlib import Path

from .mocap import (
    LAYOUT_FILE,
    METADATA_FILE,
    Dataset,
    ForceSeries,
    GaitSample,
    MarkerLayout,
    Subject,
    reference_layout,
    save_layout,
    write_force_csv,
    write_marker_csv,
)

ORIGIN_X = 1500.0
ORIGIN_Z = 800.0
FLOOR_CLEARANCE = 200.0


@dataclass(frozen=True)
class WalkerParams:
    sex: str
    stature: float
    segments: dict          # segment name -> length in mm
    hip_width: float
    shoulder_width: float
    frequency: float        # cycles per stride
    amplitudes: dict        # joint -> rad (pelvis bob/sway in mm)
    offsets: dict           # joint -> constant angle, rad
    phases: dict            # joint -> phase, rad
    noise_mm: float = 2.0

    def __post_init__(self):
        if any(v <= 0 for v in self.segments.values()) or self.hip_width <= 0 or self.shoulder_width <= 0:
            raise InvalidParams("segment lengths and widths must be positive")
        if self.frequency <= 0:
            raise InvalidParams("frequency must be positive")
        if self.noise_mm < 0:
            raise InvalidParams("noise must be non-negative")


_SEGMENT_FRACTIONS = {
    "thigh": 0.245, "shank": 0.246, "foot": 0.152, "upper_arm": 0.186,
    "forearm": 0.146, "hand": 0.108, "trunk": 0.30, "neck": 0.05, "head": 0.065,
}


def draw_params(rng: np.random.Generator, sex: str, noise_mm: float = 2.0) -> WalkerParams:
    male = sex == "M"
    stature = rng.normal(1790.0, 65.0) if male else rng.normal(1650.0, 60.0)
    segments = {k: stature * f * rng.normal(1.0, 0.03) for k, f in _SEGMENT_FRACTIONS.items()}
    hip_width = stature * (0.16 if male else 0.175) * rng.normal(1.0, 0.04)
    shoulder_width = stature * (0.25 if male else 0.225) * rng.normal(1.0, 0.04)
    amplitudes = {
        "hip": rng.normal(0.40, 0.05), "knee": rng.normal(1.0, 0.1), "ankle": rng.normal(0.25, 0.05),
        "shoulder": rng.normal(0.30, 0.08), "elbow": rng.normal(0.30, 0.08),
        "bob": rng.normal(20.0, 5.0), "sway": rng.normal(25.0, 8.0), "yaw": rng.normal(0.08, 0.03),
    }
    amplitudes = {k: abs(v) for k, v in amplitudes.items()}
    offsets = {"hip": rng.normal(0.05, 0.03), "elbow": rng.normal(0.25, 0.08),
               "trunk": rng.normal(0.05, 0.03)}
    phases = {k: rng.normal(0.0, 0.3) for k in ("knee", "ankle", "elbow", "shoulder")}
    frequency = float(np.clip(rng.normal(1.0, 0.04), 0.85, 1.15))
    return WalkerParams(sex, stature, segments, hip_width, shoulder_width, frequency,
                        amplitudes, offsets, phases, noise_mm)


def _rz(theta):
    """Stack of rotations about z (sagittal flexion; positive swings forward)."""
    c, s = np.cos(theta), np.sin(theta)
    R = np.zeros(np.shape(theta) + (3, 3))
    R[..., 0, 0], R[..., 0, 1] = c, -s
    R[..., 1, 0], R[..., 1, 1] = s, c
    R[..., 2, 2] = 1.0
    return R


def _ry(theta):
    c, s = np.cos(theta), np.sin(theta)
    R = np.zeros(np.shape(theta) + (3, 3))
    R[..., 0, 0], R[..., 0, 2] = c, s
    R[..., 2, 0], R[..., 2, 2] = -s, c
    R[..., 1, 1] = 1.0
    return R


def _apply(R, origin, offset):
    """Global marker trajectory ``origin + R @ offset`` for every frame."""
    return origin + np.einsum("tij,j->ti", R, np.asarray(offset, dtype=float))


def walker_markers(p: WalkerParams, n_frames: int = 100, frames_per_stride: float | None = None,
                   amp_scale: float = 1.0, phase_shift: float = 0.0,
                   origin_shift=(0.0, 0.0)) -> dict:
    """Noise-free marker trajectories ``{name: (T, 3)}`` of one walker."""
    fps = n_frames if frames_per_stride is None else frames_per_stride
    t = np.arange(n_frames, dtype=float)
    A = {k: v * amp_scale for k, v in p.amplitudes.items()}
    seg = p.segments
    base = 2 * np.pi * p.frequency * t / fps + phase_shift

    leg_len = seg["thigh"] + seg["shank"]
    pelvis = np.stack([
        np.full(n_frames, ORIGIN_X + origin_shift[0]),
        np.full(n_frames, leg_len + FLOOR_CLEARANCE) + A["bob"] * np.sin(2 * base),
        np.full(n_frames, ORIGIN_Z + origin_shift[1]) + A["sway"] * np.sin(base),
    ], axis=1)
    R_pel = _ry(A["yaw"] * np.sin(base))
    R_trunk = R_pel @ _rz(np.full(n_frames, p.offsets["trunk"]))
    out = {}

    # trunk, head
    L = seg["trunk"]
    for name, off in {"C7": (-60, L, 0), "T4": (-80, 0.8 * L, 0), "T10": (-90, 0.45 * L, 0),
                      "CLAV": (40, 0.95 * L, 0), "STRN": (80, 0.7 * L, 0),
                      "RBAK": (-90, 0.65 * L, 60)}.items():
        out[name] = _apply(R_trunk, pelvis, off)
    head_c = _apply(R_trunk, pelvis, (0, L + seg["neck"] + seg["head"], 0))
    h = seg["head"]
    for name, off in {"LFHD": (0.8 * h, 0.4 * h, -0.55 * h), "RFHD": (0.8 * h, 0.4 * h, 0.55 * h),
                      "LBHD": (-0.9 * h, 0.3 * h, -0.5 * h), "RBHD": (-0.9 * h, 0.3 * h, 0.5 * h)}.items():
        out[name] = _apply(R_trunk, head_c, off)

    for side, sgn, lead in (("L", -1.0, 0.0), ("R", 1.0, np.pi)):
        ph = base + lead
        # pelvis markers
        hw = p.hip_width / 2
        for name, off in {"ASI": (70, 20, sgn * hw), "PSI": (-80, 40, sgn * 0.4 * hw),
                          "GTR": (0, -80, sgn * (hw + 40))}.items():
            out[side + name] = _apply(R_pel, pelvis, off)

        # leg chain
        hip_a = p.offsets["hip"] + A["hip"] * np.sin(ph)
        knee_a = A["knee"] * (1 + np.sin(ph + p.phases["knee"])) / 2
        ankle_a = A["ankle"] * np.sin(ph + p.phases["ankle"])
        R_th = R_pel @ _rz(hip_a)
        R_sh = R_pel @ _rz(hip_a - knee_a)
        R_ft = R_pel @ _rz(hip_a - knee_a + ankle_a)
        hip_j = _apply(R_pel, pelvis, (0, 0, sgn * hw))
        Lt, Ls, Lf = seg["thigh"], seg["shank"], seg["foot"]
        knee_j = _apply(R_th, hip_j, (0, -Lt, 0))
        ankle_j = _apply(R_sh, knee_j, (0, -Ls, 0))
        for name, off in {"THI": (0, -0.5 * Lt, sgn * 70), "TH2": (40, -0.35 * Lt, sgn * 60),
                          "TH3": (-40, -0.65 * Lt, sgn * 60), "KNE": (0, -Lt, sgn * 50),
                          "KNM": (0, -Lt, -sgn * 50)}.items():
            out[side + name] = _apply(R_th, hip_j, off)
        for name, off in {"TIB": (0, -0.5 * Ls, sgn * 45), "TB2": (40, -0.3 * Ls, sgn * 40),
                          "TB3": (-30, -0.7 * Ls, sgn * 40), "ANK": (0, -Ls, sgn * 35),
                          "ANM": (0, -Ls, -sgn * 35)}.items():
            out[side + name] = _apply(R_sh, knee_j, off)
        for name, off in {"HEE": (-50, -40, 0), "HEL": (-40, -40, sgn * 30),
                          "MT1": (0.65 * Lf, -60, -sgn * 30), "MT5": (0.6 * Lf, -60, sgn * 35),
                          "TOE": (0.8 * Lf, -55, 0)}.items():
            out[side + name] = _apply(R_ft, ankle_j, off)

        # arm chain, swinging against the same-side leg
        sw = p.shoulder_width / 2
        sh_j = _apply(R_trunk, pelvis, (0, L * 0.93, sgn * sw))
        sh_a = -A["shoulder"] * np.sin(ph + p.phases["shoulder"])
        el_a = p.offsets["elbow"] + A["elbow"] * (1 + np.sin(ph + p.phases["elbow"])) / 2
        R_ua = R_trunk @ _rz(sh_a)
        R_fa = R_trunk @ _rz(sh_a + el_a)
        Lu, Lfa, Lh = seg["upper_arm"], seg["forearm"], seg["hand"]
        el_j = _apply(R_ua, sh_j, (0, -Lu, 0))
        for name, off in {"SHO": (0, 30, sgn * 10), "UPA": (-20, -0.5 * Lu, sgn * 45),
                          "ELB": (0, -Lu, sgn * 35), "ELM": (0, -Lu, -sgn * 35)}.items():
            out[side + name] = _apply(R_ua, sh_j, off)
        for name, off in {"FRM": (0, -0.5 * Lfa, sgn * 30), "WRA": (0, -Lfa, sgn * 25),
                          "WRB": (0, -Lfa, -sgn * 25), "FIN": (0, -Lfa - 0.6 * Lh, 0)}.items():
            out[side + name] = _apply(R_fa, el_j, off)
    return out


def walker_frames(p: WalkerParams, layout: MarkerLayout, rng: np.random.Generator | None = None,
                  n_frames: int = 100, frames_per_stride: float | None = None) -> np.ndarray:
    """One sample ``(T, M, 3)``; per-sample variation drawn from ``rng`` when noise > 0."""
    s = p.noise_mm
    if s > 0 and rng is not None:
        markers = walker_markers(
            p, n_frames, frames_per_stride,
            amp_scale=rng.normal(1.0, 0.01 * s), phase_shift=rng.normal(0.0, 0.02 * s),
            origin_shift=tuple(rng.normal(0.0, 5.0 * s, size=2)))
    else:
        markers = walker_markers(p, n_frames, frames_per_stride)
    frames = np.stack([markers[m] for m in layout.marker_names], axis=1)
    if s > 0 and rng is not None:
        frames = frames + rng.normal(0.0, s, size=frames.shape)
    return frames


def subject_ids(n: int) -> list[str]:
    width = max(2, len(str(n)))
    return [f"S{i + 1:0{width}d}" for i in range(n)]


def generate_dataset(n_subjects: int = 20, samples_per_subject: int = 20, seed: int = 0,
                     layout: MarkerLayout | None = None, noise_mm: float = 2.0,
                     n_frames: int = 100) -> Dataset:
    """Synthetic dataset; the first ceil(n/2) subjects are female."""
    if n_subjects < 2 or samples_per_subject < 2:
        raise InvalidParams("need at least 2 subjects and 2 samples per subject")
    ref_layout, body_map = reference_layout()
    layout = layout or ref_layout
    if set(layout.marker_names) != set(ref_layout.marker_names):
        raise InvalidParams("synthetic walkers only populate the reference marker set")
    root = np.random.SeedSequence(seed)
    n_female = (n_subjects + 1) // 2
    subjects = []
    for k, (sid, child) in enumerate(zip(subject_ids(n_subjects), root.spawn(n_subjects))):
        sex = "F" if k < n_female else "M"
        param_rng, sample_rng = (np.random.default_rng(c) for c in child.spawn(2))
        params = draw_params(param_rng, sex, noise_mm)
        samples = [
            GaitSample(sid, f"{j + 1:02d}", walker_frames(params, layout, sample_rng, n_frames),
                       float(n_frames))
            for j in range(samples_per_subject)
        ]
        subjects.append(Subject(sid, sex, samples))
    return Dataset(tuple(subjects), layout, body_map)


def subject_params(n_subjects: int, seed: int = 0, noise_mm: float = 2.0) -> list[WalkerParams]:
    """The walker parameters ``generate_dataset`` draws for the same arguments."""
    root = np.random.SeedSequence(seed)
    n_female = (n_subjects + 1) // 2
    out = []
    for k, child in enumerate(root.spawn(n_subjects)):
        param_rng = np.random.default_rng(child.spawn(2)[0])
        out.append(draw_params(param_rng, "F" if k < n_female else "M", noise_mm))
    return out


def sinusoid_walker(mean_pose: np.ndarray, directions: np.ndarray, amplitudes, frequencies,
                    phases, n_frames: int = 100) -> np.ndarray:
    """Frames of ``mean + sum_i a_i sin(2 pi f_i t / T + phi_i) u_i`` (known ground truth)."""
    t = np.arange(n_frames)[:, None]
    scores = np.asarray(amplitudes) * np.sin(
        2 * np.pi * np.asarray(frequencies) * t / n_frames + np.asarray(phases))
    flat = mean_pose.reshape(-1) + scores @ np.asarray(directions).reshape(len(scores[0]), -1)
    return flat.reshape(n_frames, -1, 3)


def raw_trial(p: WalkerParams, layout: MarkerLayout, rng: np.random.Generator,
              stride_frames: int = 275, lead_frames: int = 40, tail_frames: int = 60,
              mocap_rate_hz: float = 250.0, force_rate_hz: float = 1000.0):
    """Unsegmented trial at 250 Hz plus two-plate vertical forces at 1000 Hz.

    Plate 1 sees the stride-defining foot contact at ``lead_frames``; plate 2
    sees the contralateral contact half a stride later. Returns
    ``(frames, plate1, plate2, (start, end))`` with the true stride interval.
    """
    n = lead_frames + stride_frames + tail_frames
    frames = walker_frames(p, layout, rng, n, stride_frames)
    ratio = int(round(force_rate_hz / mocap_rate_hz))
    n_force = n * ratio
    stance = int(0.6 * stride_frames * ratio)

    def pulse(onset):
        f = np.zeros(n_force)
        k = np.arange(stance)
        f[onset:onset + stance] = 700.0 * np.sin(np.pi * (k + 0.5) / stance)[: max(0, n_force - onset)]
        return f + np.abs(rng.normal(0.0, 2.0, n_force))

    c1 = lead_frames * ratio
    c2 = c1 + stride_frames * ratio // 2
    return (frames, ForceSeries(pulse(c1), force_rate_hz, "1"), ForceSeries(pulse(c2), force_rate_hz, "2"),
            (lead_frames, lead_frames + stride_frames))


def write_raw_dataset(root, n_subjects: int = 4, samples_per_subject: int = 2, seed: int = 0,
                      noise_mm: float = 2.0, stride_frames: int = 275) -> dict:
    """Write unsegmented trials with force-plate data; returns the true stride bounds."""
    layout, body_map = reference_layout()
    root = Path(root)
    (root / "raw").mkdir(parents=True, exist_ok=True)
    save_layout(root / LAYOUT_FILE, layout, body_map)
    seeds = np.random.SeedSequence(seed)
    n_female = (n_subjects + 1) // 2
    lines = ["subject_id,sex,sample_id,marker_file,frame_rate_hz,force_file,force_rate_hz"]
    truth = {}
    for k, (sid, child) in enumerate(zip(subject_ids(n_subjects), seeds.spawn(n_subjects))):
        sex = "F" if k < n_female else "M"
        param_rng, sample_rng = (np.random.default_rng(c) for c in child.spawn(2))
        params = draw_params(param_rng, sex, noise_mm)
        for j in range(samples_per_subject):
            smp = f"{j + 1:02d}"
            frames, p1, p2, bounds = raw_trial(params, layout, sample_rng, stride_frames)
            mk, fc = f"raw/{sid}__{smp}.csv", f"raw/{sid}__{smp}_force.csv"
            write_marker_csv(root / mk, frames, layout)
            write_force_csv(root / fc, p1, p2)
            lines.append(f"{sid},{sex},{smp},{mk},250.0,{fc},1000.0")
            truth[(sid, smp)] = bounds
    (root / METADATA_FILE).write_text("\n".join(lines) + "\n")
    return truth

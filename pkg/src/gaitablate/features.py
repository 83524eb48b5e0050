"""Feature encodings: flattened poses and 17-marker joint angles."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import IncompleteReductionMap
from .layout import ROLES
from .mocap import BodyPartMap, GaitSample, MarkerLayout

ENCODINGS = ("flatten", "reduced_angles")

# (parent, joint, child) role triples, one per reported angle
JOINT_CHAINS = {
    "lshoulder": ("neck", "lshoulder", "lelbow"),
    "rshoulder": ("neck", "rshoulder", "relbow"),
    "lelbow": ("lshoulder", "lelbow", "lwrist"),
    "relbow": ("rshoulder", "relbow", "rwrist"),
    "lhip": ("torso", "lhip", "lknee"),
    "rhip": ("torso", "rhip", "rknee"),
    "lknee": ("lhip", "lknee", "lankle"),
    "rknee": ("rhip", "rknee", "rankle"),
    "lankle": ("lknee", "lankle", "ltoe"),
    "rankle": ("rknee", "rankle", "rtoe"),
}
MIN_SEGMENT_MM = 1e-9


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    encoding: str
    provenance: tuple  # (subject_id, sample_id)
    degenerate: int = 0


def flatten(sample: GaitSample) -> FeatureVector:
    """Frame-major, then marker, then x/y/z; length T*M*3."""
    return FeatureVector(sample.frames.reshape(-1).copy(), "flatten",
                         (sample.subject_id, sample.sample_id))


def _reduction_matrix(layout: MarkerLayout, body_map: BodyPartMap) -> np.ndarray:
    missing = [r for r in ROLES if not body_map.reduction_17.get(r)]
    if missing:
        raise IncompleteReductionMap(f"no source markers for roles {missing}")
    W = np.zeros((len(ROLES), layout.n_markers))
    for i, role in enumerate(ROLES):
        sources = [layout.index(m) for m in body_map.reduction_17[role]]
        W[i, sources] = 1.0 / len(sources)
    return W


def reduce_markers(sample: GaitSample, layout: MarkerLayout, body_map: BodyPartMap) -> GaitSample:
    """17-marker sample whose markers are centroids of their source markers (order: ``ROLES``)."""
    W = _reduction_matrix(layout, body_map)
    return sample.with_frames(np.einsum("rm,tmc->trc", W, sample.frames))


def joint_angle_matrix(frames17: np.ndarray) -> tuple[np.ndarray, int]:
    """Interior angles ``(T, 10)`` in radians and the count of degenerate angles.

    The angle at joint J is ``arccos(-u . v)`` with u, v the unit directions
    parent->J and J->child, so a straight limb reads pi. A segment shorter
    than 1e-9 mm yields angle 0 and counts as degenerate.
    """
    idx = {r: i for i, r in enumerate(ROLES)}
    parents = frames17[:, [idx[p] for p, _, _ in JOINT_CHAINS.values()]]
    joints = frames17[:, [idx[j] for _, j, _ in JOINT_CHAINS.values()]]
    children = frames17[:, [idx[c] for _, _, c in JOINT_CHAINS.values()]]
    u = joints - parents
    v = children - joints
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    bad = (nu < MIN_SEGMENT_MM) | (nv < MIN_SEGMENT_MM)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = -np.einsum("tjc,tjc->tj", u, v) / (nu * nv)
    angles = np.arccos(np.clip(np.where(bad, 1.0, cos), -1.0, 1.0))
    angles[bad] = 0.0
    return angles, int(bad.sum())


def joint_angles(sample17: GaitSample) -> FeatureVector:
    if sample17.n_markers != len(ROLES):
        raise ValueError(f"expected a {len(ROLES)}-marker sample, got {sample17.n_markers}")
    angles, bad = joint_angle_matrix(sample17.frames)
    return FeatureVector(angles.reshape(-1), "reduced_angles",
                         (sample17.subject_id, sample17.sample_id), bad)


def encode(sample: GaitSample, encoding: str, layout: MarkerLayout, body_map: BodyPartMap) -> FeatureVector:
    if encoding == "flatten":
        return flatten(sample)
    if encoding == "reduced_angles":
        return joint_angles(reduce_markers(sample, layout, body_map))
    raise ValueError(f"unknown encoding {encoding!r}")


def feature_matrix(samples: Sequence[GaitSample], encoding: str, layout: MarkerLayout,
                   body_map: BodyPartMap) -> tuple[np.ndarray, int]:
    """Stack encoded samples row-wise; returns (matrix, total degeneracy count)."""
    vecs = [encode(s, encoding, layout, body_map) for s in samples]
    lengths = {len(v.values) for v in vecs}
    if len(lengths) > 1:
        raise ValueError(f"feature lengths differ across samples: {sorted(lengths)}")
    return np.vstack([v.values for v in vecs]), sum(v.degenerate for v in vecs)


def export_feature_csv(path, X: np.ndarray, provenance: Sequence[tuple], encoding: str,
                       pipeline_text: str = "") -> None:
    """Write rows = samples, columns = features, plus a ``<path>.manifest.json`` sidecar."""
    path = Path(path)
    lines = [",".join(["subject_id", "sample_id"] + [f"f{j}" for j in range(X.shape[1])])]
    for (sub, smp), row in zip(provenance, X):
        lines.append(",".join([sub, smp] + [repr(v) for v in row.tolist()]))
    path.write_text("\n".join(lines) + "\n")
    manifest = {"encoding": encoding, "pipeline": pipeline_text,
                "n_samples": int(X.shape[0]), "n_features": int(X.shape[1])}
    Path(str(path) + ".manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")

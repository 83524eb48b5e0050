"""Perturbation specs, their text format and sequential composition.

Text format, one step per line (``;`` also separates steps, ``#`` starts a
comment)::

    body-part part=legs mode=keep
    coarsen-macro step=1000
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from ..errors import GaitError, InvalidComposition, InvalidSpec, ScopeMismatch, TooFewFrames
from ..layout import GROUPS
from ..mocap import Dataset, GaitSample, reference_layout
from . import operators as ops
from .sinusoid import equalize

# kind -> {param: allowed values (None = any positive int)}
KINDS = {
    "Identity": {},
    "RemoveVariations": {"method": ops.METHODS, "w": ops.WINDOWS},
    "RemoveTrajectories": {"method": ops.METHODS, "w": ops.WINDOWS},
    "CoarsenMacro": {"step": (100, 1000)},
    "CoarsenMicro": {"modulus": (1, 10, 100)},
    "BodyPart": {"part": GROUPS, "mode": ("keep", "remove")},
    "EqualizeAmplitude": {},
    "EqualizeFrequency": {},
    "StaticPose": {"mode": ops.POSE_MODES},
    "Resample": {"target_frames": None},
    "MotionExtraction": {},
    "Normalize": {"mode": ops.NORM_MODES},
}
DEFAULTS = {"Resample": {"target_frames": 10}}
DATASET_SCOPED = {"EqualizeAmplitude", "EqualizeFrequency"}
# steps allowed after a StaticPose collapsed the time axis
AFTER_STATIC = {"Identity", "Normalize", "CoarsenMacro", "CoarsenMicro"}


def _kebab(kind: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "-", kind).lower()


_BY_TEXT = {_kebab(k): k for k in KINDS} | {k.lower(): k for k in KINDS}


def _coerce(value):
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            try:
                return float(value)
            except ValueError:
                return value
    return value


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown perturbation {self.kind!r}")
        allowed = KINDS[self.kind]
        params = {**DEFAULTS.get(self.kind, {}), **{k: _coerce(v) for k, v in self.params.items()}}
        for key in params:
            if key not in allowed:
                raise InvalidSpec(f"{self.kind}: unknown parameter {key!r}")
        for key, values in allowed.items():
            if key not in params:
                raise InvalidSpec(f"{self.kind}: missing parameter {key!r}")
            v = params[key]
            if values is None:
                if not (isinstance(v, int) and v >= 2):
                    raise InvalidSpec(f"{self.kind}: {key} must be an integer >= 2")
            elif v not in values:
                raise InvalidSpec(f"{self.kind}: {key}={v!r} not in {list(values)}")
        object.__setattr__(self, "params", params)

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items()))))

    def to_text(self) -> str:
        return " ".join([_kebab(self.kind)] + [f"{k}={v}" for k, v in self.params.items()])

    @classmethod
    def parse(cls, line: str) -> "PerturbationSpec":
        tokens = line.split()
        if not tokens:
            raise InvalidSpec("empty step")
        kind = _BY_TEXT.get(tokens[0].lower()) or _BY_TEXT.get(tokens[0].lower().replace("_", "-"))
        if kind is None:
            raise InvalidSpec(f"unknown perturbation {tokens[0]!r}")
        params = {}
        for tok in tokens[1:]:
            key, sep, value = tok.partition("=")
            if not sep:
                raise InvalidSpec(f"expected key=value, got {tok!r}")
            params[key] = value
        return cls(kind, params)


@dataclass(frozen=True)
class Pipeline:
    steps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        collapsed = False
        for i, step in enumerate(self.steps):
            if collapsed and step.kind not in AFTER_STATIC:
                raise InvalidComposition(
                    f"{step.kind} cannot follow StaticPose (input has a single frame)", i)
            collapsed = collapsed or step.kind == "StaticPose"

    @classmethod
    def parse(cls, text: str) -> "Pipeline":
        steps = []
        for raw in re.split(r"[\n;]", text):
            line = raw.split("#", 1)[0].strip()
            if line:
                steps.append(PerturbationSpec.parse(line))
        return cls(tuple(steps))

    @classmethod
    def of(cls, *steps: PerturbationSpec) -> "Pipeline":
        return cls(tuple(steps))

    def to_text(self) -> str:
        return "\n".join(s.to_text() for s in self.steps) + ("\n" if self.steps else "")

    @property
    def label(self) -> str:
        return " | ".join(s.to_text() for s in self.steps) or "identity"

    @property
    def dataset_scoped(self) -> bool:
        return any(s.kind in DATASET_SCOPED for s in self.steps)


def apply_step(sample: GaitSample, spec: PerturbationSpec, layout=None, body_map=None) -> GaitSample:
    """Apply one frame-local step to one sample."""
    p = spec.params
    kind = spec.kind
    if kind == "Identity":
        return sample
    if kind == "RemoveVariations":
        return ops.ideal_trajectory(sample, p["method"], p["w"])
    if kind == "RemoveTrajectories":
        return ops.remove_trajectories(sample, p["method"], p["w"])
    if kind == "CoarsenMacro":
        return ops.coarsen_macro(sample, p["step"])
    if kind == "CoarsenMicro":
        return ops.coarsen_micro(sample, p["modulus"])
    if kind == "BodyPart":
        if layout is None:
            layout, body_map = reference_layout()
        return ops.body_part(sample, layout, body_map, p["part"], p["mode"])
    if kind == "StaticPose":
        return ops.static_pose(sample, p["mode"])
    if kind == "Resample":
        return ops.resample_static(sample, p["target_frames"])
    if kind == "MotionExtraction":
        return ops.motion_extraction(sample)
    if kind == "Normalize":
        return ops.normalize(sample, p["mode"])
    raise ScopeMismatch(f"{kind} needs a whole dataset, not a single sample")


def apply_pipeline(data: Union[GaitSample, Dataset], pipeline: Pipeline,
                   layout=None, body_map=None):
    """Apply ``pipeline`` left to right to a sample or a whole dataset."""
    if isinstance(data, Dataset):
        layout, body_map = data.layout, data.body_part_map
    for i, spec in enumerate(pipeline.steps):
        try:
            if spec.kind in DATASET_SCOPED:
                if not isinstance(data, Dataset):
                    raise ScopeMismatch(f"step {i}: {spec.kind} needs a dataset")
                data = equalize(data, "amplitude" if spec.kind == "EqualizeAmplitude" else "frequency")
            elif isinstance(data, Dataset):
                data = data.map_samples(lambda s: apply_step(s, spec, layout, body_map))
            else:
                data = apply_step(data, spec, layout, body_map)
        except TooFewFrames as exc:
            raise InvalidComposition(f"{spec.kind}: {exc}", i) from exc
        except ScopeMismatch:
            raise
        except GaitError as exc:
            if getattr(exc, "step_index", None) is None:
                exc.step_index = i
            raise
    return data

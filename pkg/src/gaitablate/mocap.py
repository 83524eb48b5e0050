"""Domain types, on-disk dataset format and stride preprocessing.

Coordinates are millimetres in lab space with y vertical, x the walking
direction and z lateral. A sample's frames are stored as a read-only
``(T, M, 3)`` float64 array; one row ``frames[t]`` is a pose.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

from . import layout as _ref
from .errors import (
    DuplicateSubject,
    IncompleteStride,
    MalformedFrame,
    MissingMetadata,
    NoStrideFound,
    RateMismatch,
    TooFewFrames,
    UnknownMarker,
)

log = logging.getLogger(__name__)

SEXES = ("F", "M")
AXES = ("x", "y", "z")
METADATA_FILE = "metadata.csv"
LAYOUT_FILE = "layout.json"


@dataclass(frozen=True)
class MarkerLayout:
    marker_names: tuple
    units: str = "mm"

    def __post_init__(self):
        names = tuple(self.marker_names)
        object.__setattr__(self, "marker_names", names)
        if len(set(names)) != len(names):
            raise ValueError("marker names must be unique")

    @property
    def n_markers(self) -> int:
        return len(self.marker_names)

    def index(self, name: str) -> int:
        try:
            return self.marker_names.index(name)
        except ValueError:
            raise UnknownMarker(name) from None

    def columns(self) -> list[str]:
        return [f"{m}_{a}" for m in self.marker_names for a in AXES]


@dataclass(frozen=True)
class BodyPartMap:
    """Marker -> body-part group assignment plus the 17-role reduction map."""

    group_of: dict
    reduction_17: dict

    def validate(self, layout: MarkerLayout) -> None:
        for name in layout.marker_names:
            if self.group_of.get(name) not in _ref.GROUPS:
                raise ValueError(f"marker {name!r} has no valid body-part group")
        for name in self.group_of:
            layout.index(name)
        for role, sources in self.reduction_17.items():
            for name in sources:
                layout.index(name)

    def part_indices(self, layout: MarkerLayout, part: str) -> np.ndarray:
        return np.array(
            [i for i, m in enumerate(layout.marker_names) if self.group_of[m] == part],
            dtype=int,
        )


@dataclass(frozen=True, eq=False)
class GaitSample:
    subject_id: str
    sample_id: str
    frames: np.ndarray
    frame_rate_hz: float = 250.0

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise ValueError(f"frames must have shape (T, M, 3), got {frames.shape}")
        if frames.shape[0] < 1:
            raise TooFewFrames("a sample needs at least one frame")
        if not np.isfinite(frames).all():
            raise ValueError(f"non-finite coordinates in sample {self.sample_id!r}")
        if self.frame_rate_hz <= 0:
            raise ValueError("frame_rate_hz must be positive")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_markers(self) -> int:
        return self.frames.shape[1]

    def with_frames(self, frames, frame_rate_hz=None) -> "GaitSample":
        return dataclasses.replace(
            self, frames=frames,
            frame_rate_hz=self.frame_rate_hz if frame_rate_hz is None else frame_rate_hz,
        )

    def same_as(self, other: "GaitSample") -> bool:
        return (
            self.subject_id == other.subject_id
            and self.sample_id == other.sample_id
            and self.frames.shape == other.frames.shape
            and bool(np.array_equal(self.frames, other.frames))
        )


@dataclass(frozen=True, eq=False)
class ForceSeries:
    samples: np.ndarray
    rate_hz: float = 1000.0
    plate_id: str = "1"

    def __post_init__(self):
        values = np.array(self.samples, dtype=np.float64).reshape(-1)
        if not np.isfinite(values).all():
            raise ValueError("non-finite force values")
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        values.flags.writeable = False
        object.__setattr__(self, "samples", values)


@dataclass(frozen=True)
class Subject:
    subject_id: str
    sex: str
    samples: tuple

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.sex not in SEXES:
            raise ValueError(f"sex must be one of {SEXES}, got {self.sex!r}")
        for s in self.samples:
            if s.subject_id != self.subject_id:
                raise ValueError(f"sample {s.sample_id!r} does not belong to {self.subject_id!r}")


@dataclass(frozen=True)
class Dataset:
    subjects: tuple
    layout: MarkerLayout = field(default_factory=lambda: reference_layout()[0])
    body_part_map: BodyPartMap = field(default_factory=lambda: reference_layout()[1])

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        ids = [s.subject_id for s in self.subjects]
        if len(set(ids)) != len(ids):
            raise DuplicateSubject("subject ids must be unique")

    def samples(self) -> Iterator[GaitSample]:
        for subject in self.subjects:
            yield from subject.samples

    @property
    def n_samples(self) -> int:
        return sum(len(s.samples) for s in self.subjects)

    def subject(self, subject_id: str) -> Subject:
        for s in self.subjects:
            if s.subject_id == subject_id:
                return s
        raise KeyError(subject_id)

    def sex_of(self) -> dict:
        return {s.subject_id: s.sex for s in self.subjects}

    def find_sample(self, subject_id: str, sample_id: str) -> GaitSample:
        for s in self.subject(subject_id).samples:
            if s.sample_id == sample_id:
                return s
        raise KeyError(f"{subject_id}/{sample_id}")

    def map_samples(self, fn: Callable[[GaitSample], GaitSample]) -> "Dataset":
        subjects = [
            dataclasses.replace(sub, samples=tuple(fn(s) for s in sub.samples))
            for sub in self.subjects
        ]
        return dataclasses.replace(self, subjects=tuple(subjects))

    def with_subjects(self, subjects: Sequence[Subject]) -> "Dataset":
        return dataclasses.replace(self, subjects=tuple(subjects))


def reference_layout() -> tuple[MarkerLayout, BodyPartMap]:
    """The built-in 62-marker layout used by the synthetic generator."""
    return (
        MarkerLayout(tuple(_ref.MARKERS)),
        BodyPartMap(dict(_ref.GROUP_OF), {k: list(v) for k, v in _ref.REDUCTION_17.items()}),
    )


# --------------------------------------------------------------------------
# layout file

def load_layout(path) -> tuple[MarkerLayout, BodyPartMap]:
    with open(path) as f:
        doc = json.load(f)
    try:
        layout = MarkerLayout(tuple(doc["markers"]), doc.get("units", "mm"))
        bpm = BodyPartMap(dict(doc["groups"]), {k: list(v) for k, v in doc["reduction_17"].items()})
    except KeyError as exc:
        raise ValueError(f"layout file {path} lacks key {exc}") from None
    if layout.units != "mm":
        raise ValueError("only millimetre layouts are supported")
    bpm.validate(layout)
    return layout, bpm


def save_layout(path, layout: MarkerLayout, bpm: BodyPartMap) -> None:
    doc = {
        "units": layout.units,
        "markers": list(layout.marker_names),
        "groups": {m: bpm.group_of[m] for m in layout.marker_names},
        "reduction_17": {k: list(v) for k, v in bpm.reduction_17.items()},
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


# --------------------------------------------------------------------------
# marker / force CSV

def read_marker_csv(path, layout: MarkerLayout) -> np.ndarray:
    """Parse one marker CSV into a ``(T, M, 3)`` array in layout order."""
    path = Path(path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise MalformedFrame(path, 0, "empty file")
    header = rows[0]
    width = 1 + 3 * layout.n_markers
    if len(header) != width:
        raise MalformedFrame(path, 0, f"expected {width} columns, got {len(header)}")
    names = []
    for col in range(1, width, 3):
        stems = {h.rsplit("_", 1)[0] for h in header[col:col + 3]}
        axes = [h.rsplit("_", 1)[-1] for h in header[col:col + 3]]
        if len(stems) != 1 or axes != list(AXES):
            raise MalformedFrame(path, 0, f"bad header near column {col}")
        names.append(stems.pop())
    order = [layout.index(n) for n in names]
    if sorted(order) != list(range(layout.n_markers)):
        raise MalformedFrame(path, 0, "header repeats markers")

    data = np.empty((len(rows) - 1, width - 1))
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != width:
            raise MalformedFrame(path, r, f"expected {width} columns, got {len(row)}")
        try:
            data[r - 1] = [float(v) for v in row[1:]]
        except ValueError:
            raise MalformedFrame(path, r, "non-numeric value") from None
    if not np.isfinite(data).all():
        raise MalformedFrame(path, int(np.argwhere(~np.isfinite(data))[0, 0]) + 1, "non-finite value")
    frames = np.empty((data.shape[0], layout.n_markers, 3))
    frames[:, order, :] = data.reshape(data.shape[0], -1, 3)
    return frames


def write_marker_csv(path, frames: np.ndarray, layout: MarkerLayout) -> None:
    # repr() gives the shortest string that round-trips a float exactly.
    lines = [",".join(["frame"] + layout.columns())]
    for t, pose in enumerate(np.asarray(frames, dtype=np.float64)):
        lines.append(",".join([str(t)] + [repr(v) for v in pose.reshape(-1).tolist()]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_force_csv(path, rate_hz: float = 1000.0) -> tuple[ForceSeries, ForceSeries]:
    path = Path(path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or [h.strip() for h in rows[0]] != ["sample", "fz_plate1", "fz_plate2"]:
        raise MalformedFrame(path, 0, "force header must be sample,fz_plate1,fz_plate2")
    values = np.empty((len(rows) - 1, 2))
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != 3:
            raise MalformedFrame(path, r, "expected 3 columns")
        try:
            values[r - 1] = float(row[1]), float(row[2])
        except ValueError:
            raise MalformedFrame(path, r, "non-numeric value") from None
    return ForceSeries(values[:, 0], rate_hz, "1"), ForceSeries(values[:, 1], rate_hz, "2")


def write_force_csv(path, plate1: ForceSeries, plate2: ForceSeries) -> None:
    lines = ["sample,fz_plate1,fz_plate2"]
    for i, (a, b) in enumerate(zip(plate1.samples.tolist(), plate2.samples.tolist())):
        lines.append(f"{i},{a!r},{b!r}")
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# dataset directory

def read_metadata(root) -> list[dict]:
    path = Path(root) / METADATA_FILE
    if not path.exists():
        raise MissingMetadata(f"{path} not found")
    with open(path, newline="") as f:
        records = list(csv.DictReader(f))
    for col in ("subject_id", "sex", "sample_id", "marker_file"):
        if records and col not in records[0]:
            raise MissingMetadata(f"{path} lacks column {col!r}")
    for rec in records:
        if (rec.get("sex") or "").strip() not in SEXES:
            raise MissingMetadata(f"subject {rec.get('subject_id')!r} has no valid sex label")
    return records


def load_dataset(root, layout_file=None, on_error=None) -> Dataset:
    """Load a dataset directory: ``metadata.csv`` plus one marker CSV per sample.

    ``on_error(record, exc)`` lets callers skip unreadable samples instead of
    aborting; without it the first error propagates.
    """
    root = Path(root)
    layout, bpm = load_layout(layout_file or root / LAYOUT_FILE)
    records = read_metadata(root)

    sex: dict[str, str] = {}
    samples: dict[str, list[GaitSample]] = {}
    seen = set()
    for rec in records:
        sid, smp = rec["subject_id"], rec["sample_id"]
        if sex.setdefault(sid, rec["sex"]) != rec["sex"]:
            raise DuplicateSubject(f"subject {sid!r} listed with conflicting sex labels")
        if (sid, smp) in seen:
            raise DuplicateSubject(f"sample {sid}/{smp} listed twice")
        seen.add((sid, smp))
        rate = float(rec.get("frame_rate_hz") or 250.0)
        try:
            frames = read_marker_csv(root / rec["marker_file"], layout)
            sample = GaitSample(sid, smp, frames, rate)
        except Exception as exc:
            if on_error is None:
                raise
            on_error(rec, exc)
            continue
        samples.setdefault(sid, []).append(sample)

    subjects = [Subject(sid, sex[sid], samples[sid]) for sid in sex if sid in samples]
    return Dataset(tuple(subjects), layout, bpm)


def sample_filename(sample: GaitSample) -> str:
    return f"markers/{sample.subject_id}__{sample.sample_id}.csv"


def save_dataset(dataset: Dataset, root, extra_columns: dict | None = None) -> None:
    """Write ``dataset`` in the canonical format (marker CSVs, metadata, layout)."""
    root = Path(root)
    (root / "markers").mkdir(parents=True, exist_ok=True)
    save_layout(root / LAYOUT_FILE, dataset.layout, dataset.body_part_map)
    extra_columns = extra_columns or {}
    cols = ["subject_id", "sex", "sample_id", "marker_file", "frame_rate_hz", *extra_columns]
    lines = [",".join(cols)]
    for subject in dataset.subjects:
        for s in subject.samples:
            rel = sample_filename(s)
            write_marker_csv(root / rel, s.frames, dataset.layout)
            extra = [str(extra_columns[c].get((s.subject_id, s.sample_id), "")) for c in extra_columns]
            lines.append(",".join([s.subject_id, subject.sex, s.sample_id, rel, repr(float(s.frame_rate_hz)), *extra]))
    (root / METADATA_FILE).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# preprocessing

class Stride(NamedTuple):
    start: int
    end: int
    method: str  # "same_plate", "step_symmetry" or "single_plate"


def contact_onsets(force: ForceSeries, threshold_n: float = 20.0, debounce: int = 10) -> np.ndarray:
    """Force-sample indices of upward threshold crossings held for ``debounce`` samples."""
    f = force.samples
    above = f > threshold_n
    if len(f) < 2:
        return np.zeros(0, dtype=int)
    rising = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    held = [i for i in rising if i + debounce <= len(f) and above[i:i + debounce].all()]
    return np.array(held, dtype=int)


def segment_stride(force: ForceSeries, force2: ForceSeries | None, mocap_rate_hz: float,
                   threshold_n: float = 20.0, n_frames: int | None = None,
                   debounce: int = 10) -> Stride:
    """Motion-capture frame interval ``[start, end)`` covering one gait cycle.

    The cycle starts at the first contact on plate 1 and ends at that foot's
    next contact: the next plate-1 contact when one was recorded, otherwise
    (two plates) the plate-1 contact plus twice the step time to the
    contralateral contact on plate 2.
    """
    if threshold_n <= 0:
        raise ValueError("threshold must be positive")
    ratio = force.rate_hz / mocap_rate_hz
    if mocap_rate_hz <= 0 or abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise RateMismatch(f"force rate {force.rate_hz} is not an integer multiple of {mocap_rate_hz}")
    if force2 is not None and force2.rate_hz != force.rate_hz:
        raise RateMismatch("force plates sampled at different rates")
    ratio = int(round(ratio))

    onsets = contact_onsets(force, threshold_n, debounce)
    if len(onsets) == 0:
        raise NoStrideFound(f"plate {force.plate_id}: no crossing of {threshold_n} N")
    first = int(onsets[0])
    if len(onsets) > 1:
        end, method = int(onsets[1]), "same_plate" if force2 is not None else "single_plate"
    elif force2 is not None:
        other = contact_onsets(force2, threshold_n, debounce)
        other = other[other > first]
        if len(other) == 0:
            raise IncompleteStride("no second contact of the same foot and no contralateral contact")
        end, method = first + 2 * (int(other[0]) - first), "step_symmetry"
        log.info("stride end estimated from contralateral contact (step symmetry)")
    else:
        raise IncompleteStride("single plate: no second contact")

    start, stop = first // ratio, end // ratio
    if n_frames is not None and stop > n_frames:
        raise IncompleteStride(f"stride ends at frame {stop} beyond recording length {n_frames}")
    if stop <= start:
        raise IncompleteStride("empty stride")
    return Stride(start, stop, method)


def resample_frames(frames: np.ndarray, target_frames: int) -> np.ndarray:
    """Linear resampling onto ``target_frames`` equally spaced points over [0, T-1]."""
    T = frames.shape[0]
    if T < 2 or target_frames < 2:
        raise TooFewFrames(f"need at least 2 frames in and out, got {T} -> {target_frames}")
    t = np.linspace(0.0, T - 1, target_frames)
    lo = np.minimum(np.floor(t).astype(int), T - 2)
    frac = (t - lo)[:, None, None]
    out = frames[lo] * (1.0 - frac) + frames[lo + 1] * frac
    # nodes that land exactly on input frames are copied, not blended
    exact = frac[:, 0, 0] == 0.0
    out[exact] = frames[lo[exact]]
    out[-1] = frames[-1]
    return out


def time_normalize(sample: GaitSample, target_frames: int = 100) -> GaitSample:
    # after normalisation the rate is "frames per stride"
    return sample.with_frames(resample_frames(sample.frames, target_frames), float(target_frames))


def crop(sample: GaitSample, start: int, end: int) -> GaitSample:
    return sample.with_frames(sample.frames[start:end])



class IngestReport(NamedTuple):
    dataset: Dataset
    strides: dict      # (subject_id, sample_id) -> Stride
    skipped: list      # (marker_file, error message)


def ingest_raw(root, layout_file=None, threshold_n: float = 20.0, target_frames: int = 100,
               keep_going: bool = False) -> IngestReport:
    """Segment one stride per raw trial and time-normalize it.

    A raw set is a canonical dataset directory whose metadata carries two more
    columns: ``force_file`` (CSV of both plates) and ``force_rate_hz``.
    """
    root = Path(root)
    layout, bpm = load_layout(layout_file or root / LAYOUT_FILE)
    records = read_metadata(root)
    if records and "force_file" not in records[0]:
        raise MissingMetadata(f"{root / METADATA_FILE} lacks column 'force_file'")

    sex: dict[str, str] = {}
    samples: dict[str, list[GaitSample]] = {}
    strides, skipped = {}, []
    for rec in records:
        sid, smp = rec["subject_id"], rec["sample_id"]
        if sex.setdefault(sid, rec["sex"]) != rec["sex"]:
            raise DuplicateSubject(f"subject {sid!r} listed with conflicting sex labels")
        try:
            rate = float(rec.get("frame_rate_hz") or 250.0)
            frames = read_marker_csv(root / rec["marker_file"], layout)
            p1, p2 = read_force_csv(root / rec["force_file"], float(rec.get("force_rate_hz") or 1000.0))
            stride = segment_stride(p1, p2, rate, threshold_n, n_frames=len(frames))
            sample = time_normalize(crop(GaitSample(sid, smp, frames, rate), stride.start, stride.end),
                                    target_frames)
        except Exception as exc:
            if not keep_going:
                raise
            skipped.append((rec["marker_file"], f"{type(exc).__name__}: {exc}"))
            continue
        strides[(sid, smp)] = stride
        samples.setdefault(sid, []).append(sample)

    subjects = [Subject(sid, sex[sid], samples[sid]) for sid in sex if sid in samples]
    return IngestReport(Dataset(tuple(subjects), layout, bpm), strides, skipped)

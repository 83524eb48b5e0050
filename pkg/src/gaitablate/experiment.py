"""Evaluation protocol: task splits, repeated train/test runs, suites, reports."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np
import yaml

from .defaults import DEFAULTS
from .errors import GaitError, InvalidSpec, SingleSexSide, TooFewSamples
from .features import ENCODINGS, feature_matrix
from .layout import ROLES
from .learn import LearnerConfig, accuracy, fit_recognizer
from .mocap import Dataset, GaitSample
from .perturb import Pipeline, apply_pipeline

log = logging.getLogger(__name__)

TASKS = ("identity", "sex")
PRE_SPLIT_NOTE = ("dataset-scoped steps (equalization) were fitted on all subjects "
                  "before splitting; train and test are coupled through the group mean")


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "identity"
    pipeline: Pipeline = Pipeline()
    encodings: tuple = ENCODINGS
    train_fraction: float = 0.75
    repetitions: int = 10
    base_seed: int = 0
    learner: LearnerConfig = LearnerConfig()
    name: str = ""

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        object.__setattr__(self, "encodings", tuple(self.encodings))
        for enc in self.encodings:
            if enc not in ENCODINGS:
                raise ValueError(f"unknown encoding {enc!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name, "task": self.task, "pipeline": self.pipeline.to_text(),
            "encodings": list(self.encodings), "train_fraction": self.train_fraction,
            "repetitions": self.repetitions, "base_seed": self.base_seed,
            "learner": self.learner.to_dict(),
        }


class Split(NamedTuple):
    train: list
    test: list


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _n_train(n: int, fraction: float) -> int:
    return min(max(_round_half_up(fraction * n), 1), n - 1)


def split_identity(dataset: Dataset, fraction: float = 0.75, seed: int = 0) -> Split:
    """Per subject, ``round(fraction * n)`` samples to train, the rest to test."""
    rng = np.random.default_rng(seed)
    train, test = [], []
    for sub in dataset.subjects:
        n = len(sub.samples)
        if n < 2:
            raise TooFewSamples(f"subject {sub.subject_id!r} has {n} sample(s); need 2")
        order = rng.permutation(n)
        k = _n_train(n, fraction)
        train += [sub.samples[i] for i in sorted(order[:k])]
        test += [sub.samples[i] for i in sorted(order[k:])]
    return Split(train, test)


def split_sex(dataset: Dataset, fraction: float = 0.75, seed: int = 0) -> Split:
    """Subject-disjoint split, stratified by sex."""
    rng = np.random.default_rng(seed)
    train_ids = set()
    for sex in ("F", "M"):
        ids = [s.subject_id for s in dataset.subjects if s.sex == sex]
        if len(ids) < 2:
            raise SingleSexSide(f"need at least 2 subjects of sex {sex}, found {len(ids)}")
        order = rng.permutation(len(ids))
        train_ids.update(ids[i] for i in order[:_n_train(len(ids), fraction)])
    train = [s for sub in dataset.subjects if sub.subject_id in train_ids for s in sub.samples]
    test = [s for sub in dataset.subjects if sub.subject_id not in train_ids for s in sub.samples]
    return Split(train, test)


def make_split(dataset: Dataset, task: str, fraction: float, seed: int) -> Split:
    return (split_identity if task == "identity" else split_sex)(dataset, fraction, seed)


def quartiles(values: Sequence[float]) -> dict:
    v = np.asarray(values, dtype=float)
    q = np.percentile(v, [0, 25, 50, 75, 100])
    return dict(zip(("min", "q1", "median", "q3", "max"), (float(x) for x in q)))


@dataclass
class ExperimentResult:
    name: str
    config: dict
    accuracies: dict = field(default_factory=dict)     # encoding -> [per repetition]
    summary: dict = field(default_factory=dict)        # encoding -> quartiles
    reported_encoding: str = ""
    chance_level: float = float("nan")
    degeneracy: dict = field(default_factory=dict)     # encoding -> degenerate angle count
    selections: dict = field(default_factory=dict)     # encoding -> [{C, gamma, pca_k, cv_acc}]
    notes: list = field(default_factory=list)
    defaults: dict = field(default_factory=lambda: dict(DEFAULTS))
    wall_clock_s: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def median(self) -> float:
        return self.summary[self.reported_encoding]["median"] if self.reported_encoding else float("nan")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentResult":
        return cls(**json.loads(text))


def _labels(samples: Sequence[GaitSample], task: str, sex_of: dict) -> np.ndarray:
    if task == "identity":
        return np.array([s.subject_id for s in samples])
    return np.array([sex_of[s.subject_id] for s in samples])


def run_experiment(dataset: Dataset, config: ExperimentConfig, workers: int = 1,
                   observer: Callable | None = None) -> ExperimentResult:
    """Run ``config.repetitions`` seeded splits for every encoding.

    The pipeline is applied once to the whole dataset (dataset-scoped steps
    therefore see every subject); each repetition then splits, fits scaler,
    PCA and CV-selected SVM on the train part only and scores the test part.
    ``observer(rep, encoding, split, model)`` is called after every fit.
    """
    start = time.perf_counter()
    result = ExperimentResult(config.name, config.to_dict())
    if config.pipeline.dataset_scoped:
        result.notes.append(PRE_SPLIT_NOTE)

    data = apply_pipeline(dataset, config.pipeline)
    samples = list(data.samples())
    row = {(s.subject_id, s.sample_id): i for i, s in enumerate(samples)}
    sex_of = data.sex_of()

    matrices = {}
    for enc in config.encodings:
        X, bad = feature_matrix(samples, enc, data.layout, data.body_part_map)
        matrices[enc] = X
        result.degeneracy[enc] = bad

    splits = [make_split(data, config.task, config.train_fraction, config.base_seed + r)
              for r in range(config.repetitions)]

    def job(rep: int, enc: str):
        split = splits[rep]
        tr = [row[(s.subject_id, s.sample_id)] for s in split.train]
        te = [row[(s.subject_id, s.sample_id)] for s in split.test]
        X = matrices[enc]
        try:
            model = fit_recognizer(X[tr], _labels(split.train, config.task, sex_of), config.learner,
                                   seed=config.base_seed + rep, encoding=enc)
            acc = accuracy(model.predict(X[te]), _labels(split.test, config.task, sex_of))
        except GaitError as exc:
            raise GaitError(f"repetition {rep}, encoding {enc}: {exc}") from exc
        if observer is not None:
            observer(rep, enc, split, model)
        sel = {"C": model.svm.C, "gamma": model.svm.gamma, "pca_k": model.pca.n_components,
               "cv_accuracy": model.cv.best_accuracy, "cv_folds": model.cv.folds}
        return acc, sel

    jobs = [(r, enc) for enc in config.encodings for r in range(config.repetitions)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outs = list(pool.map(lambda j: job(*j), jobs))
    else:
        outs = [job(*j) for j in jobs]

    for (rep, enc), (acc, sel) in zip(jobs, outs):
        result.accuracies.setdefault(enc, []).append(acc)
        result.selections.setdefault(enc, []).append(sel)
    result.summary = {enc: quartiles(result.accuracies[enc]) for enc in config.encodings}
    # higher median wins; ties keep the first listed encoding
    result.reported_encoding = max(config.encodings, key=lambda e: (
        result.summary[e]["median"], -config.encodings.index(e)))

    if config.task == "identity":
        result.chance_level = 1.0 / len(data.subjects)
    else:
        shares = []
        for split in splits:
            labels = _labels(split.test, "sex", sex_of)
            shares.append(max(np.mean(labels == "F"), np.mean(labels == "M")))
        result.chance_level = float(np.mean(shares))
    result.wall_clock_s = time.perf_counter() - start
    return result


# --------------------------------------------------------------------------
# suites

class SuiteError(GaitError):
    def __init__(self, condition, message):
        self.condition = condition
        super().__init__(f"condition {condition!r}: {message}")


def parse_suite(doc: dict | None, overrides: dict | None = None) -> list[ExperimentConfig]:
    """Build configs from a suite document (``defaults`` + ``conditions``)."""
    doc = doc or {}
    defaults = dict(doc.get("defaults") or {})
    defaults.update(overrides or {})
    configs = []
    names = set()
    for i, cond in enumerate(doc.get("conditions") or []):
        name = cond.get("name") or f"condition_{i}"
        if name in names:
            raise SuiteError(name, "duplicate condition name")
        names.add(name)
        try:
            pipeline = Pipeline.parse(cond.get("pipeline") or "identity")
        except GaitError as exc:
            raise SuiteError(name, str(exc)) from exc
        opts = {**defaults, **(cond.get("overrides") or {}), **(overrides or {})}
        learner = LearnerConfig.from_dict(opts.pop("learner", {}) or {})
        try:
            configs.append(ExperimentConfig(
                task=cond.get("task", "identity"), pipeline=pipeline, learner=learner, name=name,
                **{k: v for k, v in opts.items() if k in
                   ("encodings", "train_fraction", "repetitions", "base_seed")}))
        except (ValueError, TypeError) as exc:
            raise SuiteError(name, str(exc)) from exc
    return configs


def load_suite(path, overrides: dict | None = None) -> list[ExperimentConfig]:
    with open(path) as f:
        return parse_suite(yaml.safe_load(f), overrides)


def run_suite(dataset: Dataset, configs: Sequence[ExperimentConfig], out_dir=None,
              threads: int = 1) -> list[ExperimentResult]:
    """Run every condition; a failing condition yields a result with ``error`` set."""

    def one(cfg: ExperimentConfig) -> ExperimentResult:
        try:
            res = run_experiment(dataset, cfg)
        except Exception as exc:  # isolate conditions from each other
            log.error("condition %s failed: %s", cfg.name, exc)
            res = ExperimentResult(cfg.name, cfg.to_dict(), error=f"{type(exc).__name__}: {exc}")
        log.info("condition %s done", cfg.name)
        return res

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, configs))
    else:
        results = [one(c) for c in configs]

    if out_dir is not None:
        write_results(results, out_dir)
    return results


def write_results(results: Sequence[ExperimentResult], out_dir) -> None:
    out = Path(out_dir)
    (out / "results").mkdir(parents=True, exist_ok=True)
    for res in results:
        (out / "results" / f"{res.name}.json").write_text(res.to_json() + "\n")
    (out / "combined.csv").write_text(combined_csv(results))


def load_results(out_dir) -> list[ExperimentResult]:
    paths = sorted((Path(out_dir) / "results").glob("*.json"))
    return [ExperimentResult.from_json(p.read_text()) for p in paths]


CSV_COLUMNS = ["condition", "task", "pipeline", "encoding", "reported", "runs",
               "min", "q1", "median", "q3", "max", "chance_level", "degeneracy",
               "accuracies", "error"]


def combined_csv(results: Sequence[ExperimentResult]) -> str:
    """One row per condition x encoding; contains no timing so reruns are byte-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for res in results:
        base = [res.name, res.config.get("task", ""), res.config.get("pipeline", "").strip().replace("\n", "; ")]
        if not res.ok:
            for enc in res.config.get("encodings", []):
                w.writerow(base + [enc, 0, 0] + [""] * 8 + [res.error])
            continue
        for enc, accs in res.accuracies.items():
            s = res.summary[enc]
            w.writerow(base + [enc, int(enc == res.reported_encoding), len(accs),
                               *(repr(s[k]) for k in ("min", "q1", "median", "q3", "max")),
                               repr(res.chance_level), res.degeneracy.get(enc, 0),
                               ";".join(repr(a) for a in accs), ""])
    return buf.getvalue()


def median_table(results: Sequence[ExperimentResult]) -> str:
    lines = [f"{'condition':40s} {'task':8s} {'encoding':15s} {'median':>7s} {'chance':>7s}"]
    for res in results:
        if not res.ok:
            lines.append(f"{res.name:40s} {res.config.get('task', ''):8s} FAILED: {res.error}")
            continue
        lines.append(f"{res.name:40s} {res.config['task']:8s} {res.reported_encoding:15s} "
                     f"{res.median:7.3f} {res.chance_level:7.3f}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# default condition matrix

def _suite_conditions() -> list[tuple[str, str]]:
    single = [("clear", "identity")]
    for method in ("rolling_average", "interpolation"):
        for w in (1, 3):
            single.append((f"remove_variations_{method}_w{w}", f"remove-variations method={method} w={w}"))
            single.append((f"remove_trajectories_{method}_w{w}", f"remove-trajectories method={method} w={w}"))
    for step in (100, 1000):
        single.append((f"coarsen_macro_{step}", f"coarsen-macro step={step}"))
    for mod in (1, 10, 100):
        single.append((f"coarsen_micro_{mod}", f"coarsen-micro modulus={mod}"))
    for part in ("head", "torso", "hip", "arms", "legs"):
        for mode in ("keep", "remove"):
            single.append((f"{mode}_{part}", f"body-part part={part} mode={mode}"))
    single += [("equalize_amplitude", "equalize-amplitude"), ("equalize_frequency", "equalize-frequency"),
               ("static_average", "static-pose mode=average"), ("static_first", "static-pose mode=first"),
               ("resample_10", "resample target_frames=10"), ("motion_extraction", "motion-extraction")]
    for mode in ("y_axis", "all_axes", "per_dimension"):
        single.append((f"normalize_{mode}", f"normalize mode={mode}"))

    reps = {
        "static_average": "static-pose mode=average",
        "resample_10": "resample target_frames=10",
        "motion_extraction": "motion-extraction",
        "normalize_all_axes": "normalize mode=all_axes",
        "coarsen_macro_1000": "coarsen-macro step=1000",
        "coarsen_micro_100": "coarsen-micro modulus=100",
        "remove_variations": "remove-variations method=rolling_average w=1",
        "remove_trajectories": "remove-trajectories method=interpolation w=1",
    }
    combos = []
    for part in ("legs", "head"):
        for key, text in reps.items():
            combos.append((f"keep_{part}+{key}", f"body-part part={part} mode=keep; {text}"))
    for first in ("remove_variations", "coarsen_macro_1000", "remove_trajectories", "coarsen_micro_100"):
        for second in ("static_average", "resample_10", "motion_extraction", "normalize_all_axes"):
            combos.append((f"{first}+{second}", f"{reps[first]}; {reps[second]}"))
    return single + combos


def full_suite(repetitions: int = 10, base_seed: int = 0) -> dict:
    """Every single perturbation and the representative combinations, for both tasks."""
    conditions = []
    for task in TASKS:
        for name, text in _suite_conditions():
            conditions.append({"name": f"{task}__{name}", "task": task, "pipeline": text})
    return {"defaults": {"repetitions": repetitions, "base_seed": base_seed,
                         "train_fraction": 0.75, "encodings": list(ENCODINGS)},
            "conditions": conditions}


def write_suite(path, suite: dict) -> None:
    Path(path).write_text(yaml.safe_dump(suite, sort_keys=False))


# --------------------------------------------------------------------------
# point-light export

def project(frames: np.ndarray, azimuth_deg: float = 45.0) -> np.ndarray:
    """Orthographic side view after rotating about the vertical axis; ``(T, M, 2)``."""
    a = np.deg2rad(azimuth_deg)
    u = frames[..., 0] * np.cos(a) + frames[..., 2] * np.sin(a)
    return np.stack([u, frames[..., 1]], axis=-1)


def export_pld(sample: GaitSample, out_path, azimuth_deg: float = 45.0,
               marker_names: Sequence[str] | None = None) -> None:
    """Write ``frame,marker,u,v`` rows, one block of M points per frame."""
    if marker_names is None:
        marker_names = ROLES if sample.n_markers == len(ROLES) else [f"m{i}" for i in range(sample.n_markers)]
    uv = project(sample.frames, azimuth_deg).tolist()
    lines = ["frame,marker,u,v"]
    for t in range(len(uv)):
        for m, name in enumerate(marker_names):
            lines.append(f"{t},{name},{uv[t][m][0]!r},{uv[t][m][1]!r}")
    Path(out_path).write_text("\n".join(lines) + "\n")

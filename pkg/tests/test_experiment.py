import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import gaitablate.experiment as experiment
from gaitablate.errors import SingleSexSide, TooFewSamples
from gaitablate.experiment import (
    ExperimentConfig,
    ExperimentResult,
    SuiteError,
    combined_csv,
    export_pld,
    load_results,
    load_suite,
    full_suite,
    parse_suite,
    run_experiment,
    run_suite,
    split_identity,
    split_sex,
)
from gaitablate.learn import LearnerConfig
from gaitablate.mocap import Dataset, GaitSample, Subject
from gaitablate.perturb import Pipeline, body_part
from gaitablate.synth import generate_dataset

FAST = LearnerConfig(C_values=(1.0, 100.0), gamma_factors=(1.0,), folds=3)


def tiny_dataset(n_f, n_m, per):
    subjects = []
    for k in range(n_f + n_m):
        sid = f"P{k:03d}"
        samples = [GaitSample(sid, f"{j:02d}", np.full((1, 2, 3), float(k))) for j in range(per)]
        subjects.append(Subject(sid, "F" if k < n_f else "M", samples))
    return Dataset(tuple(subjects))


def keys(samples):
    return [(s.subject_id, s.sample_id) for s in samples]


# ---------------------------------------------------------------- splits

def test_identity_split_15_5():
    ds = tiny_dataset(29, 28, 20)
    tr, te = split_identity(ds, 0.75, seed=0)
    for sub in ds.subjects:
        assert sum(s.subject_id == sub.subject_id for s in tr) == 15
        assert sum(s.subject_id == sub.subject_id for s in te) == 5


def test_identity_split_two_samples_and_determinism():
    ds = tiny_dataset(1, 1, 2)
    tr, te = split_identity(ds, 0.75, seed=3)
    assert len(tr) == 2 and len(te) == 2
    assert keys(split_identity(ds, 0.75, 3).train) == keys(tr)
    with pytest.raises(TooFewSamples):
        split_identity(tiny_dataset(1, 1, 1), 0.75, 0)


def test_sex_split_22_21():
    ds = tiny_dataset(29, 28, 2)
    tr, te = split_sex(ds, 0.75, seed=0)
    sex = ds.sex_of()
    tr_ids = {s.subject_id for s in tr}
    te_ids = {s.subject_id for s in te}
    assert not tr_ids & te_ids
    assert sum(sex[i] == "F" for i in tr_ids) == 22 and sum(sex[i] == "M" for i in tr_ids) == 21
    assert sum(sex[i] == "F" for i in te_ids) == 7 and sum(sex[i] == "M" for i in te_ids) == 7


def test_sex_split_needs_two_per_sex():
    with pytest.raises(SingleSexSide):
        split_sex(tiny_dataset(1, 1, 3), 0.75, 0)


@settings(max_examples=50)
@given(st.integers(2, 9), st.integers(2, 9), st.integers(2, 7), st.integers(0, 10**6),
       st.floats(0.05, 0.95))
def test_split_soundness(n_f, n_m, per, seed, frac):
    ds = tiny_dataset(n_f, n_m, per)
    all_keys = set(keys(ds.samples()))
    tr, te = split_identity(ds, frac, seed)
    assert set(keys(tr)) | set(keys(te)) == all_keys and not set(keys(tr)) & set(keys(te))
    assert {s.subject_id for s in tr} == {s.subject_id for s in te} == {s.subject_id for s in ds.subjects}
    tr, te = split_sex(ds, frac, seed)
    assert not {s.subject_id for s in tr} & {s.subject_id for s in te}
    assert len(tr) + len(te) == ds.n_samples
    for side in (tr, te):
        assert {ds.sex_of()[s.subject_id] for s in side} == {"F", "M"}


# ---------------------------------------------------------------- run_experiment

def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(train_fraction=1.0)
    with pytest.raises(ValueError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(ValueError):
        ExperimentConfig(task="age")


def test_separable_dataset_reaches_one(small_dataset):
    # nearest-centroid oracle first: the identity signal is there
    X = np.array([s.frames.reshape(-1) for s in small_dataset.samples()])
    y = np.repeat(np.arange(4), 4)
    cent = np.array([X[y == c].mean(0) for c in range(4)])
    assert ((X[:, None] - cent[None]) ** 2).sum(-1).argmin(1).tolist() == y.tolist()
    res = run_experiment(small_dataset, ExperimentConfig("identity", repetitions=2, learner=FAST))
    assert res.summary[res.reported_encoding]["median"] == 1.0
    assert res.chance_level == 0.25


def test_result_invariants_and_json(small_dataset):
    cfg = ExperimentConfig("sex", Pipeline.parse("coarsen-micro modulus=10"), repetitions=3, learner=FAST,
                           name="x")
    res = run_experiment(small_dataset, cfg)
    for accs in res.accuracies.values():
        assert len(accs) == 3 and all(0 <= a <= 1 for a in accs)
    other = [e for e in res.summary if e != res.reported_encoding]
    assert all(res.summary[res.reported_encoding]["median"] >= res.summary[e]["median"] for e in other)
    back = ExperimentResult.from_json(res.to_json())
    assert back.to_json() == res.to_json()
    assert back.config["pipeline"] == "coarsen-micro modulus=10\n"
    assert back.defaults["contact_threshold_n"] == 20.0
    assert 0.5 <= res.chance_level <= 1.0


def test_no_test_leakage(small_dataset, monkeypatch):
    """Instrument the learner: every fitted component sees only training rows."""
    seen = []
    real_fit = experiment.fit_recognizer

    def spy(X, y, *args, **kwargs):
        seen.append(X.copy())
        return real_fit(X, y, *args, **kwargs)

    monkeypatch.setattr(experiment, "fit_recognizer", spy)
    checks = []

    def observer(rep, enc, split, model):
        X_fit = seen[-1]
        train_rows = np.array([s.frames.reshape(-1) for s in split.train]) if enc == "flatten" else None
        test_ids = set(keys(split.test))
        assert not test_ids & set(keys(split.train))
        assert len(X_fit) == len(split.train)
        # scaler statistics are exactly those of the training rows
        np.testing.assert_array_equal(model.scaler.mean, X_fit.mean(axis=0))
        if train_rows is not None:
            assert np.array_equal(X_fit, train_rows)
            test_rows = np.array([s.frames.reshape(-1) for s in split.test])
            # no test row among the fitted rows, and support vectors come from train rows
            assert not any((X_fit == r).all(axis=1).any() for r in test_rows)
            Z = model.transform(X_fit)
            for sv in model.svm.X:
                assert np.abs(Z - sv).max(axis=1).min() < 1e-9
        assert model.cv.folds <= min(np.unique([s.subject_id for s in split.train], return_counts=True)[1])
        checks.append((rep, enc))

    for task in ("identity", "sex"):
        run_experiment(small_dataset, ExperimentConfig(task, repetitions=2, learner=FAST), observer=observer)
    assert len(checks) == 8


def test_failure_names_repetition_and_encoding(small_dataset):
    cfg = ExperimentConfig("identity", Pipeline.parse("body-part part=head mode=keep; coarsen-micro modulus=1"),
                           repetitions=1, learner=LearnerConfig(C_values=(-1.0,), folds=3))
    with pytest.raises(Exception) as exc:
        run_experiment(small_dataset, cfg)
    assert "repetition 0" in str(exc.value) and "encoding flatten" in str(exc.value)


def test_parallel_matches_serial(small_dataset):
    cfg = ExperimentConfig("identity", Pipeline.parse("coarsen-micro modulus=10"), repetitions=2, learner=FAST)
    a = run_experiment(small_dataset, cfg, workers=1)
    b = run_experiment(small_dataset, cfg, workers=3)
    assert a.accuracies == b.accuracies and a.selections == b.selections


def test_equalize_note(small_dataset):
    res = run_experiment(small_dataset, ExperimentConfig("identity", Pipeline.parse("equalize-frequency"),
                                                         repetitions=1, learner=FAST))
    assert any("before splitting" in n for n in res.notes)


def legs_only_family(n_subjects=6, per=8, seed=0):
    """Subjects share one walker and differ only by a per-subject leg offset."""
    base = generate_dataset(2, 2, seed=seed, noise_mm=0.0)
    layout, bpm = base.layout, base.body_part_map
    legs = bpm.part_indices(layout, "legs")
    template = base.subjects[0].samples[0].frames
    rng = np.random.default_rng(seed)
    subjects = []
    for k in range(n_subjects):
        sid = f"L{k}"
        shift = rng.normal(0, 30, 3)
        samples = []
        for j in range(per):
            f = template + rng.normal(0, 2.0, template.shape)
            f[:, legs] += shift
            samples.append(GaitSample(sid, f"{j}", f, 100.0))
        subjects.append(Subject(sid, "F" if k % 2 else "M", samples))
    return Dataset(tuple(subjects), layout, bpm)


def test_monotone_information_legs_signal():
    ds = legs_only_family()
    cfg = dict(task="identity", repetitions=3, learner=FAST)
    clear = run_experiment(ds, ExperimentConfig(**cfg)).median
    head = run_experiment(ds, ExperimentConfig(pipeline=Pipeline.parse("body-part part=head mode=keep"), **cfg)).median
    assert clear >= head
    assert clear > 0.9


# ---------------------------------------------------------------- suites

SUITE = """
defaults:
  repetitions: 2
  learner: {C_values: [1.0, 100.0], gamma_factors: [1.0], folds: 3}
conditions:
  - name: clear
    task: identity
    pipeline: identity
  - name: micro
    task: sex
    pipeline: |
      coarsen-micro modulus=10
    overrides: {encodings: [flatten]}
"""


def test_suite_two_conditions(tmp_path, small_dataset):
    (tmp_path / "s.yaml").write_text(SUITE)
    configs = load_suite(tmp_path / "s.yaml")
    assert [c.name for c in configs] == ["clear", "micro"]
    assert configs[1].encodings == ("flatten",) and configs[0].learner.folds == 3
    results = run_suite(small_dataset, configs, tmp_path / "out")
    assert len(results) == 2 and all(r.ok for r in results)
    assert [r.name for r in load_results(tmp_path / "out")] == ["clear", "micro"]
    rows = list(csv.DictReader(io.StringIO((tmp_path / "out" / "combined.csv").read_text())))
    assert [(r["condition"], r["encoding"]) for r in rows] == [
        ("clear", "flatten"), ("clear", "reduced_angles"), ("micro", "flatten")]
    again = run_suite(small_dataset, configs, tmp_path / "out2", threads=2)
    assert (tmp_path / "out2" / "combined.csv").read_bytes() == (tmp_path / "out" / "combined.csv").read_bytes()
    assert combined_csv(again) == combined_csv(results)


def test_empty_suite(tmp_path, small_dataset):
    results = run_suite(small_dataset, parse_suite({"conditions": []}), tmp_path)
    assert results == []
    assert (tmp_path / "combined.csv").read_text().count("\n") == 1


def test_suite_unknown_operator_named():
    with pytest.raises(SuiteError) as exc:
        parse_suite({"conditions": [{"name": "ok", "pipeline": "identity"},
                                    {"name": "broken", "pipeline": "warp-drive"}]})
    assert "broken" in str(exc.value)


def test_suite_isolates_failures(small_dataset):
    two_subjects = small_dataset.with_subjects(small_dataset.subjects[:2])
    configs = parse_suite({"defaults": {"repetitions": 1, "learner": {"folds": 3, "C_values": [1.0]}},
                           "conditions": [{"name": "sex", "task": "sex", "pipeline": "identity"},
                                          {"name": "id", "task": "identity", "pipeline": "identity"}]})
    res = run_suite(two_subjects, configs)
    assert not res[0].ok and "SingleSexSide" in res[0].error
    assert res[1].ok


def test_full_suite_parses():
    suite = full_suite()
    configs = parse_suite(suite)
    assert len(configs) == 2 * 65
    names = [c.name for c in configs]
    assert len(set(names)) == len(names)
    assert "identity__coarsen_macro_1000" in names and "sex__keep_head+motion_extraction" in names
    assert all(c.repetitions == 10 for c in configs)


# ---------------------------------------------------------------- point-light export

def _read_pld(path):
    return list(csv.DictReader(open(path)))


def test_pld_blocks(tmp_path, small_dataset):
    s = next(small_dataset.samples())
    export_pld(s, tmp_path / "p.csv", marker_names=small_dataset.layout.marker_names)
    rows = _read_pld(tmp_path / "p.csv")
    assert len(rows) == 100 * 62
    assert {int(r["frame"]) for r in rows} == set(range(100))


def test_pld_azimuth_zero_is_lab_x(tmp_path, small_dataset):
    s = next(small_dataset.samples())
    export_pld(s, tmp_path / "p.csv", azimuth_deg=0.0)
    u = np.array([float(r["u"]) for r in _read_pld(tmp_path / "p.csv")])
    v = np.array([float(r["v"]) for r in _read_pld(tmp_path / "p.csv")])
    np.testing.assert_allclose(u, s.frames[..., 0].reshape(-1), atol=1e-9)
    np.testing.assert_array_equal(v, s.frames[..., 1].reshape(-1))


def test_pld_masked_markers_at_origin(tmp_path, small_dataset):
    s = body_part(next(small_dataset.samples()), small_dataset.layout, small_dataset.body_part_map, "arms", "remove")
    export_pld(s, tmp_path / "p.csv", marker_names=small_dataset.layout.marker_names)
    arms = [r for r in _read_pld(tmp_path / "p.csv") if r["marker"][1:] in ("SHO", "ELB", "WRA", "FIN")]
    assert arms and all(float(r["u"]) == 0.0 and float(r["v"]) == 0.0 for r in arms)

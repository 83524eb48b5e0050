import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import gaitablate.learn.selection as _selection
import gaitablate.learn.svm as _svm
from gaitablate.errors import CapReachedWarning
from gaitablate.mocap import GaitSample, reference_layout
from gaitablate.synth import generate_dataset

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ref():
    return reference_layout()


@pytest.fixture(scope="session")
def small_dataset():
    return generate_dataset(4, 4, seed=3)


@pytest.fixture(scope="session")
def medium_dataset():
    return generate_dataset(8, 8, seed=5)


def random_sample(rng, n_frames=100, n_markers=62, positive=True):
    """Smooth-ish random walker-like data (positive coordinates unless asked otherwise)."""
    t = np.linspace(0, 2 * np.pi, n_frames)[:, None, None]
    base = rng.uniform(100, 1800, size=(1, n_markers, 3)) if positive else rng.normal(0, 500, (1, n_markers, 3))
    amp = rng.uniform(0, 60, size=(1, n_markers, 3))
    phase = rng.uniform(0, 2 * np.pi, size=(1, n_markers, 3))
    frames = base + amp * np.sin(t + phase) + rng.normal(0, 1.0, size=(n_frames, n_markers, 3))
    return GaitSample("S", "01", frames, 100.0)


@pytest.fixture(autouse=True)
def _no_cap_noise():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CapReachedWarning)
        yield


# Every binary machine trained anywhere in the suite is checked for dual
# feasibility: 0 <= alpha <= C and sum(alpha * y) = 0.
FIT_LOG = {"machines": 0, "violations": []}
_real_fit_ovo = _svm.fit_ovo


def _checked_fit_ovo(K, y_idx, n_classes, C, *args, **kwargs):
    machines = _real_fit_ovo(K, y_idx, n_classes, C, *args, **kwargs)
    for m in machines:
        FIT_LOG["machines"] += 1
        balance = float(m.alpha @ m.y)
        if m.alpha.min() < 0 or m.alpha.max() > C or abs(balance) > 1e-6:
            FIT_LOG["violations"].append((m.pos, m.neg, C, float(m.alpha.min()), float(m.alpha.max()), balance))
    return machines


_svm.fit_ovo = _checked_fit_ovo
_selection.fit_ovo = _checked_fit_ovo


# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in range(1, 16):
        if c in ACCEPTANCE:
            passed, detail = ACCEPTANCE[c]
            if c == 3:
                passed = passed and not FIT_LOG["violations"]
                detail += f"; suite-wide {FIT_LOG['machines']} machines, {len(FIT_LOG['violations'])} infeasible"
            tr.write_line(f"criterion {c:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        elif c >= 8:
            tr.write_line(f"criterion {c:2d}: SKIP  reference dataset not available")
        else:
            tr.write_line(f"criterion {c:2d}: NOT RUN")


def pytest_sessionfinish(session, exitstatus):
    if FIT_LOG["violations"]:
        print(f"\nDUAL FEASIBILITY VIOLATIONS: {FIT_LOG['violations'][:5]}")
        session.exitstatus = 1

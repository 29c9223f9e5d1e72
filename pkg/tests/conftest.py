import numpy as np
import pytest

from mmcontact import forest as rf
from mmcontact.dataset import LabeledDataset, label_frames
from mmcontact.features import extract_features
from mmcontact.synth import generate_dataset


@pytest.fixture(scope="session")
def small_recordings():
    """Twelve short synthetic trials (four clean, eight with exogenous hits)."""
    return generate_dataset(12, seed=77)


@pytest.fixture(scope="session")
def small_dataset(small_recordings):
    parts = [
        label_frames(extract_features(r), r.contact_times, 0.018, r.trial_id, offset=0.013)
        for r in small_recordings
    ]
    return LabeledDataset.concatenate(parts)


@pytest.fixture(scope="session")
def small_model(small_dataset):
    return rf.train(small_dataset, rf.ForestConfig(n_estimators=8, seed=3))


def random_binary_dataset(rng, n=40, n_features=3, noise_cols=()):
    X = rng.normal(size=(n, n_features))
    y = (X[:, 0] + 0.5 * rng.normal(size=n) > 0).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    names = tuple(f"x{i}" for i in range(n_features))
    return LabeledDataset(X, y, np.zeros(n, dtype=int), None, names)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])

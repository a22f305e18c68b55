import os

import numpy as np
import pytest

from korm.ingest import DatasetSchema, load_dataset

DATA = os.path.join(os.path.dirname(__file__), os.pardir, "data")


def data_path(name):
    return os.path.join(DATA, name)


@pytest.fixture(scope="session")
def abalone():
    return load_dataset(data_path("abalone.csv"), DatasetSchema.parse(data_path("abalone.schema"), True))


@pytest.fixture(scope="session")
def tae():
    return load_dataset(data_path("tae.csv"), DatasetSchema.parse(data_path("tae.schema"), True))


def planted_stream(seed, sigma=1.0, per_blob=100, position=50):
    """Three tight blobs plus one point 50 sigma away from every blob centre."""
    rng = np.random.default_rng(seed)
    centres = np.array([[0.0, 0.0], [20.0, 0.0], [10.0, 10.0 * np.sqrt(3.0)]])
    blobs = np.vstack([c + sigma * rng.standard_normal((per_blob, 2)) for c in centres])
    rng.shuffle(blobs)
    planted = np.array([10.0, -50.0 * sigma])
    stream = np.insert(blobs, position, planted, axis=0)
    return stream, position, centres


# acceptance outcomes, printed once at the end of the session
ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda c: (int(c.rstrip("ab")), c)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")

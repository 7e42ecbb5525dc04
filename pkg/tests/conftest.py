import os
from pathlib import Path

import numpy as np
import pytest

from fvtrain import qsim

REPO = Path(__file__).resolve().parents[1]
ACCEPTANCE_LINES = []


def mnist_dir():
    return Path(os.environ.get("MNIST_DATA_DIR", REPO / "data" / "mnist"))


@pytest.fixture(scope="session")
def mnist_path():
    path = mnist_dir()
    if not (path / "train-images-idx3-ubyte.gz").exists() and not (path / "train-images-idx3-ubyte").exists():
        pytest.fail(f"MNIST IDX files not found in {path}; run scripts/make_mnist_subset.py")
    return path


@pytest.fixture(scope="session")
def desk_data(mnist_path):
    from fvtrain.data import load_mnist, preprocess

    return preprocess(load_mnist(mnist_path), (0, 1), 200, 100, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(20221016)


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return qsim.StateVector(n, v / np.linalg.norm(v))


@pytest.fixture
def acceptance_report():
    def report(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

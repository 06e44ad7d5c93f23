import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qcarobust import CaseMatrix  # noqa: E402


def random_case_matrix(rng: np.random.Generator, v: int, n: int, p=0.5, q=0.5) -> CaseMatrix:
    x = (rng.random((n, v)) < p).astype(np.uint8)
    y = (rng.random(n) < q).astype(np.uint8)
    return CaseMatrix.from_arrays(x, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def csv_file(tmp_path):
    def make(text: str, name: str = "data.csv") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return make

from pathlib import Path

import numpy as np
import pytest

from mixed_renewal.exchangeable import Sequence
from mixed_renewal.inference import SequenceSet

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture
def small_set() -> SequenceSet:
    return SequenceSet(
        (
            Sequence(np.array([0.4, 1.3, 0.2])),
            Sequence(np.array([2.5, 0.7])),
            Sequence(np.array([0.9])),
        ),
        ("a", "b", "c"),
    )


@pytest.fixture
def write_csv(tmp_path: Path):
    def write(text: str, name: str = "data.csv") -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return write

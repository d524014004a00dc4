from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from capture.models.fixtures import desk_pool

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def desk_pool_fixture():
    return desk_pool(FIXTURES)


@pytest.fixture(scope="session")
def exemplars():
    data = np.load(FIXTURES / "exemplars.npz")
    return data["images"], data["labels"]

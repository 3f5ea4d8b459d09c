import numpy as np
import pytest

from app.core.phantoms import make_phantom


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def checker16():
    return make_phantom("checkerboard", 16)


@pytest.fixture
def waves64():
    return make_phantom("waves", 64)


@pytest.fixture
def ledger_db(tmp_path):
    return tmp_path / "runs.db"

import os
import random
from pathlib import Path

import pytest

from fedcd import paillier

REPO_ROOT = Path(__file__).resolve().parent.parent


def pytest_configure(config):
    os.environ.setdefault("FCD_DATA_DIR", str(REPO_ROOT / "data"))


@pytest.fixture(scope="session")
def keypair():
    """Small deterministic test keypair; structural checks only."""
    return paillier.keygen(128, random.Random(0xF00D))


@pytest.fixture(scope="session")
def keypair_foreign():
    """A second, larger keypair for cross-key error checks."""
    return paillier.keygen(256, random.Random(0xBEEF))

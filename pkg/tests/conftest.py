"""Shared fixtures. Presence of this file also puts tests/ on sys.path so the
oracle helpers import as plain modules."""
from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260818)

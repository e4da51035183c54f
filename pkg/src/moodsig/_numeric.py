"""Tiny numeric helpers shared across modules."""
from __future__ import annotations

import numpy as np


def round_half_away(x):
    """Round to nearest integer with halves away from zero (so 3.5 -> 4 and
    -3.5 -> -4), unlike numpy's round-half-even."""
    arr = np.asarray(x, dtype=float)
    return np.sign(arr) * np.floor(np.abs(arr) + 0.5)

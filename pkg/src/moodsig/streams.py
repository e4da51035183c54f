"""Report streams, window slicing, and path normalization.

A participant's stream of 7-point mood reports is cut into fixed-length
windows; each window becomes a 7-dimensional path (time plus the six
categories) whose truncated signature is the feature vector used everywhere
downstream.

Normalization of a window of L reports: the path has L points, the first
pinned at the origin. Point j (1-based step) has time coordinate j/(L-1) and
category-c coordinate sum_{i<=j} (score_c(i) - 4) / (3 (L-1)), so the first
L-1 reports drive the increments. Scoring the scale midpoint 4 everywhere
leaves a category flat at 0; constant 7 climbs linearly to exactly +1 and
constant 1 falls to exactly -1. The final category coordinate is therefore
(mean of the driving scores - 4) / 3.
"""
from __future__ import annotations

import datetime
from collections import defaultdict
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from moodsig._validate import check_likert
from moodsig.tensors import signature_feature_matrix, tensor_dim

if TYPE_CHECKING:
    from moodsig.cohorts import Cohort, ParticipantRecord

CATEGORIES = ("anxious", "elated", "sad", "angry", "irritable", "energetic")
NUM_CATEGORIES = len(CATEGORIES)
PATH_DIM = NUM_CATEGORIES + 1  # leading time coordinate
DEFAULT_WINDOW = 20
_BATCH_CHUNK = 2048


@dataclass(frozen=True)
class MoodReport:
    """One day's self-report: six category scores on the 1..7 scale.

    seq is the report's position in its participant's stream; date is
    carried for provenance only and never feeds the features.
    """

    seq: int
    date: datetime.date | None
    scores: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", tuple(int(s) for s in self.scores))
        if len(self.scores) != NUM_CATEGORIES:
            raise ValueError(
                f"expected {NUM_CATEGORIES} scores, got {len(self.scores)}"
            )
        check_likert(np.array(self.scores), name="scores")
        if self.seq < 0:
            raise ValueError(f"seq must be >= 0, got {self.seq}")


@dataclass(frozen=True)
class StreamWindow:
    """A consecutive run of one participant's reports."""

    participant_id: str
    cohort: "Cohort"
    reports: tuple[MoodReport, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "reports", tuple(self.reports))
        if not self.reports:
            raise ValueError("window must contain at least one report")
        seqs = [r.seq for r in self.reports]
        if any(b <= a for a, b in zip(seqs, seqs[1:])):
            raise ValueError("window reports must have strictly ascending seq")

    @property
    def length(self) -> int:
        return len(self.reports)


@dataclass(frozen=True)
class NormalizedPath:
    """The 7-dimensional path of one window: column 0 is time, columns 1..6
    the categories in CATEGORIES order."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != PATH_DIM or pts.shape[0] < 2:
            raise ValueError(
                f"path must have shape (>=2, {PATH_DIM}), got {pts.shape}"
            )
        t = pts[:, 0]
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise ValueError("time coordinate must increase strictly 0 to 1")
        if np.any(pts[0] != 0.0):
            raise ValueError("path must start at the origin")
        if np.any(np.abs(pts[:, 1:]) > 1.0 + 1e-12):
            raise ValueError("category coordinates must stay within [-1, 1]")
        object.__setattr__(self, "points", pts)


def window_streams(
    record: "ParticipantRecord",
    length: int = DEFAULT_WINDOW,
    stride: int | None = None,
) -> list[StreamWindow]:
    """Consecutive windows of `length` reports, advancing by `stride`
    (default: non-overlapping). A trailing remainder shorter than `length`
    is dropped."""
    if length < 2:
        raise ValueError(f"window length must be >= 2, got {length}")
    if stride is None:
        stride = length
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    reports = record.reports
    return [
        StreamWindow(record.participant_id, record.cohort, reports[s : s + length])
        for s in range(0, len(reports) - length + 1, stride)
    ]


def corpus_windows(
    records: Sequence["ParticipantRecord"],
    length: int = DEFAULT_WINDOW,
    stride: int | None = None,
) -> list[StreamWindow]:
    """Windows of every record, concatenated in record order."""
    return [w for r in records for w in window_streams(r, length, stride)]


def _paths_from_scores(scores: np.ndarray) -> np.ndarray:
    """Vectorized normalization: (n_windows, L, 6) scores to (n_windows, L, 7)
    paths, identical arithmetic to the single-window route."""
    n, length, _ = scores.shape
    steps = (scores[:, :-1, :] - 4.0) / 3.0
    cats = (
        np.concatenate(
            [np.zeros((n, 1, NUM_CATEGORIES)), np.cumsum(steps, axis=1)], axis=1
        )
        / (length - 1)
    )
    time = np.broadcast_to(
        np.arange(length) / (length - 1), (n, length)
    )[..., None]
    return np.concatenate([time, cats], axis=2)


def _window_scores(window: StreamWindow) -> np.ndarray:
    return np.array([r.scores for r in window.reports], dtype=float)


def normalize(window: StreamWindow) -> NormalizedPath:
    """Map one window to its normalized path."""
    if window.length < 2:
        raise ValueError("normalization needs a window of at least 2 reports")
    pts = _paths_from_scores(_window_scores(window)[None, :, :])[0]
    return NormalizedPath(points=pts)


def featurize(window: StreamWindow, order: int) -> np.ndarray:
    """Signature feature vector (levels 1..order) of one window."""
    if order < 1:
        raise ValueError(f"signature order must be >= 1, got {order}")
    return signature_feature_matrix(
        normalize(window).points[None, :, :], order
    )[0]


def featurize_windows(
    windows: Sequence[StreamWindow], order: int
) -> np.ndarray:
    """Feature matrix for many windows, one row per window in input order.

    Windows of equal length are normalized and folded as one batch; the
    result matches per-window featurize bitwise.
    """
    if order < 1:
        raise ValueError(f"signature order must be >= 1, got {order}")
    width = tensor_dim(PATH_DIM, order) - 1
    out = np.zeros((len(windows), width))
    by_length: dict[int, list[int]] = defaultdict(list)
    for i, w in enumerate(windows):
        if w.length < 2:
            raise ValueError("cannot featurize a window of fewer than 2 reports")
        by_length[w.length].append(i)
    for _, idxs in sorted(by_length.items()):
        scores = np.stack([_window_scores(windows[i]) for i in idxs])
        paths = _paths_from_scores(scores)
        for start in range(0, len(idxs), _BATCH_CHUNK):
            block = idxs[start : start + _BATCH_CHUNK]
            out[block] = signature_feature_matrix(
                paths[start : start + _BATCH_CHUNK], order
            )
    return out


def prediction_pairs(
    record: "ParticipantRecord", length: int = DEFAULT_WINDOW
) -> list[tuple[StreamWindow, tuple[int, ...]]]:
    """(trailing window, next report's scores) pairs for every report with at
    least `length` predecessors, sliding one report at a time."""
    if length < 2:
        raise ValueError(f"window length must be >= 2, got {length}")
    pairs = []
    reports = record.reports
    for t in range(length, len(reports)):
        window = StreamWindow(
            record.participant_id, record.cohort, reports[t - length : t]
        )
        pairs.append((window, reports[t].scores))
    return pairs


class SignatureFeatures(BaseEstimator, TransformerMixin):
    """Transformer from score windows to truncated signature features.

    Accepts either a sequence of StreamWindow or a raw (n_windows, length, 6)
    array of 1..7 scores, and emits the (n_windows, tensor_dim(7, order) - 1)
    feature matrix. Stateless: fit only validates and records output width.
    """

    def __init__(self, order: int = 2):
        self.order = order

    def fit(self, X, y=None) -> "SignatureFeatures":
        if int(self.order) < 1:
            raise ValueError(f"signature order must be >= 1, got {self.order}")
        self.n_features_out_ = tensor_dim(PATH_DIM, int(self.order)) - 1
        return self

    def transform(self, X) -> np.ndarray:
        order = int(self.order)
        if order < 1:
            raise ValueError(f"signature order must be >= 1, got {order}")
        if len(X) > 0 and isinstance(X[0], StreamWindow):
            return featurize_windows(list(X), order)
        arr = np.asarray(X, dtype=float)
        if arr.ndim != 3 or arr.shape[2] != NUM_CATEGORIES:
            raise ValueError(
                "expected StreamWindow sequence or array of shape "
                f"(n_windows, length, {NUM_CATEGORIES}), got {arr.shape}"
            )
        if arr.shape[0] == 0:
            return np.zeros((0, tensor_dim(PATH_DIM, order) - 1))
        if arr.shape[1] < 2:
            raise ValueError("windows must contain at least 2 reports")
        check_likert(arr, name="score windows")
        return signature_feature_matrix(_paths_from_scores(arr), order)

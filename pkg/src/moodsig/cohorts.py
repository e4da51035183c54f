"""Cohort corpus handling: CSV load/store, synthetic generation, splitting.

The corpus file format is one CSV row per report:

    participant_id,date,cohort,anxious,elated,sad,angry,irritable,energetic

with date ISO-8601 or empty and cohort one of bipolar/borderline/healthy.
The class order (bipolar, borderline, healthy) = (0, 1, 2) is fixed
everywhere: models, confusion matrices, serialized files, tie-breaks.
"""
from __future__ import annotations

import csv
import datetime
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from moodsig._numeric import round_half_away
from moodsig.streams import (
    CATEGORIES,
    DEFAULT_WINDOW,
    NUM_CATEGORIES,
    MoodReport,
    StreamWindow,
)


class Cohort(enum.IntEnum):
    """Clinical group with its fixed ordinal encoding."""

    BIPOLAR = 0
    BORDERLINE = 1
    HEALTHY = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, text: str) -> "Cohort":
        try:
            return cls[text.upper()]
        except KeyError:
            raise ValueError(
                f"unknown cohort {text!r}; expected one of "
                f"{', '.join(c.label for c in cls)}"
            ) from None


COHORT_ORDER = (Cohort.BIPOLAR, Cohort.BORDERLINE, Cohort.HEALTHY)
CSV_COLUMNS = ("participant_id", "date", "cohort") + CATEGORIES


class CorpusFormatError(ValueError):
    """A corpus CSV violated the schema; message names line and field."""


@dataclass(frozen=True)
class ParticipantRecord:
    """One participant's full report stream, in study order."""

    participant_id: str
    cohort: Cohort
    reports: tuple[MoodReport, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "reports", tuple(self.reports))
        if not self.participant_id:
            raise ValueError("participant_id must be nonempty")
        if not self.reports:
            raise ValueError(
                f"participant {self.participant_id!r} has no reports"
            )


def _parse_row(
    row: list[str], line: int
) -> tuple[str, datetime.date | None, Cohort, tuple[int, ...]]:
    if len(row) != len(CSV_COLUMNS):
        raise CorpusFormatError(
            f"line {line}: expected {len(CSV_COLUMNS)} fields, got {len(row)}"
        )
    pid = row[0]
    if not pid:
        raise CorpusFormatError(f"line {line}, field 'participant_id': empty")
    date: datetime.date | None = None
    if row[1]:
        try:
            date = datetime.date.fromisoformat(row[1])
        except ValueError:
            raise CorpusFormatError(
                f"line {line}, field 'date': {row[1]!r} is not ISO-8601"
            ) from None
    try:
        cohort = Cohort.from_label(row[2])
    except ValueError as exc:
        raise CorpusFormatError(f"line {line}, field 'cohort': {exc}") from None
    scores = []
    for name, text in zip(CATEGORIES, row[3:]):
        try:
            value = int(text)
        except ValueError:
            raise CorpusFormatError(
                f"line {line}, field {name!r}: {text!r} is not an integer"
            ) from None
        if not 1 <= value <= 7:
            raise CorpusFormatError(
                f"line {line}, field {name!r}: {value} outside 1..7"
            )
        scores.append(value)
    return pid, date, cohort, tuple(scores)


def load_csv(path) -> list[ParticipantRecord]:
    """Read and validate a corpus CSV.

    Rows are grouped by participant_id and sorted by date (undated rows
    first) with file order breaking ties; seq is then reassigned 0..m-1 in
    that order. Records come back sorted by participant_id. A header-only
    file is an empty corpus.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusFormatError("file is empty, expected the header row")
        if tuple(header) != CSV_COLUMNS:
            raise CorpusFormatError(
                f"bad header {','.join(header)!r}; expected "
                f"{','.join(CSV_COLUMNS)!r}"
            )
        rows: dict[str, list[tuple]] = {}
        cohorts: dict[str, tuple[Cohort, int]] = {}
        for line, row in enumerate(reader, start=2):
            pid, date, cohort, scores = _parse_row(row, line)
            if pid in cohorts and cohorts[pid][0] != cohort:
                first = cohorts[pid]
                raise CorpusFormatError(
                    f"line {line}, field 'cohort': participant {pid!r} was "
                    f"{first[0].label} at line {first[1]}, now {cohort.label}"
                )
            cohorts.setdefault(pid, (cohort, line))
            rows.setdefault(pid, []).append((date, scores))

    records = []
    for pid in sorted(rows):
        entries = rows[pid]
        order = sorted(
            range(len(entries)),
            key=lambda i: (
                entries[i][0].toordinal() if entries[i][0] else -1,
                i,
            ),
        )
        reports = tuple(
            MoodReport(seq=j, date=entries[i][0], scores=entries[i][1])
            for j, i in enumerate(order)
        )
        records.append(ParticipantRecord(pid, cohorts[pid][0], reports))
    return records


def write_csv(records, path) -> None:
    """Write a corpus CSV in the canonical schema, reports in stored order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for record in records:
            for report in record.reports:
                writer.writerow(
                    [
                        record.participant_id,
                        report.date.isoformat() if report.date else "",
                        record.cohort.label,
                        *report.scores,
                    ]
                )


@dataclass(frozen=True)
class CohortParams:
    """Latent-process parameters for one cohort's generator.

    Each category follows an AR(1) around its mean with shared volatility
    and persistence; a two-state episode chain (switching per day with
    episode_rate) shifts elation/sadness/energy by +-episode_amplitude times
    a fixed (+1, -1, +0.8) pattern; anger and irritability innovations are
    correlated at anger_irritability_corr. Latent values are quantized by
    clamp(round(x), 1, 7).
    """

    means: tuple[float, ...]
    volatility: float
    persistence: float
    episode_rate: float = 0.0
    episode_amplitude: float = 0.0
    anger_irritability_corr: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        if len(self.means) != NUM_CATEGORIES:
            raise ValueError(f"means must have {NUM_CATEGORIES} entries")
        if self.volatility < 0:
            raise ValueError("volatility must be >= 0")
        if not 0 <= self.persistence < 1:
            raise ValueError("persistence must be in [0, 1)")
        if not 0 <= self.episode_rate <= 1:
            raise ValueError("episode_rate must be in [0, 1]")
        if not -1 <= self.anger_irritability_corr <= 1:
            raise ValueError("anger_irritability_corr must be in [-1, 1]")


_EPISODE_PATTERN = np.array([0.0, 1.0, -1.0, 0.0, 0.0, 0.8])


# The three cohorts are told apart mostly by dynamics, not by where their
# means sit: bipolar cycles between shifted regimes, borderline is volatile
# with tightly coupled anger/irritability, healthy is calm. Mean vectors are
# kept close on purpose so a mean-score model stays a weak baseline.
def _default_bipolar() -> CohortParams:
    return CohortParams(
        means=(4.0, 4.1, 3.9, 3.6, 3.7, 4.1),
        volatility=1.1,
        persistence=0.20,
        episode_rate=0.02,
        episode_amplitude=1.8,
        anger_irritability_corr=0.3,
    )


def _default_borderline() -> CohortParams:
    return CohortParams(
        means=(4.3, 3.8, 4.1, 3.9, 4.0, 3.8),
        volatility=2.0,
        persistence=0.15,
        episode_rate=0.0,
        episode_amplitude=0.0,
        anger_irritability_corr=0.95,
    )


def _default_healthy() -> CohortParams:
    return CohortParams(
        means=(3.8, 4.2, 3.7, 3.4, 3.5, 4.3),
        volatility=0.8,
        persistence=0.30,
        episode_rate=0.0,
        episode_amplitude=0.0,
        anger_irritability_corr=0.1,
    )


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic corpus configuration.

    With reports_per_participant unset, per-participant report counts are
    chosen so the corpus yields exactly target_windows non-overlapping
    windows of window_length for any seed (a seeded subset of participants
    gets one extra window's worth, plus a seeded sub-window remainder).
    Setting reports_per_participant gives every participant that many
    reports and disables the targeting.
    """

    participants: tuple[int, int, int] = (48, 31, 51)
    reports_per_participant: int | None = None
    target_windows: int = 733
    window_length: int = DEFAULT_WINDOW
    seed: int = 7
    bipolar: CohortParams = field(default_factory=_default_bipolar)
    borderline: CohortParams = field(default_factory=_default_borderline)
    healthy: CohortParams = field(default_factory=_default_healthy)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "participants", tuple(int(c) for c in self.participants)
        )
        if len(self.participants) != 3 or any(c < 0 for c in self.participants):
            raise ValueError("participants must be 3 nonnegative counts")
        if sum(self.participants) == 0:
            raise ValueError("at least one participant is required")
        if self.reports_per_participant is not None and self.reports_per_participant < 1:
            raise ValueError("reports_per_participant must be >= 1")
        if self.window_length < 2:
            raise ValueError("window_length must be >= 2")
        if self.target_windows < 0:
            raise ValueError("target_windows must be >= 0")

    def cohort_params(self, cohort: Cohort) -> CohortParams:
        return (self.bipolar, self.borderline, self.healthy)[int(cohort)]


def _window_allocation(cfg: SynthConfig) -> list[int]:
    """Windows per participant summing exactly to target_windows."""
    total = sum(cfg.participants)
    base, extra = divmod(cfg.target_windows, total)
    counts = [base] * total
    corpus_rng = np.random.default_rng([cfg.seed, 1])
    for idx in corpus_rng.choice(total, size=extra, replace=False):
        counts[int(idx)] += 1
    return counts


def _simulate_participant(
    cfg: SynthConfig, cohort: Cohort, pindex: int, n_reports_base: int | None
) -> tuple[MoodReport, ...]:
    rng = np.random.default_rng([cfg.seed, 0, pindex])
    if cfg.reports_per_participant is not None:
        n = cfg.reports_per_participant
        rng.integers(0, cfg.window_length)  # keep stream layout stable
    else:
        remainder = int(rng.integers(0, cfg.window_length))
        n = n_reports_base * cfg.window_length + remainder
        n = max(n, 1)
    p = cfg.cohort_params(cohort)

    eps = rng.standard_normal((n, NUM_CATEGORIES))
    rho = p.anger_irritability_corr
    eps[:, 4] = rho * eps[:, 3] + math.sqrt(1.0 - rho * rho) * eps[:, 4]

    state = np.empty(n, dtype=int)
    state[0] = rng.integers(0, 2)
    flips = rng.random(n) < p.episode_rate
    for t in range(1, n):
        state[t] = state[t - 1] ^ int(flips[t])
    shift = np.where(state[:, None] == 0, 1.0, -1.0) * (
        p.episode_amplitude * _EPISODE_PATTERN
    )

    mu = np.asarray(p.means) + shift
    x = np.empty((n, NUM_CATEGORIES))
    x[0] = mu[0] + p.volatility * eps[0]
    for t in range(1, n):
        x[t] = mu[t] + p.persistence * (x[t - 1] - mu[t - 1]) + p.volatility * eps[t]

    scores = np.clip(round_half_away(x), 1, 7).astype(int)
    start = datetime.date(2014, 1, 1)
    return tuple(
        MoodReport(
            seq=t,
            date=start + datetime.timedelta(days=t),
            scores=tuple(scores[t]),
        )
        for t in range(n)
    )


def generate_synthetic(cfg: SynthConfig) -> list[ParticipantRecord]:
    """Deterministic synthetic corpus: same config, same corpus, bitwise.

    Each participant draws from its own RNG substream derived from
    (seed, participant index), so generation order cannot matter.
    """
    allocation = (
        _window_allocation(cfg) if cfg.reports_per_participant is None else None
    )
    records = []
    pindex = 0
    for cohort, count in zip(COHORT_ORDER, cfg.participants):
        for i in range(1, count + 1):
            base = allocation[pindex] if allocation is not None else None
            reports = _simulate_participant(cfg, cohort, pindex, base)
            records.append(
                ParticipantRecord(f"{cohort.label}-{i:03d}", cohort, reports)
            )
            pindex += 1
    return records


@dataclass(frozen=True)
class DatasetSplit:
    """A seeded train/test partition of windows."""

    train: tuple[StreamWindow, ...]
    test: tuple[StreamWindow, ...]
    seed: int


def split(
    windows, ratio: float, seed: int, stratify: bool = False
) -> DatasetSplit:
    """Partition windows by a seeded uniform permutation.

    The train side gets floor(ratio * n) windows. With stratify=True the
    permutation and the floor are applied per cohort instead (train size can
    then differ from the global floor by rounding).
    """
    windows = list(windows)
    n = len(windows)
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be strictly between 0 and 1, got {ratio}")
    rng = np.random.default_rng(seed)
    if stratify:
        train_idx: list[int] = []
        test_idx: list[int] = []
        for cohort in COHORT_ORDER:
            idx = [i for i, w in enumerate(windows) if w.cohort == cohort]
            if not idx:
                continue
            perm = rng.permutation(len(idx))
            k = math.floor(ratio * len(idx))
            train_idx.extend(idx[j] for j in perm[:k])
            test_idx.extend(idx[j] for j in perm[k:])
    else:
        perm = rng.permutation(n)
        k = math.floor(ratio * n)
        train_idx = [int(j) for j in perm[:k]]
        test_idx = [int(j) for j in perm[k:]]
    if not train_idx or not test_idx:
        raise ValueError(
            f"split of {n} windows at ratio {ratio} leaves an empty side"
        )
    return DatasetSplit(
        train=tuple(windows[i] for i in train_idx),
        test=tuple(windows[i] for i in test_idx),
        seed=seed,
    )

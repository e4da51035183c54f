"""Evaluation protocols: classification metrics, ROC AUC, pairwise cohort
comparisons, bootstrap resampling, the leave-one-participant-out triangle,
and next-report prediction scoring.

Conventions fixed here: confusion matrices have predicted classes on rows and
actual classes on columns, in the order bipolar, borderline, healthy. Rates
with a zero denominator are None in Python and the string "undefined" in JSON
reports, never 0 or NaN.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from sklearn.base import clone

from moodsig._validate import check_likert
from moodsig.cohorts import (
    COHORT_ORDER,
    Cohort,
    ParticipantRecord,
    split,
)
from moodsig.models import (
    CohortClassifier,
    MoodRegressor,
    _fit_logistic,
    _gradient_step_size,
    _sigmoid,
    fit_scaler,
    mean_baseline_features,
    persistence_predict,
)
from moodsig.streams import (
    CATEGORIES,
    corpus_windows,
    featurize_windows,
    prediction_pairs,
    window_streams,
)

NUM_CLASSES = len(COHORT_ORDER)

# equilateral triangle for the per-participant plot:
# bipolar at the origin, borderline at (1, 0), healthy at the apex
TRIANGLE_VERTICES = np.array(
    [[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]]
)


def _as_class_codes(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    codes = arr.astype(int)
    if arr.ndim != 1 or not np.array_equal(codes, arr.astype(float)):
        raise ValueError(f"{name} must be a 1-d sequence of class codes")
    if codes.size and (codes.min() < 0 or codes.max() >= NUM_CLASSES):
        raise ValueError(f"{name} contains codes outside 0..{NUM_CLASSES - 1}")
    return codes


def confusion(preds, labels) -> np.ndarray:
    """3x3 count matrix, rows = predicted class, columns = actual class."""
    p = _as_class_codes(preds, "preds")
    a = _as_class_codes(labels, "labels")
    if p.shape != a.shape:
        raise ValueError(
            f"preds has length {p.size}, labels has length {a.size}"
        )
    if p.size == 0:
        raise ValueError("at least one (pred, label) pair is required")
    m = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=int)
    np.add.at(m, (p, a), 1)
    return m


@dataclass(frozen=True)
class ClassMetrics:
    """Overall accuracy plus per-class rates in fixed class order.
    A rate whose denominator is zero is stored as None."""

    accuracy: float
    sensitivity: tuple[float | None, ...]
    ppv: tuple[float | None, ...]
    specificity: tuple[float | None, ...]

    def as_dict(self) -> dict:
        def mark(v):
            return "undefined" if v is None else v

        return {
            "accuracy": self.accuracy,
            "per_class": {
                c.label: {
                    "sensitivity": mark(self.sensitivity[int(c)]),
                    "ppv": mark(self.ppv[int(c)]),
                    "specificity": mark(self.specificity[int(c)]),
                }
                for c in COHORT_ORDER
            },
        }


def _rate(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def class_metrics(matrix) -> ClassMetrics:
    m = np.asarray(matrix)
    if m.shape != (NUM_CLASSES, NUM_CLASSES) or np.any(m < 0):
        raise ValueError("confusion matrix must be 3x3 with counts >= 0")
    total = int(m.sum())
    if total == 0:
        raise ValueError("confusion matrix is empty")
    sens, ppv, spec = [], [], []
    for c in range(NUM_CLASSES):
        tp = int(m[c, c])
        actual_c = int(m[:, c].sum())
        predicted_c = int(m[c, :].sum())
        fp = predicted_c - tp
        tn = total - actual_c - fp
        sens.append(_rate(tp, actual_c))
        ppv.append(_rate(tp, predicted_c))
        spec.append(_rate(tn, tn + fp))
    return ClassMetrics(
        accuracy=int(np.trace(m)) / total,
        sensitivity=tuple(sens),
        ppv=tuple(ppv),
        specificity=tuple(spec),
    )


def roc_auc(scores, positives) -> float:
    """Mann-Whitney AUC: the fraction of (positive, negative) pairs ranked
    correctly by score, ties counted one half."""
    s = np.asarray(scores, dtype=float)
    pos = np.asarray(positives, dtype=bool)
    if s.shape != pos.shape or s.ndim != 1:
        raise ValueError("scores and positives must be 1-d and equal length")
    n_pos = int(pos.sum())
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative examples")
    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    avg_rank = (ends - counts + 1 + ends) / 2.0
    rank_sum = float(avg_rank[inverse][pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class PairwiseResult:
    accuracy: float
    auc: float
    n: int


def pairwise_eval(
    model: CohortClassifier,
    X_test,
    y_test,
    *,
    retrain: bool = False,
    X_train=None,
    y_train=None,
) -> dict[tuple[Cohort, Cohort], PairwiseResult]:
    """Two-cohort accuracy and AUC for each of the three cohort pairs.

    By default the fitted three-class model is restricted to each pair:
    predictions compare the two classes' scores (ties to the earlier class)
    and AUC ranks their difference, with the earlier cohort as positive.
    With retrain=True a fresh binary model is fit per pair on the training
    data instead, using the same hyperparameters.
    """
    y = _as_class_codes(y_test, "y_test")
    scores = model.predict_scores(X_test)
    if retrain:
        if X_train is None or y_train is None:
            raise ValueError("retrain=True requires X_train and y_train")
        yt = _as_class_codes(y_train, "y_train")
    out: dict[tuple[Cohort, Cohort], PairwiseResult] = {}
    for a, b in combinations(COHORT_ORDER, 2):
        mask = (y == int(a)) | (y == int(b))
        if not np.any(y == int(a)) or not np.any(y == int(b)):
            missing = a.label if not np.any(y == int(a)) else b.label
            raise ValueError(f"test set has no {missing} windows")
        positives = y[mask] == int(a)
        if retrain:
            tmask = (yt == int(a)) | (yt == int(b))
            mean, scale = fit_scaler(X_train[tmask])
            Xs = (X_train[tmask] - mean) / scale
            w, bias, _ = _fit_logistic(
                Xs,
                (yt[tmask] == int(a)).astype(float),
                model.l2,
                model.tol,
                model.max_iter,
                model.accelerated,
                _gradient_step_size(Xs, model.l2),
            )
            p = _sigmoid(((X_test[mask] - mean) / scale) @ w + bias)
            predicted_a = p >= 0.5
            pair_scores = p
        else:
            sub = scores[mask]
            predicted_a = sub[:, int(a)] >= sub[:, int(b)]
            pair_scores = sub[:, int(a)] - sub[:, int(b)]
        out[(a, b)] = PairwiseResult(
            accuracy=float(np.mean(predicted_a == positives)),
            auc=roc_auc(pair_scores, positives),
            n=int(mask.sum()),
        )
    return out


def mae(preds, actuals) -> float:
    p = np.asarray(preds, dtype=float)
    a = np.asarray(actuals, dtype=float)
    if p.shape != a.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {a.shape}")
    if p.size == 0:
        raise ValueError("mae needs at least one pair")
    return float(np.mean(np.abs(p - a)))


def correct_within_one(pred: int, actual: int) -> bool:
    """The tolerance-1 correctness rule for a single predicted score."""
    check_likert(np.array([pred, actual]), name="scores")
    return abs(int(pred) - int(actual)) <= 1


def correct_rate(preds, actuals) -> float:
    """Fraction of predictions within one point of the observed score."""
    p = np.asarray(preds)
    a = np.asarray(actuals)
    if p.shape != a.shape or p.size == 0:
        raise ValueError("preds and actuals must be equal-length and nonempty")
    check_likert(p, name="preds")
    check_likert(a, name="actuals")
    return float(np.mean(np.abs(p.astype(int) - a.astype(int)) <= 1))


@dataclass(frozen=True)
class BootstrapResult:
    """Accuracies from refitting on B training resamples, with their mean
    and population standard deviation."""

    accuracies: tuple[float, ...]
    mean: float
    std: float
    seed: int

    @property
    def b(self) -> int:
        return len(self.accuracies)


def bootstrap(
    template: CohortClassifier,
    X_train,
    y_train,
    X_test,
    y_test,
    *,
    b: int = 100,
    seed: int = 0,
) -> BootstrapResult:
    """Resample the training windows with replacement B times, refit a copy
    of `template` on each resample, and score it on the fixed test set.

    Iteration i draws from its own substream (seed, i), so results do not
    depend on execution order. A resample missing a class is redrawn, up to
    100 attempts.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    y = _as_class_codes(y_train, "y_train")
    yt = _as_class_codes(y_test, "y_test")
    n = y.size
    accuracies = []
    for i in range(b):
        rng = np.random.default_rng([seed, i])
        for _ in range(100):
            idx = rng.integers(0, n, n)
            if len(set(y[idx].tolist())) == NUM_CLASSES:
                break
        else:
            raise ValueError(
                f"bootstrap resample {i} kept missing a class after 100 draws"
            )
        model = clone(template).fit(X_train[idx], y[idx])
        accuracies.append(float(np.mean(model.predict(X_test) == yt)))
    acc = np.array(accuracies)
    return BootstrapResult(
        accuracies=tuple(accuracies),
        mean=float(acc.mean()),
        std=float(acc.std()),
        seed=seed,
    )


@dataclass(frozen=True)
class TrianglePoint:
    """One participant's classification mix and its planar embedding."""

    participant_id: str
    cohort: Cohort
    proportions: tuple[float, float, float]
    point: tuple[float, float]


def triangle(
    records: list[ParticipantRecord],
    *,
    length: int = 20,
    stride: int | None = None,
    classifier: CohortClassifier | None = None,
) -> list[TrianglePoint]:
    """Leave-one-participant-out spectrum: for each participant, retrain on
    everyone else's windows, classify the held-out windows, and place the
    participant in the triangle by class proportions."""
    template = classifier if classifier is not None else CohortClassifier()
    per_participant: list[tuple[ParticipantRecord, list]] = []
    for rec in records:
        wins = window_streams(rec, length=length, stride=stride)
        if not wins:
            warnings.warn(
                f"participant {rec.participant_id} has no windows; skipped",
                stacklevel=2,
            )
            continue
        per_participant.append((rec, wins))
    counts = {c: 0 for c in COHORT_ORDER}
    for rec, _ in per_participant:
        counts[rec.cohort] += 1
    thin = [c.label for c in COHORT_ORDER if counts[c] < 2]
    if thin:
        raise ValueError(
            "leave-one-out needs at least 2 participants with windows per "
            f"cohort; too few in: {', '.join(thin)}"
        )
    windows = [w for _, wins in per_participant for w in wins]
    features = featurize_windows(windows, order=template.signature_order)
    owner = np.array([w.participant_id for w in windows])
    labels = np.array([int(w.cohort) for w in windows])
    points = []
    for rec, wins in sorted(per_participant, key=lambda t: t[0].participant_id):
        held = owner == rec.participant_id
        model = clone(template).fit(features[~held], labels[~held])
        preds = model.predict(features[held])
        props = np.bincount(preds, minlength=NUM_CLASSES) / len(wins)
        planar = props @ TRIANGLE_VERTICES
        points.append(
            TrianglePoint(
                participant_id=rec.participant_id,
                cohort=rec.cohort,
                proportions=tuple(float(p) for p in props),
                point=(float(planar[0]), float(planar[1])),
            )
        )
    return points


@dataclass(frozen=True)
class TraceRow:
    """One plotted step of a participant's prediction trace."""

    seq: int
    value: float
    correct: bool


def _category_index(category) -> int:
    if isinstance(category, str):
        if category not in CATEGORIES:
            raise ValueError(
                f"unknown category {category!r}; choose from {CATEGORIES}"
            )
        return CATEGORIES.index(category)
    idx = int(category)
    if not 0 <= idx < len(CATEGORIES):
        raise ValueError(f"category index {idx} out of range")
    return idx


def prediction_trace(
    regressor: MoodRegressor,
    record: ParticipantRecord,
    category,
    *,
    length: int = 20,
) -> list[TraceRow]:
    """Rolling one-step predictions for one participant and category.

    Each report after the first `length` gets a row: its seq, the value of
    the participant's full-stream normalized mood path at that report, and
    whether the prediction was correct within one point.
    """
    cat = _category_index(category)
    n_reports = len(record.reports)
    if n_reports <= length:
        raise ValueError(
            f"participant {record.participant_id} has {n_reports} reports; "
            f"a trace needs more than {length}"
        )
    pairs = prediction_pairs(record, length=length)
    features = featurize_windows(
        [w for w, _ in pairs], order=regressor.signature_order
    )
    preds = regressor.predict(features)[:, cat]
    scores = np.array([r.scores for r in record.reports], dtype=float)
    steps = (scores[:-1, cat] - 4.0) / 3.0
    values = np.concatenate(([0.0], np.cumsum(steps))) / (n_reports - 1)
    rows = []
    for j, (_, target) in enumerate(pairs):
        rows.append(
            TraceRow(
                seq=record.reports[length + j].seq,
                value=float(values[length + j]),
                correct=correct_within_one(int(preds[j]), target[cat]),
            )
        )
    return rows


def _split_records(
    records: list[ParticipantRecord], ratio: float, seed: int
) -> tuple[list[ParticipantRecord], list[ParticipantRecord]]:
    """Per-cohort participant split for the regression protocol; a
    participant's prediction pairs never straddle train and test."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be strictly between 0 and 1")
    rng = np.random.default_rng([seed, 2])
    train, test = [], []
    for cohort in COHORT_ORDER:
        group = [r for r in records if r.cohort is cohort]
        if len(group) < 2:
            raise ValueError(
                f"cohort {cohort.label} needs at least 2 participants "
                "to split for regression"
            )
        n_train = min(max(int(len(group) * ratio), 1), len(group) - 1)
        perm = rng.permutation(len(group))
        train.extend(group[i] for i in sorted(perm[:n_train]))
        test.extend(group[i] for i in sorted(perm[n_train:]))
    return train, test


def _cohort_pairs(records: list[ParticipantRecord], length: int):
    windows, targets = [], []
    for rec in records:
        for window, target in prediction_pairs(rec, length=length):
            windows.append(window)
            targets.append(target)
    return windows, np.array(targets, dtype=int)


def _regression_block(
    cohort: Cohort,
    train_records,
    test_records,
    *,
    signature_order: int,
    alpha: float,
    length: int,
) -> dict:
    train_windows, train_y = _cohort_pairs(train_records, length)
    test_windows, test_y = _cohort_pairs(test_records, length)
    if not train_windows or not test_windows:
        side = "training" if not train_windows else "test"
        raise ValueError(
            f"cohort {cohort.label} has no {side} prediction pairs; "
            f"participants need more than {length} reports"
        )
    model = MoodRegressor(
        signature_order=signature_order, alpha=alpha, cohort=cohort
    ).fit(featurize_windows(train_windows, order=signature_order), train_y)
    preds = model.predict(
        featurize_windows(test_windows, order=signature_order)
    )
    base = np.array([persistence_predict(w) for w in test_windows], dtype=int)
    per_category = {}
    for k, name in enumerate(CATEGORIES):
        per_category[name] = {
            "mae": mae(preds[:, k], test_y[:, k]),
            "correct_rate": correct_rate(preds[:, k], test_y[:, k]),
            "persistence_mae": mae(base[:, k], test_y[:, k]),
            "persistence_correct_rate": correct_rate(base[:, k], test_y[:, k]),
        }
    return {
        "n_train_pairs": len(train_windows),
        "n_test_pairs": len(test_windows),
        "per_category": per_category,
        "overall": {
            "mae": mae(preds, test_y),
            "correct_rate": correct_rate(preds, test_y),
            "persistence_mae": mae(base, test_y),
            "persistence_correct_rate": correct_rate(base, test_y),
        },
    }


def evaluation_report(
    records: list[ParticipantRecord],
    *,
    signature_order: int = 2,
    window_length: int = 20,
    stride: int | None = None,
    ratio: float = 0.7,
    seed: int = 0,
    stratify: bool = False,
    l2: float = 1.0,
    alpha: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    accelerated: bool = True,
    retrain_pairwise: bool = False,
) -> dict:
    """Full evaluation on one corpus: split, train, and score everything.

    Classification uses a window-level split; the mean-score baseline is a
    classifier of the same family on per-category window means. Regression
    splits by participant within each cohort and compares the signature
    regressor against the carry-last-report-forward baseline.
    """
    windows = corpus_windows(records, length=window_length, stride=stride)
    parts = split(windows, ratio=ratio, seed=seed, stratify=stratify)
    X_train = featurize_windows(parts.train, order=signature_order)
    X_test = featurize_windows(parts.test, order=signature_order)
    y_train = np.array([int(w.cohort) for w in parts.train])
    y_test = np.array([int(w.cohort) for w in parts.test])
    clf = CohortClassifier(
        signature_order=signature_order,
        l2=l2,
        tol=tol,
        max_iter=max_iter,
        accelerated=accelerated,
    ).fit(X_train, y_train)
    preds = clf.predict(X_test)
    cm = confusion(preds, y_test)
    pairwise = pairwise_eval(
        clf,
        X_test,
        y_test,
        retrain=retrain_pairwise,
        X_train=X_train,
        y_train=y_train,
    )
    B_train = np.array([mean_baseline_features(w) for w in parts.train])
    B_test = np.array([mean_baseline_features(w) for w in parts.test])
    baseline = CohortClassifier(
        signature_order=signature_order,
        l2=l2,
        tol=tol,
        max_iter=max_iter,
        accelerated=accelerated,
    ).fit(B_train, y_train)
    baseline_acc = float(np.mean(baseline.predict(B_test) == y_test))
    reg_train, reg_test = _split_records(records, ratio, seed)
    regression = {
        cohort.label: _regression_block(
            cohort,
            [r for r in reg_train if r.cohort is cohort],
            [r for r in reg_test if r.cohort is cohort],
            signature_order=signature_order,
            alpha=alpha,
            length=window_length,
        )
        for cohort in COHORT_ORDER
    }
    return {
        "protocol": {
            "signature_order": signature_order,
            "window_length": window_length,
            "stride": stride if stride is not None else window_length,
            "ratio": ratio,
            "seed": seed,
            "stratify": stratify,
            "train_windows": len(parts.train),
            "test_windows": len(parts.test),
        },
        "classifier": {
            "accuracy": float(np.mean(preds == y_test)),
            "mean_baseline_accuracy": baseline_acc,
            "class_order": [c.label for c in COHORT_ORDER],
            "confusion": cm.tolist(),
            "metrics": class_metrics(cm).as_dict(),
            "pairwise": {
                f"{a.label}-vs-{b.label}": {
                    "accuracy": r.accuracy,
                    "auc": r.auc,
                    "n": r.n,
                }
                for (a, b), r in pairwise.items()
            },
        },
        "regression": regression,
    }

"""Linear models on signature features, plus the two reference baselines.

CohortClassifier: three one-vs-rest L2-regularized logistic models fit by
deterministic full-batch gradient descent on standardized features. The
per-class objective is

    J(w, b) = (1/n) sum_i [log(1 + exp(z_i)) - y_i z_i] + l2/(2n) ||w||^2

with z = X w + b and the bias unpenalized. Gradient descent steps with the
exact rate 1/L (L from the logistic Hessian bound and the ridge term) and,
by default, Nesterov momentum with gradient-based restarts; momentum changes
nothing about determinism or the optimum, only how fast the gradient-norm
stopping rule is met. accelerated=False gives the plain iteration.

MoodRegressor: one ridge regression per category, solved in closed form via
the normal equations on standardized features with an unpenalized intercept.

Both models serialize to a versioned JSON document that round-trips
predictions bitwise (floats are written in shortest round-trip decimal).
"""
from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.exceptions import NotFittedError

from moodsig._numeric import round_half_away
from moodsig._validate import as_float_matrix, check_feature_count, check_likert
from moodsig.cohorts import COHORT_ORDER, Cohort
from moodsig.streams import NUM_CATEGORIES, StreamWindow

MODEL_FORMAT = "moodsig-model"
SCHEMA_VERSION = 1


def fit_scaler(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and standard deviation from training data only.
    Constant features get scale 1 so they standardize to zero, not NaN."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return mean, std


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_objective(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float
) -> float:
    """Mean cross-entropy plus the scaled ridge penalty; y is 0/1."""
    n = X.shape[0]
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return loss + 0.5 * l2 / n * float(w @ w)


def logistic_gradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[np.ndarray, float]:
    """Analytic gradient of logistic_objective in (w, b)."""
    n = X.shape[0]
    dz = (_sigmoid(X @ w + b) - y) / n
    return X.T @ dz + (l2 / n) * w, float(dz.sum())


def _gradient_step_size(X: np.ndarray, l2: float) -> float:
    """1 / L for the objective above: the logistic Hessian is bounded by
    A^T A / (4n) over (w, b) with A = [X, 1], plus l2/n from the penalty."""
    n = X.shape[0]
    A = np.column_stack([X, np.ones(n)])
    f = A.shape[1]
    if f <= 128:
        lam = float(np.linalg.eigvalsh(A.T @ A)[-1])
    else:
        # deterministic power iteration; 1.05 covers the residual error
        v = np.full(f, 1.0 / np.sqrt(f))
        lam = 0.0
        for _ in range(80):
            u = A.T @ (A @ v)
            lam = float(np.linalg.norm(u))
            v = u / lam
        lam *= 1.05
    return 1.0 / (lam / (4.0 * n) + l2 / n)


def _fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    l2: float,
    tol: float,
    max_iter: int,
    accelerated: bool,
    step: float,
) -> tuple[np.ndarray, float, int]:
    """Minimize logistic_objective from zero init; stop when the gradient
    norm at the returned iterate is <= tol, else after max_iter steps."""
    w = np.zeros(X.shape[1])
    b = 0.0
    vw, vb = w, b
    momentum = 0
    for it in range(max_iter):
        gw, gb = logistic_gradient(vw, vb, X, y, l2)
        if float(np.sqrt(gw @ gw + gb * gb)) <= tol:
            return vw, vb, it
        new_w = vw - step * gw
        new_b = vb - step * gb
        if accelerated:
            # restart momentum when the step turns against the gradient
            if gw @ (new_w - w) + gb * (new_b - b) > 0.0:
                momentum = 0
            else:
                momentum += 1
            beta = momentum / (momentum + 3.0)
            vw = new_w + beta * (new_w - w)
            vb = new_b + beta * (new_b - b)
        else:
            vw, vb = new_w, new_b
        w, b = new_w, new_b
    return vw, vb, max_iter


def _check_fitted(model, attr: str) -> None:
    if not hasattr(model, attr):
        raise NotFittedError(
            f"{type(model).__name__} must be fitted before predicting"
        )


class CohortClassifier(BaseEstimator, ClassifierMixin):
    """One-vs-rest logistic classifier over the three cohorts.

    Class order is fixed: bipolar=0, borderline=1, healthy=2. predict breaks
    score ties toward the earlier class. Scores are the three per-class
    logistic outputs, not renormalized.
    """

    def __init__(
        self,
        signature_order: int = 2,
        l2: float = 1.0,
        tol: float = 1e-6,
        max_iter: int = 10_000,
        accelerated: bool = True,
    ):
        self.signature_order = signature_order
        self.l2 = l2
        self.tol = tol
        self.max_iter = max_iter
        self.accelerated = accelerated

    def _validate_params(self) -> None:
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def fit(self, X, y) -> "CohortClassifier":
        self._validate_params()
        X = as_float_matrix(X, "X")
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError(
                f"y has shape {y.shape}, expected ({X.shape[0]},)"
            )
        labels = y.astype(int)
        if not np.array_equal(labels, np.asarray(y, dtype=float)):
            raise ValueError("y must contain integer class codes")
        known = {int(c) for c in COHORT_ORDER}
        bad = sorted(set(labels.tolist()) - known)
        if bad:
            raise ValueError(f"unknown class codes in y: {bad}")
        missing = [c.label for c in COHORT_ORDER if int(c) not in set(labels.tolist())]
        if missing:
            raise ValueError(
                f"training data is missing cohort(s): {', '.join(missing)}"
            )
        mean, scale = fit_scaler(X)
        Xs = (X - mean) / scale
        step = _gradient_step_size(Xs, self.l2)
        coef = np.zeros((len(COHORT_ORDER), X.shape[1]))
        intercept = np.zeros(len(COHORT_ORDER))
        n_iter = np.zeros(len(COHORT_ORDER), dtype=int)
        for c in COHORT_ORDER:
            w, b, it = _fit_logistic(
                Xs,
                (labels == int(c)).astype(float),
                self.l2,
                self.tol,
                self.max_iter,
                self.accelerated,
                step,
            )
            coef[int(c)] = w
            intercept[int(c)] = b
            n_iter[int(c)] = it
        self.classes_ = np.array([int(c) for c in COHORT_ORDER])
        self.scaler_mean_ = mean
        self.scaler_scale_ = scale
        self.coef_ = coef
        self.intercept_ = intercept
        self.n_iter_ = n_iter
        return self

    def predict_scores(self, X) -> np.ndarray:
        """Per-class logistic outputs, shape (n_samples, 3)."""
        _check_fitted(self, "coef_")
        X = as_float_matrix(X, "X")
        check_feature_count(X, self.coef_.shape[1])
        Xs = (X - self.scaler_mean_) / self.scaler_scale_
        return _sigmoid(Xs @ self.coef_.T + self.intercept_)

    def predict(self, X) -> np.ndarray:
        """Class codes by highest score; ties go to the earlier class."""
        return np.argmax(self.predict_scores(X), axis=1)

    def predict_one(self, x) -> tuple[int, np.ndarray]:
        """(label, scores) for a single feature vector."""
        scores = self.predict_scores(np.asarray(x, dtype=float)[None, :])[0]
        return int(np.argmax(scores)), scores


class MoodRegressor(BaseEstimator, RegressorMixin):
    """Per-category ridge regression of the next report's six scores.

    Intended to be trained on windows of a single cohort; the cohort is
    carried as metadata. predict rounds half away from zero and clamps to
    the 1..7 scale; predict_raw gives the unrounded values.
    """

    def __init__(
        self,
        signature_order: int = 2,
        alpha: float = 1.0,
        cohort: Cohort | None = None,
    ):
        self.signature_order = signature_order
        self.alpha = alpha
        self.cohort = cohort

    def fit(self, X, y) -> "MoodRegressor":
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        X = as_float_matrix(X, "X")
        Y = np.asarray(y, dtype=float)
        if Y.ndim != 2 or Y.shape != (X.shape[0], NUM_CATEGORIES):
            raise ValueError(
                f"y must have shape ({X.shape[0]}, {NUM_CATEGORIES}), "
                f"got {Y.shape}"
            )
        if X.shape[0] < 1:
            raise ValueError("at least one training example is required")
        check_likert(Y, name="targets")
        mean, scale = fit_scaler(X)
        Xs = (X - mean) / scale
        y_mean = Y.mean(axis=0)
        gram = Xs.T @ Xs + self.alpha * np.eye(X.shape[1])
        coef = np.linalg.solve(gram, Xs.T @ (Y - y_mean))
        self.scaler_mean_ = mean
        self.scaler_scale_ = scale
        self.coef_ = coef.T
        self.intercept_ = y_mean
        return self

    def predict_raw(self, X) -> np.ndarray:
        _check_fitted(self, "coef_")
        X = as_float_matrix(X, "X")
        check_feature_count(X, self.coef_.shape[1])
        Xs = (X - self.scaler_mean_) / self.scaler_scale_
        return Xs @ self.coef_.T + self.intercept_

    def predict(self, X) -> np.ndarray:
        """Scores on the 1..7 scale (round half away from zero, then clamp)."""
        raw = self.predict_raw(X)
        return np.clip(round_half_away(raw), 1, 7).astype(int)


def mean_baseline_features(window: StreamWindow) -> np.ndarray:
    """Per-category arithmetic mean of all the window's raw scores."""
    scores = np.array([r.scores for r in window.reports], dtype=float)
    return scores.mean(axis=0)


def persistence_predict(window: StreamWindow) -> tuple[int, ...]:
    """Carry the window's last report forward as the prediction."""
    return window.reports[-1].scores


def model_to_dict(model) -> dict:
    """Serializable document for a fitted model."""
    if isinstance(model, CohortClassifier):
        _check_fitted(model, "coef_")
        return {
            "format": MODEL_FORMAT,
            "schema_version": SCHEMA_VERSION,
            "kind": "cohort-classifier",
            "signature_order": int(model.signature_order),
            "classes": [c.label for c in COHORT_ORDER],
            "l2": float(model.l2),
            "tol": float(model.tol),
            "max_iter": int(model.max_iter),
            "accelerated": bool(model.accelerated),
            "scaler": {
                "mean": model.scaler_mean_.tolist(),
                "scale": model.scaler_scale_.tolist(),
            },
            "coef": model.coef_.tolist(),
            "intercept": model.intercept_.tolist(),
            "n_iter": model.n_iter_.tolist(),
        }
    if isinstance(model, MoodRegressor):
        _check_fitted(model, "coef_")
        return {
            "format": MODEL_FORMAT,
            "schema_version": SCHEMA_VERSION,
            "kind": "mood-regressor",
            "signature_order": int(model.signature_order),
            "cohort": model.cohort.label if model.cohort is not None else None,
            "alpha": float(model.alpha),
            "scaler": {
                "mean": model.scaler_mean_.tolist(),
                "scale": model.scaler_scale_.tolist(),
            },
            "coef": model.coef_.tolist(),
            "intercept": model.intercept_.tolist(),
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: dict):
    """Rebuild a fitted model from model_to_dict output."""
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a model document")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported schema_version {doc.get('schema_version')!r}"
        )
    kind = doc.get("kind")
    if kind == "cohort-classifier":
        model = CohortClassifier(
            signature_order=doc["signature_order"],
            l2=doc["l2"],
            tol=doc["tol"],
            max_iter=doc["max_iter"],
            accelerated=doc["accelerated"],
        )
        model.classes_ = np.array([int(c) for c in COHORT_ORDER])
        model.n_iter_ = np.array(doc["n_iter"], dtype=int)
    elif kind == "mood-regressor":
        cohort = doc.get("cohort")
        model = MoodRegressor(
            signature_order=doc["signature_order"],
            alpha=doc["alpha"],
            cohort=Cohort.from_label(cohort) if cohort else None,
        )
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    model.scaler_mean_ = np.array(doc["scaler"]["mean"], dtype=float)
    model.scaler_scale_ = np.array(doc["scaler"]["scale"], dtype=float)
    model.coef_ = np.array(doc["coef"], dtype=float)
    model.intercept_ = np.array(doc["intercept"], dtype=float)
    return model


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))

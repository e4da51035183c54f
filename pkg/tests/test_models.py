"""Tests for the linear models, their optimizer, and serialization."""
from __future__ import annotations

import datetime

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from moodsig._numeric import round_half_away
from moodsig.cohorts import Cohort
from moodsig.models import (
    CohortClassifier,
    MoodRegressor,
    fit_scaler,
    load_model,
    logistic_gradient,
    logistic_objective,
    mean_baseline_features,
    model_from_dict,
    model_to_dict,
    persistence_predict,
    save_model,
)
from moodsig.streams import MoodReport, StreamWindow

from oracles import ridge_lstsq_oracle


def blob_data(rng, n_per=40, spread=0.4):
    """Three well-separated 2-d clusters labeled 0/1/2."""
    centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    X = np.vstack(
        [c + spread * rng.standard_normal((n_per, 2)) for c in centers]
    )
    y = np.repeat([0, 1, 2], n_per)
    return X, y


def trivial_classifier():
    """Hand-assembled fitted classifier with all-equal scores."""
    m = CohortClassifier()
    m.classes_ = np.array([0, 1, 2])
    m.scaler_mean_ = np.zeros(2)
    m.scaler_scale_ = np.ones(2)
    m.coef_ = np.zeros((3, 2))
    m.intercept_ = np.zeros(3)
    m.n_iter_ = np.zeros(3, dtype=int)
    return m


class TestCohortClassifier:
    def test_separates_blobs(self, rng):
        X, y = blob_data(rng)
        model = CohortClassifier().fit(X, y)
        assert np.array_equal(model.predict(X), y)

    def test_scores_shape_and_range(self, rng):
        X, y = blob_data(rng, n_per=10)
        scores = CohortClassifier().fit(X, y).predict_scores(X)
        assert scores.shape == (30, 3)
        assert np.all((scores > 0) & (scores < 1))

    def test_missing_class_error_names_cohort(self, rng):
        X = rng.standard_normal((10, 3))
        y = np.array([0, 0, 0, 0, 0, 2, 2, 2, 2, 2])
        with pytest.raises(ValueError, match="borderline"):
            CohortClassifier().fit(X, y)

    def test_unknown_class_code_rejected(self, rng):
        X = rng.standard_normal((4, 2))
        with pytest.raises(ValueError, match="unknown class"):
            CohortClassifier().fit(X, [0, 1, 2, 5])

    def test_non_integer_labels_rejected(self, rng):
        X = rng.standard_normal((3, 2))
        with pytest.raises(ValueError, match="integer"):
            CohortClassifier().fit(X, [0.0, 1.5, 2.0])

    def test_nan_features_rejected(self, rng):
        X = rng.standard_normal((6, 2))
        X[3, 1] = np.nan
        with pytest.raises(ValueError, match="NaN"):
            CohortClassifier().fit(X, [0, 1, 2, 0, 1, 2])

    def test_wrong_feature_count_at_predict(self, rng):
        X, y = blob_data(rng, n_per=5)
        model = CohortClassifier().fit(X, y)
        with pytest.raises(ValueError, match="features"):
            model.predict(np.zeros((2, 5)))

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            CohortClassifier().predict(np.zeros((1, 2)))

    def test_fit_is_deterministic(self, rng):
        X, y = blob_data(rng)
        a = CohortClassifier().fit(X, y)
        b = CohortClassifier().fit(X, y)
        assert np.array_equal(a.coef_, b.coef_)
        assert np.array_equal(a.intercept_, b.intercept_)
        assert np.array_equal(a.n_iter_, b.n_iter_)

    def test_plain_and_accelerated_reach_same_optimum(self, rng):
        X, y = blob_data(rng, n_per=20, spread=1.5)
        fast = CohortClassifier(tol=1e-9).fit(X, y)
        slow = CohortClassifier(tol=1e-9, accelerated=False).fit(X, y)
        np.testing.assert_allclose(fast.coef_, slow.coef_, atol=1e-5)
        np.testing.assert_allclose(fast.intercept_, slow.intercept_, atol=1e-5)
        assert np.all(slow.n_iter_ >= fast.n_iter_)

    def test_tie_break_prefers_first_class(self):
        label, scores = trivial_classifier().predict_one([1.0, 2.0])
        assert label == 0
        np.testing.assert_array_equal(scores, [0.5, 0.5, 0.5])

    def test_scaling_a_column_leaves_predictions_unchanged(self, rng):
        X, y = blob_data(rng, n_per=15)
        base = CohortClassifier().fit(X, y).predict_scores(X)
        X2 = X.copy()
        X2[:, 1] *= 1000.0
        rescaled = CohortClassifier().fit(X2, y).predict_scores(X2)
        np.testing.assert_allclose(rescaled, base, atol=1e-10)

    def test_param_validation(self, rng):
        X, y = blob_data(rng, n_per=3)
        with pytest.raises(ValueError, match="l2"):
            CohortClassifier(l2=-1.0).fit(X, y)
        with pytest.raises(ValueError, match="tol"):
            CohortClassifier(tol=0.0).fit(X, y)
        with pytest.raises(ValueError, match="max_iter"):
            CohortClassifier(max_iter=0).fit(X, y)


class TestLogisticGradient:
    def test_matches_central_differences(self, rng):
        h = 1e-5
        for _ in range(10):
            n, f = 12, 4
            X = rng.standard_normal((n, f))
            y = rng.integers(0, 2, n).astype(float)
            w = rng.standard_normal(f)
            b = float(rng.standard_normal())
            l2 = float(rng.uniform(0.1, 3.0))
            gw, gb = logistic_gradient(w, b, X, y, l2)
            numeric = np.empty(f + 1)
            for j in range(f):
                e = np.zeros(f)
                e[j] = h
                numeric[j] = (
                    logistic_objective(w + e, b, X, y, l2)
                    - logistic_objective(w - e, b, X, y, l2)
                ) / (2 * h)
            numeric[f] = (
                logistic_objective(w, b + h, X, y, l2)
                - logistic_objective(w, b - h, X, y, l2)
            ) / (2 * h)
            analytic = np.concatenate([gw, [gb]])
            rel = np.linalg.norm(analytic - numeric) / max(
                np.linalg.norm(analytic), 1e-12
            )
            assert rel <= 1e-6

    def test_objective_value_from_scratch(self):
        X = np.array([[1.0, 0.0], [0.0, 2.0]])
        y = np.array([1.0, 0.0])
        w = np.array([0.3, -0.2])
        b = 0.1
        z = X @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        expected = float(
            np.mean(-y * np.log(p) - (1 - y) * np.log(1 - p))
        ) + 0.5 * 0.5 / 2 * float(w @ w)
        assert logistic_objective(w, b, X, y, 0.5) == pytest.approx(
            expected, rel=1e-12
        )


class TestMoodRegressor:
    def test_matches_lstsq_oracle(self, rng):
        X = rng.standard_normal((30, 5))
        Y = rng.integers(1, 8, (30, 6))
        model = MoodRegressor(alpha=0.7).fit(X, Y)
        Xs = (X - model.scaler_mean_) / model.scaler_scale_
        for k in range(6):
            w, b = ridge_lstsq_oracle(Xs, Y[:, k].astype(float), 0.7)
            np.testing.assert_allclose(
                model.coef_[k], w, rtol=1e-8, atol=1e-10
            )
            assert model.intercept_[k] == pytest.approx(b, abs=1e-8)

    def test_normal_equation_stationarity(self, rng):
        for _ in range(5):
            X = rng.standard_normal((25, 4))
            Y = rng.integers(1, 8, (25, 6))
            alpha = float(rng.uniform(0.1, 5.0))
            model = MoodRegressor(alpha=alpha).fit(X, Y)
            Xs = (X - model.scaler_mean_) / model.scaler_scale_
            for k in range(6):
                r = Xs @ model.coef_[k] + model.intercept_[k] - Y[:, k]
                gw = Xs.T @ r + alpha * model.coef_[k]
                gb = r.sum()
                assert np.sqrt(gw @ gw + gb * gb) <= 1e-8

    def test_huge_alpha_collapses_to_target_mean(self, rng):
        X = rng.standard_normal((40, 3))
        Y = rng.integers(1, 8, (40, 6))
        model = MoodRegressor(alpha=1e12).fit(X, Y)
        raw = model.predict_raw(X)
        np.testing.assert_allclose(
            raw, np.broadcast_to(Y.mean(axis=0), raw.shape), atol=1e-6
        )

    def test_predict_rounds_and_clamps(self):
        model = MoodRegressor()
        model.scaler_mean_ = np.zeros(2)
        model.scaler_scale_ = np.ones(2)
        model.coef_ = np.zeros((6, 2))
        model.intercept_ = np.array([3.5, -0.2, 7.8, 2.5, 4.5, 6.49])
        preds = model.predict(np.zeros((1, 2)))
        assert preds.dtype.kind == "i"
        np.testing.assert_array_equal(preds[0], [4, 1, 7, 3, 5, 6])

    def test_scaling_a_column_leaves_predictions_unchanged(self, rng):
        X = rng.standard_normal((30, 4))
        Y = rng.integers(1, 8, (30, 6))
        base = MoodRegressor().fit(X, Y).predict_raw(X)
        X2 = X.copy()
        X2[:, 2] *= 1000.0
        rescaled = MoodRegressor().fit(X2, Y).predict_raw(X2)
        np.testing.assert_allclose(rescaled, base, atol=1e-10)

    def test_target_validation(self, rng):
        X = rng.standard_normal((5, 2))
        with pytest.raises(ValueError, match="shape"):
            MoodRegressor().fit(X, np.ones(5))
        with pytest.raises(ValueError, match="1..7"):
            MoodRegressor().fit(X, np.full((5, 6), 9))
        with pytest.raises(ValueError, match="alpha"):
            MoodRegressor(alpha=-0.5).fit(X, np.full((5, 6), 4))

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            MoodRegressor().predict(np.zeros((1, 2)))


class TestRounding:
    def test_half_away_from_zero(self):
        vals = np.array([3.5, -0.2, 7.8, 2.5, -3.5, 0.5, -0.5, 4.0])
        np.testing.assert_array_equal(
            round_half_away(vals), [4.0, -0.0, 8.0, 3.0, -4.0, 1.0, -1.0, 4.0]
        )


class TestBaselines:
    def _window(self):
        reports = tuple(
            MoodReport(
                seq=i,
                date=datetime.date(2014, 1, 1) + datetime.timedelta(days=i),
                scores=scores,
            )
            for i, scores in enumerate(
                [(1, 2, 3, 4, 5, 6), (7, 6, 5, 4, 3, 2), (1, 1, 1, 1, 1, 1)]
            )
        )
        return StreamWindow(
            participant_id="p0", cohort=Cohort.HEALTHY, reports=reports
        )

    def test_mean_baseline_uses_all_reports(self):
        feats = mean_baseline_features(self._window())
        np.testing.assert_allclose(feats, [3.0, 3.0, 3.0, 3.0, 3.0, 3.0])

    def test_persistence_is_last_report(self):
        assert persistence_predict(self._window()) == (1, 1, 1, 1, 1, 1)


class TestSerialization:
    def test_classifier_round_trip_is_exact(self, rng, tmp_path):
        X, y = blob_data(rng, n_per=12)
        model = CohortClassifier(l2=0.3).fit(X, y)
        path = tmp_path / "clf.json"
        save_model(model, path)
        loaded = load_model(path)
        assert isinstance(loaded, CohortClassifier)
        assert loaded.l2 == model.l2
        np.testing.assert_array_equal(
            loaded.predict_scores(X), model.predict_scores(X)
        )
        np.testing.assert_array_equal(loaded.predict(X), model.predict(X))

    def test_regressor_round_trip_is_exact(self, rng, tmp_path):
        X = rng.standard_normal((20, 3))
        Y = rng.integers(1, 8, (20, 6))
        model = MoodRegressor(alpha=2.5, cohort=Cohort.BIPOLAR).fit(X, Y)
        path = tmp_path / "reg.json"
        save_model(model, path)
        loaded = load_model(path)
        assert isinstance(loaded, MoodRegressor)
        assert loaded.cohort is Cohort.BIPOLAR
        np.testing.assert_array_equal(
            loaded.predict_raw(X), model.predict_raw(X)
        )

    def test_document_validation(self):
        with pytest.raises(ValueError, match="not a model"):
            model_from_dict({"format": "something-else"})
        with pytest.raises(ValueError, match="schema_version"):
            model_from_dict({"format": "moodsig-model", "schema_version": 99})
        with pytest.raises(ValueError, match="kind"):
            model_from_dict(
                {
                    "format": "moodsig-model",
                    "schema_version": 1,
                    "kind": "mystery",
                }
            )

    def test_unfitted_model_cannot_serialize(self):
        with pytest.raises(NotFittedError):
            model_to_dict(CohortClassifier())

    def test_classifier_document_lists_class_labels(self, rng):
        X, y = blob_data(rng, n_per=4)
        doc = model_to_dict(CohortClassifier().fit(X, y))
        assert doc["classes"] == ["bipolar", "borderline", "healthy"]
        assert doc["kind"] == "cohort-classifier"


class TestScaler:
    def test_constant_feature_gets_unit_scale(self):
        X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
        mean, scale = fit_scaler(X)
        np.testing.assert_allclose(mean, [2.0, 5.0])
        np.testing.assert_allclose(scale, [np.sqrt(2.0 / 3.0), 1.0])

    def test_get_set_params_round_trip(self):
        model = CohortClassifier(l2=0.7, tol=1e-4)
        params = model.get_params()
        clone = CohortClassifier().set_params(**params)
        assert clone.get_params() == params

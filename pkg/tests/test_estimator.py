"""Scikit-learn API wrappers."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.linear_model import LinearRegression

from hetreg import BayesianSplineRegression, SplineFeatures, gen_data, \
    make_truth


class TestSplineFeatures:
    def test_transform_partition_of_unity(self):
        X = np.linspace(0, 1, 40).reshape(-1, 1)
        features = SplineFeatures(q=3, n_intervals=5).fit(X)
        design = features.transform(X)
        assert design.shape == (40, 7)
        assert design.min() >= 0.0
        np.testing.assert_allclose(design.sum(axis=1), 1.0, atol=1e-12)

    def test_clone_and_params(self):
        features = SplineFeatures(q=2, n_intervals=9)
        cloned = clone(features)
        assert cloned.get_params() == {"q": 2, "n_intervals": 9}

    def test_rejects_out_of_range(self):
        features = SplineFeatures().fit(np.array([[0.5]]))
        with pytest.raises(ValueError):
            features.transform(np.array([[1.5]]))

    def test_feature_names(self):
        features = SplineFeatures(q=2, n_intervals=2).fit(np.array([[0.1]]))
        assert list(features.get_feature_names_out()) \
            == ["bspline_0", "bspline_1", "bspline_2"]

    def test_composes_in_pipeline(self):
        rng = np.random.default_rng(42)
        X = rng.uniform(0, 1, size=(200, 1))
        y = np.sin(2 * np.pi * X[:, 0]) + 0.1 * rng.standard_normal(200)
        pipeline = make_pipeline(SplineFeatures(q=4, n_intervals=6),
                                 LinearRegression())
        pipeline.fit(X, y)
        pred = pipeline.predict(X)
        assert np.sqrt(np.mean((pred - np.sin(2 * np.pi * X[:, 0])) ** 2)) \
            < 0.1


@pytest.fixture(scope="module")
def fitted():
    truth = make_truth(2.0, 2.0, v_min=0.2)
    data = gen_data(truth, 300, "fixed", np.random.default_rng(0))
    model = BayesianSplineRegression(n_iter=4000, burn_in=1500, thin=2,
                                     random_state=1)
    model.fit(data.x.reshape(-1, 1), data.y)
    return truth, data, model


class TestBayesianSplineRegression:
    def test_predict_tracks_truth(self, fitted):
        truth, data, model = fitted
        grid = np.linspace(0, 1, 101).reshape(-1, 1)
        rmse = np.sqrt(np.mean((model.predict(grid)
                                - truth.eta(grid[:, 0])) ** 2))
        assert rmse < 0.25

    def test_predict_variance_positive(self, fitted):
        _, _, model = fitted
        grid = np.linspace(0, 1, 11).reshape(-1, 1)
        assert np.all(model.predict_variance(grid) > 0)
        assert np.all(model.predict_std(grid) >= 0)

    def test_dimension_follows_schedule(self, fitted):
        _, _, model = fitted
        assert model.basis_.dim >= model.q

    def test_score_is_r2(self, fitted):
        _, data, model = fitted
        assert model.score(data.x.reshape(-1, 1), data.y) > 0.2

    def test_random_state_determinism(self):
        truth = make_truth(2.0, 2.0)
        data = gen_data(truth, 100, "fixed", np.random.default_rng(3))
        X = data.x.reshape(-1, 1)
        preds = []
        for _ in range(2):
            model = BayesianSplineRegression(n_iter=800, burn_in=300,
                                             random_state=7)
            preds.append(model.fit(X, data.y).predict(X))
        np.testing.assert_array_equal(preds[0], preds[1])

    def test_params_roundtrip(self):
        model = BayesianSplineRegression(q=3, n_basis=8, n_iter=500,
                                         burn_in=100)
        params = model.get_params()
        assert params["q"] == 3 and params["n_basis"] == 8
        cloned = clone(model)
        assert cloned.get_params() == params

    def test_rejects_multicolumn_input(self):
        model = BayesianSplineRegression(n_iter=300, burn_in=100)
        with pytest.raises(ValueError):
            model.fit(np.zeros((10, 2)), np.zeros(10))

"""Fit/predict pipeline, jackknife, and PC regression."""

import math

import numpy as np
import pytest

from spikepca import (
    DataMatrix,
    DegenerateRegressor,
    DimensionError,
    NotIdentifiable,
    debias_eigenvalue,
    fit,
    jackknife_shrinkage,
    pc_scores,
    pcr_fit,
    pcr_mse,
    pcr_predict,
    predict,
    sample_eigenvalue_limit,
    shrinkage_factor,
)
from spikepca.model import component_estimates
from spikepca.simulate import gen_two_spike, standard_normal, substream


@pytest.fixture(scope="module")
def two_spike_model():
    X = gen_two_spike(200, 1.0, seed=7)
    return X, fit(X, mode="none", k="auto")


class TestFit:
    def test_two_spike_design(self, two_spike_model):
        _, model = two_spike_model
        assert model.k_spikes == 2
        assert model.k == 2
        assert abs(model.shrinkage[0] - 0.88) < 0.05
        assert model.spectrum.converged

    def test_pure_noise_detects_no_spikes_most_of_the_time(self):
        # the top rescaled eigenvalue hovers at the detection edge, so a
        # boundary crossing happens in a low-double-digit share of draws
        hits = 0
        reps = 100
        for rep in range(reps):
            rng = substream(123, 4, rep)
            X = DataMatrix(standard_normal(rng, (200, 100)))
            model = fit(X, mode="none", k=1)
            hits += int(model.k_spikes == 0)
        assert hits >= 0.85 * reps

    def test_single_variable_chain(self):
        # p=1: the lone trace share is 1, so the rescaled eigenvalue is
        # exactly p=1, below the noise edge: classified as noise
        rng = np.random.default_rng(0)
        X = DataMatrix(3.0 * rng.standard_normal((1, 10)))
        model = fit(X, mode="none", k=1)
        assert model.spectrum.d_hat[0] == pytest.approx(1.0)
        assert model.spectrum.lambda_hat[0] == 1.0
        assert model.k_spikes == 0
        assert not model.identifiable[0]
        assert math.isnan(model.shrinkage[0])

    def test_auto_k_retains_at_least_one(self):
        rng = substream(9, 4, 0)
        X = DataMatrix(standard_normal(rng, (50, 30)))
        model = fit(X, mode="none", k="auto")
        assert model.k == max(model.k_spikes, 1)

    def test_estimates_recomputable_from_spectrum(self, two_spike_model):
        _, model = two_spike_model
        shrink, adjust, corr, angle, ident = component_estimates(
            model.spectrum, model.k
        )
        np.testing.assert_array_equal(shrink, model.shrinkage)
        np.testing.assert_array_equal(adjust, model.adjustment)
        np.testing.assert_array_equal(corr, model.score_corr)
        np.testing.assert_array_equal(angle, model.evec_angle)
        np.testing.assert_array_equal(ident, model.identifiable)

    def test_plugin_chain_consistency(self, two_spike_model):
        _, model = two_spike_model
        gamma = model.gamma
        for v in range(model.k_spikes):
            lam = debias_eigenvalue(model.spectrum.d_hat[v], gamma)
            assert model.spectrum.lambda_hat[v] == pytest.approx(lam, rel=1e-12)
            assert model.shrinkage[v] == pytest.approx(
                shrinkage_factor(lam, gamma), rel=1e-12
            )
            assert model.shrinkage[v] * model.adjustment[v] == pytest.approx(1.0)

    def test_too_few_samples(self):
        with pytest.raises(DimensionError):
            fit(DataMatrix(np.eye(2)), mode="none", k=1)

    def test_k_out_of_range(self):
        rng = np.random.default_rng(2)
        X = DataMatrix(rng.standard_normal((4, 6)))
        with pytest.raises(DimensionError):
            fit(X, mode="none", k=9)


class TestPredict:
    def test_training_round_trip_matches_sample_scores(self, two_spike_model):
        X, model = two_spike_model
        scores = pc_scores(X, model.eig)  # mode "none": standardized == raw
        pred = predict(model, X)
        np.testing.assert_allclose(pred.naive, scores.scores, atol=1e-10)

    def test_round_trip_with_standardization(self):
        rng = np.random.default_rng(5)
        X = DataMatrix(rng.standard_normal((30, 25)) * 3 + 1)
        model = fit(X, mode="center_scale", k=3)
        from spikepca import standardize

        Xs, _ = standardize(X, "center_scale")
        scores = pc_scores(Xs, model.eig)
        pred = predict(model, X)
        np.testing.assert_allclose(pred.naive, scores.scores, atol=1e-10)

    def test_zero_column_gives_zero_scores(self, two_spike_model):
        _, model = two_spike_model
        pred = predict(model, np.zeros((model.p, 1)))
        np.testing.assert_array_equal(pred.naive, 0.0)
        np.testing.assert_array_equal(pred.adjusted, 0.0)

    def test_adjustment_consistency(self, two_spike_model):
        X, model = two_spike_model
        rng = substream(40, 1, 0)
        new = 2.0 * standard_normal(rng, (model.p, 5))
        pred = predict(model, new)
        gamma = model.gamma
        for v in range(model.k):
            if not pred.identifiable[v]:
                np.testing.assert_array_equal(pred.adjusted[v], pred.naive[v])
                continue
            lam = debias_eigenvalue(model.spectrum.d_hat[v], gamma)
            factor = (lam + gamma - 1) / (lam - 1)
            np.testing.assert_allclose(
                pred.adjusted[v], pred.naive[v] * factor, rtol=1e-12
            )

    def test_dimension_mismatch(self, two_spike_model):
        _, model = two_spike_model
        with pytest.raises(DimensionError):
            predict(model, np.zeros((model.p + 1, 2)))

    def test_shrinkage_direction(self, two_spike_model):
        # out-of-sample squared scores are smaller than in-sample ones
        X, model = two_spike_model
        test = gen_two_spike(200, 1.0, seed=8)
        train_scores = predict(model, X).naive
        test_scores = predict(model, test).naive
        for v in range(2):
            assert np.mean(test_scores[v] ** 2) < np.mean(train_scores[v] ** 2)


class TestScaleEquivariance:
    def test_fit_of_scaled_matrix(self):
        X = gen_two_spike(100, 1.0, seed=13)
        c = 4.0
        base = fit(X, mode="none", k=2)
        scaled = fit(DataMatrix(c * X.values), mode="none", k=2)
        assert scaled.k_spikes == base.k_spikes
        np.testing.assert_allclose(scaled.eig.U, base.eig.U, atol=1e-8)
        np.testing.assert_allclose(
            scaled.spectrum.lambda_hat, base.spectrum.lambda_hat, rtol=1e-8
        )
        np.testing.assert_allclose(scaled.shrinkage, base.shrinkage, rtol=1e-8)
        pred_base = predict(base, X)
        pred_scaled = predict(scaled, DataMatrix(c * X.values))
        np.testing.assert_allclose(
            pred_scaled.naive, c * pred_base.naive, rtol=1e-8
        )
        np.testing.assert_allclose(
            pred_scaled.adjusted, c * pred_base.adjusted, rtol=1e-8
        )


class TestJackknife:
    def test_agrees_with_plugin_on_two_spike(self):
        X = gen_two_spike(100, 1.0, seed=3)
        model = fit(X, mode="none", k=1)
        estimate = jackknife_shrinkage(X, "none", 1)
        assert estimate.excluded == 0
        assert estimate.used == 100
        assert abs(estimate.value - model.shrinkage[0]) <= 0.08

    def test_minimal_input_runs(self):
        # n=4 is the smallest legal input; the spike row must dominate the
        # trace for the rescaled top eigenvalue to clear the noise edge
        rng = np.random.default_rng(4)
        X = DataMatrix(np.vstack([20.0 * rng.standard_normal(4),
                                  0.5 * rng.standard_normal((11, 4))]))
        estimate = jackknife_shrinkage(X, "none", 1)
        assert math.isfinite(estimate.value)
        assert estimate.used + estimate.excluded == 4

    def test_too_few_samples(self):
        X = DataMatrix(np.ones((2, 3)) + np.eye(2, 3))
        with pytest.raises(DimensionError):
            jackknife_shrinkage(X, "none", 1)

    def test_non_spike_component_rejected(self):
        rng = substream(11, 4, 0)
        X = DataMatrix(standard_normal(rng, (40, 20)))
        model = fit(X, mode="none", k="auto")
        bad = model.k_spikes + min(40, 20)  # definitely beyond the spikes
        with pytest.raises((NotIdentifiable, DimensionError)):
            jackknife_shrinkage(X, "none", bad)


class TestPcRegression:
    def test_exact_linear_relation(self):
        s = np.array([1.0, 2.0, 3.0, 4.0])
        coeffs = pcr_fit(s, 2 * s)
        assert coeffs[0] == pytest.approx(0.0, abs=1e-12)
        assert coeffs[1] == pytest.approx(2.0, rel=1e-12)
        assert pcr_mse(2 * s, pcr_predict(coeffs, s)) == pytest.approx(0.0, abs=1e-24)

    def test_three_point_hand_ols(self):
        # x = (0, 1, 2), y = (1, 2, 4): slope 3/2, intercept 5/6
        s = np.array([0.0, 1.0, 2.0])
        y = np.array([1.0, 2.0, 4.0])
        intercept, slope = pcr_fit(s, y)
        assert slope == pytest.approx(1.5, rel=1e-12)
        assert intercept == pytest.approx(5 / 6, rel=1e-12)

    def test_constant_scores_rejected(self):
        with pytest.raises(DegenerateRegressor):
            pcr_fit(np.ones(5), np.arange(5.0))

    def test_too_short(self):
        with pytest.raises(DimensionError):
            pcr_fit(np.array([1.0, 2.0]), np.array([1.0, 2.0]))

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import logit_corpus
from distress_lab.errors import (
    DimensionMismatch,
    InvalidFeature,
    PerfectSeparation,
    SingleClassDataset,
)
from distress_lab.finstat import Dataset, Label, RatioVector, build_dataset, parse_statements
from distress_lab.logit import (
    LogitSpec,
    classify_cutoff,
    coefficient_inference,
    design_matrix,
    fit_logit,
    fit_report,
    fit_statistics,
    inference,
    likelihood_statistics,
    log_likelihood,
    predict_prob,
    render_table,
    restricted_log_likelihood,
    score_vector,
)
from distress_lab.synth import generate_synthetic
from oracles import irls_logit

REFERENCE_BETA = (-0.828685, 0.007475, -1.539466)
TRUE_BETA = (-0.8, 0.0075, -1.5)
INTERCEPT_ONLY = LogitSpec(feature_names=())


def labels_dataset(n, n1, seed=0):
    y = np.r_[np.ones(n1), np.zeros(n - n1)].astype(int)
    X = np.random.default_rng(seed).normal(size=(n, 1))
    return Dataset.from_arrays(["I1"], X, y)


def test_balanced_intercept_only():
    fit = fit_logit(labels_dataset(50, 25), INTERCEPT_ONLY)
    assert fit.beta == pytest.approx([0.0], abs=1e-12)
    assert fit.log_likelihood == pytest.approx(50 * math.log(0.5), abs=1e-12)


def test_reference_restricted_likelihood():
    fit = fit_logit(labels_dataset(55, 18), INTERCEPT_ONLY)
    # 18 ln(18/55) + 37 ln(37/55), 30-digit evaluation
    assert fit.log_likelihood == pytest.approx(-34.7726707778186, abs=1e-10)
    assert restricted_log_likelihood(55, 18) == pytest.approx(-34.77267, abs=1e-4)
    assert fit.restricted_log_likelihood == pytest.approx(fit.log_likelihood, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_recovers_generating_coefficients(seed):
    ds = logit_corpus(seed)
    fit = fit_logit(ds, LogitSpec(("I1", "I7")))
    assert np.all(np.abs(fit.beta - TRUE_BETA) < 3 * fit.std_errors)
    np.testing.assert_allclose(fit.beta, irls_logit(design_matrix(ds, fit.spec), ds.y), atol=1e-6)


def test_mean_fitted_probability_equals_share():
    fit = fit_logit(logit_corpus(11), LogitSpec(("I1", "I7")))
    assert fit.fitted.mean() == pytest.approx(fit.n_dep1 / fit.n_obs, abs=1e-9)


def test_history_never_decreases():
    fit = fit_logit(logit_corpus(12), LogitSpec(("I1", "I7")))
    assert all(b >= a for a, b in zip(fit.history, fit.history[1:]))
    assert fit.converged and fit.iterations < 30


def test_rescaled_covariate_rescales_coefficient():
    ds = logit_corpus(13)
    X = ds.matrix(["I1", "I7"])
    scaled = Dataset.from_arrays(["I1", "I7"], X * [1.0, 0.01], ds.y)
    a = fit_logit(ds, LogitSpec(("I1", "I7")))
    b = fit_logit(scaled, LogitSpec(("I1", "I7")))
    np.testing.assert_allclose(b.beta, a.beta * [1.0, 100.0, 1.0], rtol=1e-7)
    assert b.log_likelihood == pytest.approx(a.log_likelihood, abs=1e-9)


def test_gradient_matches_finite_differences():
    ds = logit_corpus(14)
    spec = LogitSpec(("I1", "I7"))
    rng = np.random.default_rng(0)
    for _ in range(20):
        beta = np.array(TRUE_BETA) + rng.normal(scale=[0.3, 0.003, 0.5])
        g = score_vector(beta, ds, spec)
        for j in range(3):
            h = 1e-6 * max(1.0, abs(beta[j]))
            e = np.zeros(3)
            e[j] = h
            fd = (log_likelihood(beta + e, ds, spec) - log_likelihood(beta - e, ds, spec)) / (2 * h)
            assert fd == pytest.approx(g[j], rel=1e-5, abs=1e-6)


def test_large_scale_covariate_converges():
    # leverage in percent reaches the hundreds; the raw score then cannot drop below 1e-8
    recs = parse_statements(generate_synthetic(8))
    fit = fit_logit(build_dataset(recs, ["I1", "I7"]), LogitSpec(("I1", "I7")))
    assert fit.converged and fit.iterations < 30


def test_perfect_separation():
    X = np.arange(20.0)[:, None]
    ds = Dataset.from_arrays(["I1"], X, (X[:, 0] > 9.5).astype(int))
    with pytest.raises(PerfectSeparation):
        fit_logit(ds, LogitSpec(("I1",)))


def test_single_class():
    with pytest.raises(SingleClassDataset):
        fit_logit(labels_dataset(10, 0), LogitSpec(("I1",)))


# --- likelihood --------------------------------------------------------------------

def test_zero_beta_likelihood():
    ds = labels_dataset(30, 7)
    assert log_likelihood([0.0, 0.0], ds, LogitSpec(("I1",))) == pytest.approx(30 * math.log(0.5))


def test_single_row_likelihood():
    ds = Dataset.from_arrays(["I1"], [[0.0]], [1])
    assert log_likelihood([3.0, 0.0], ds, LogitSpec(("I1",))) == pytest.approx(math.log(0.5))


@pytest.mark.parametrize("eta, y, expected", [
    (700.0, 1, -math.log1p(math.exp(-700.0))),
    (700.0, 0, -700.0),
    (-700.0, 1, -700.0),
    (-700.0, 0, -math.log1p(math.exp(-700.0))),
])
def test_extreme_linear_predictor_is_finite(eta, y, expected):
    ds = Dataset.from_arrays(["I1"], [[1.0]], [y])
    ll = log_likelihood([eta], ds, LogitSpec(("I1",), include_intercept=False))
    assert math.isfinite(ll)
    assert ll == pytest.approx(expected, rel=1e-15, abs=1e-300)


def test_likelihood_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        log_likelihood([0.0], labels_dataset(10, 5), LogitSpec(("I1",)))


# --- prediction ----------------------------------------------------------------

def rv(i1, i7):
    return RatioVector.from_mapping({"I1": i1, "I7": i7})


def test_reference_coefficients_at_origin():
    # 1 / (1 + e^1.539466), 40-digit evaluation
    p = predict_prob(REFERENCE_BETA, rv(0.0, 0.0), LogitSpec())
    assert p == pytest.approx(0.176612916073466, abs=1e-12)
    assert p == pytest.approx(0.1766, abs=5e-5)


def test_reference_coefficients_far_point():
    # eta = -5.309641, 40-digit evaluation gives 0.00492183
    p = predict_prob(REFERENCE_BETA, rv(5.0, 50.0), LogitSpec())
    assert p == pytest.approx(0.004921829433443767, rel=1e-12)


def test_zero_coefficients_predict_half():
    assert predict_prob([0.0, 0.0, 0.0], rv(3.0, -4.0), LogitSpec()) == 0.5


def test_predict_errors():
    with pytest.raises(DimensionMismatch):
        predict_prob([0.0, 0.0], rv(0.0, 0.0), LogitSpec())
    bad = RatioVector(tuple([0.0] * 14), tuple([False] + [True] * 13), ())
    with pytest.raises(InvalidFeature):
        predict_prob(REFERENCE_BETA, bad, LogitSpec())


@given(st.floats(-50, 50), st.floats(-500, 500))
def test_probability_in_open_unit_interval(i1, i7):
    p = predict_prob(REFERENCE_BETA, rv(i1, i7), LogitSpec())
    assert 0.0 <= p <= 1.0


# --- inference and statistics ------------------------------------------------------

def test_reference_coefficient_inference():
    z, p = coefficient_inference([-0.828685, 0.007475], [0.311621, 0.004436])
    assert z == pytest.approx([-2.659270, 1.685006], abs=1e-4)
    assert p == pytest.approx([0.0078, 0.0920], abs=5e-4)


def test_null_coefficient_inference():
    z, p = coefficient_inference([0.0], [0.3])
    assert z[0] == 0.0 and p[0] == 1.0


def test_reference_statistics_identities():
    s = likelihood_statistics(-9.435804, -34.77267, 55, 3, n_dep1=18)
    expected = dict(
        mcfadden_r2=0.728643, lr_statistic=50.67373, aic=0.452211, schwarz=0.561702,
        hannan_quinn=0.494552, avg_log_likelihood=-0.171560, mean_dep=0.327273, sd_dep=0.473542,
    )
    for key, value in expected.items():
        assert s[key] == pytest.approx(value, abs=1e-4), key
    assert s["lr_df"] == 2
    assert s["sd_dep"] == pytest.approx(0.473542420742244, abs=1e-12)


def test_null_model_statistics():
    s = likelihood_statistics(-20.0, -20.0, 40, 1)
    assert s["mcfadden_r2"] == 0.0 and s["lr_statistic"] == 0.0


def test_fit_statistics_from_fit():
    fit = fit_logit(logit_corpus(15), LogitSpec(("I1", "I7")))
    st_ = fit_statistics(fit)
    assert 0.0 < st_.mcfadden_r2 < 1.0
    assert st_.lr_statistic == pytest.approx(2 * (fit.log_likelihood - fit.restricted_log_likelihood))
    assert st_.z_stats == pytest.approx(inference(fit).z_stats)
    assert st_.lr_df == 2


def test_report_layout():
    fit = fit_logit(logit_corpus(16), LogitSpec(("I1", "I7")))
    rep = fit_report(fit)
    assert [r["variable"] for r in rep["coefficients"]] == ["I1", "I7", "C"]
    text = render_table(rep)
    assert "McFadden R-squared" in text and "Restr. log likelihood" in text


# --- cutoff ------------------------------------------------------------------------

@pytest.mark.parametrize("prob, cutoff, label", [
    (0.8, 0.5, Label.DISTRESSED),
    (0.5, 0.5, Label.DISTRESSED),
    (0.1766, 0.5, Label.HEALTHY),
    (0.1766, 0.1, Label.DISTRESSED),
])
def test_cutoff(prob, cutoff, label):
    assert classify_cutoff(prob, cutoff) is label


def test_cutoff_range():
    with pytest.raises(ValueError):
        classify_cutoff(1.2, 0.5)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import exact_normal_equations

from regimelens.dataset import ModelSpec, Term, design_matrix
from regimelens.errors import InsufficientDataError, SingularMatrixError
from regimelens.linmodel import fit_model, fit_ols, stars
from regimelens.models import D2004, D2008, DQUOTA, INTERCEPT, PMIN_1, QUOTA_0, QUOTA_1, get_spec
from regimelens.numstat import student_t_sf, t_critical
from regimelens.synth import GeneratorConfig, synthesize_series


def _random_problem(rng, n, k, intercept=True):
    X = rng.standard_normal((n, k))
    if intercept:
        X[:, 0] = 1.0
    beta = rng.standard_normal(k) * 3
    y = X @ beta + rng.standard_normal(n)
    return X, y


def test_exact_line():
    x = np.arange(5.0)
    X = np.column_stack([np.ones(5), x])
    fit = fit_ols(X, 2 + 3 * x, [INTERCEPT, PMIN_1])
    assert fit.params == pytest.approx([2, 3], rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(fit.residuals)) < 1e-12


def test_random_problem_against_exact_oracle():
    rng = np.random.default_rng(30)
    X, y = _random_problem(rng, 30, 4)
    expected, r2 = exact_normal_equations(X, y)
    fit = fit_ols(X, y)
    np.testing.assert_allclose(fit.params, expected, rtol=1e-8)
    assert fit.r_squared == pytest.approx(r2, abs=1e-8)


def test_inference_invariants():
    rng = np.random.default_rng(8)
    X, y = _random_problem(rng, 40, 5)
    fit = fit_ols(X, y, level=0.9)
    assert fit.df_resid == 35
    assert np.array_equal(fit.tvalues, fit.params / fit.bse)
    for k in range(5):
        assert fit.pvalues[k] == student_t_sf(fit.tvalues[k], 35)
    half = t_critical(0.1, 35) * fit.bse
    np.testing.assert_allclose(fit.conf_int[:, 0], fit.params - half)
    np.testing.assert_allclose(fit.conf_int[:, 1], fit.params + half)
    assert abs(fit.residuals.sum()) <= 1e-8 * np.abs(y).max()
    # orthogonality
    assert np.max(np.abs(X.T @ fit.residuals)) <= 1e-8 * np.linalg.norm(y)


def test_covariance_matches_textbook_formula():
    rng = np.random.default_rng(9)
    X, y = _random_problem(rng, 25, 3)
    fit = fit_ols(X, y)
    cov = fit.scale * np.linalg.inv(X.T @ X)
    np.testing.assert_allclose(fit.bse, np.sqrt(np.diag(cov)), rtol=1e-10)


def test_r2_is_squared_correlation():
    rng = np.random.default_rng(10)
    X, y = _random_problem(rng, 50, 4)
    fit = fit_ols(X, y)
    corr = np.corrcoef(fit.fitted, y)[0, 1]
    assert fit.r_squared == pytest.approx(corr**2, abs=1e-10)


def test_uncentered_r2_without_intercept():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((20, 2)) + 3
    y = X @ [1.0, 2.0] + rng.standard_normal(20)
    fit = fit_ols(X, y)
    assert fit.r_squared == pytest.approx(1 - fit.rss / (y @ y))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(8, 40), st.integers(1, 5))
def test_extra_column_never_lowers_r2(seed, n, k):
    rng = np.random.default_rng(seed)
    X, y = _random_problem(rng, n, k)
    if n <= k + 1:
        return
    bigger = np.column_stack([X, rng.standard_normal(n)])
    assert fit_ols(bigger, y).r_squared >= fit_ols(X, y).r_squared - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(1e-3, 1e3))
def test_scale_equivariance(seed, lam):
    rng = np.random.default_rng(seed)
    X, y = _random_problem(rng, 30, 4)
    a, b = fit_ols(X, y), fit_ols(X, lam * y)
    np.testing.assert_allclose(b.params, lam * a.params, rtol=1e-10, atol=1e-10 * lam)
    np.testing.assert_allclose(b.bse, lam * a.bse, rtol=1e-10)
    np.testing.assert_allclose(b.residuals, lam * a.residuals, rtol=1e-6, atol=1e-10 * lam)
    np.testing.assert_allclose(b.tvalues, a.tvalues, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(b.pvalues, a.pvalues, rtol=1e-8, atol=1e-12)
    assert b.r_squared == pytest.approx(a.r_squared, rel=1e-10)


def test_singular_column_named():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((20, 3))
    X[:, 2] = 2 * X[:, 0] - X[:, 1]
    with pytest.raises(SingularMatrixError) as err:
        fit_ols(X, rng.standard_normal(20), ["a", "b", "c"])
    assert err.value.column == "c"


def test_insufficient_rows():
    with pytest.raises(InsufficientDataError):
        fit_ols(np.ones((3, 3)), np.ones(3))


def test_star_thresholds():
    assert [stars(p) for p in (0.0005, 0.005, 0.03, 0.07, 0.2)] == ["***", "**", "*", "*", ""]


def test_fit_model_exact_recovery_m6():
    cfg = GeneratorConfig(spec=get_spec("m6"))
    fit = fit_model(synthesize_series(cfg), get_spec("m6"))
    for term, value in cfg.coefficients.items():
        assert fit.coefficients[term] == pytest.approx(value, rel=1e-8)
    assert fit.months[0].month == 2  # first row lost to the lag


def test_fit_model_singular_dummy_window():
    series = synthesize_series(GeneratorConfig(spec=get_spec("m3"), noise_sd=500.0))
    start = series.index_of("2005-01")
    stop = series.index_of("2006-12") + 1
    with pytest.raises(SingularMatrixError) as err:
        fit_model(series, get_spec("m3"), start, stop)
    assert err.value.column in (D2004, D2008)


def test_model10_reproduces_model4_when_quota_coefficients_cancel():
    coefs = {INTERCEPT: 8000.0, PMIN_1: 0.75, QUOTA_0: -2.2, QUOTA_1: 2.2, D2008: -3000.0}
    series = synthesize_series(GeneratorConfig(spec=get_spec("m4"), coefficients=coefs, seed=21))
    f4 = fit_model(series, get_spec("m4"))
    f10 = fit_model(series, get_spec("m10"))
    np.testing.assert_allclose(f10.fitted, f4.fitted, rtol=1e-9)
    assert f10.coefficients[DQUOTA] == pytest.approx(-2.2, rel=1e-8)


def test_design_singular_flag_consumed():
    series = synthesize_series(GeneratorConfig())
    spec = ModelSpec((INTERCEPT, PMIN_1, Term.dummy("2010-01")))
    assert design_matrix(series, spec).singular_dummies
    with pytest.raises(SingularMatrixError, match="2010-01"):
        fit_model(series, spec)


def test_serialization_round_trip():
    series = synthesize_series(GeneratorConfig(spec=get_spec("m4"), noise_sd=900.0, seed=2))
    fit = fit_model(series, get_spec("m4"))
    import json

    data = json.loads(fit.to_json())
    assert [t["term"] for t in data["terms"]] == [t.label for t in get_spec("m4").terms]
    assert data["terms"][1]["estimate"] == fit.params[1]
    table = fit.to_table()
    assert "D[2008-01]" in table and "R^2" in table

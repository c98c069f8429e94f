import math

import numpy as np
import pytest
from scipy import integrate, stats

from cdem import chi2_sf, fit_cdem, fit_independence, fit_qi, g2, pearson_chi2, test_df
from cdem.errors import FitError
from cdem.fit import Model, log_likelihood, test_statistics

ONES = np.ones((3, 3), dtype=int)


def margins_error(x, m, diagonal):
    a = np.asarray(x, dtype=float)
    errs = [np.abs(m.sum(axis=1) - a.sum(axis=1)).max(), np.abs(m.sum(axis=0) - a.sum(axis=0)).max()]
    if diagonal:
        d = min(a.shape)
        errs.append(abs(np.trace(m[:d, :d]) - np.trace(a[:d, :d])))
    return max(errs)


def test_independence_examples():
    assert np.array_equal(fit_independence(ONES).expected, np.ones((3, 3)))
    assert np.array_equal(fit_independence([[2, 0], [0, 2]]).expected, np.ones((2, 2)))
    with pytest.raises(ValueError):
        fit_independence(np.zeros((2, 2), dtype=int))


def test_qi_all_ones():
    f = fit_qi(ONES)
    assert f.model is Model.QI and f.converged
    assert np.array_equal(np.diag(f.expected), [1.0, 1.0, 1.0])
    assert np.allclose(f.expected, 1.0, atol=1e-12)


def test_qi_table1_diagonal(backend, table1):
    f = fit_qi(table1)
    assert f.converged
    assert np.diag(f.expected).tolist() == [22.0, 7.0, 36.0, 10.0]


def test_qi_zero_off_diagonal_row():
    x = [[3, 0, 0], [1, 2, 4], [2, 5, 1]]
    f = fit_qi(x)
    assert f.converged
    assert f.expected[0, 1] == 0.0 and f.expected[0, 2] == 0.0
    assert f.expected[0, 0] == 3.0


def test_qi_zero_diagonal_cell():
    x = [[0, 3, 1], [2, 4, 1], [1, 2, 5]]
    f = fit_qi(x)
    assert f.expected[0, 0] == 0.0


def test_cdem_all_ones():
    f = fit_cdem(ONES)
    assert f.model is Model.CDEM and f.converged
    assert np.allclose(f.expected, 1.0, atol=1e-10)


def test_cdem_table1(backend, table1):
    q, c = fit_qi(table1), fit_cdem(table1)
    assert c.converged
    assert g2(table1, q, c) == pytest.approx(13.5505, abs=5e-4)


def test_cdem_table2(backend, table2):
    q, c = fit_qi(table2), fit_cdem(table2)
    assert g2(table2, q, c) == pytest.approx(6.18159, abs=5e-4)


def test_table3_pearson(table3):
    assert pearson_chi2(table3, fit_independence(table3)) == pytest.approx(115.6, abs=0.05)
    assert pearson_chi2(table3, fit_cdem(table3)) == pytest.approx(111.5, abs=0.05)


def test_nonconvergence_is_flagged(table1):
    f = fit_cdem(table1, max_iter=2)
    assert not f.converged
    assert f.iterations == 2
    assert f.max_margin_error > 1e-8


def test_g2_identical_fits_is_zero(table1):
    c = fit_cdem(table1)
    assert g2(table1, c, c) == 0.0


def test_g2_support_error():
    x = np.array([[1, 1], [1, 1]])
    zero = fit_independence(x)
    object.__setattr__(zero, "expected", np.zeros((2, 2)))
    with pytest.raises(FitError):
        g2(x, zero, fit_cdem(x))
    with pytest.raises(FitError):
        pearson_chi2(x, zero)


def test_pearson_perfect_fit():
    assert pearson_chi2(ONES, fit_independence(ONES)) == 0.0


@pytest.mark.parametrize(
    "value, df, expected, tol",
    [(13.5505, 3, 0.003585, 1e-6), (6.18159, 3, 0.1031, 1e-4), (6.18839, 11, 0.860503, 1e-6)],
)
def test_chi2_sf_examples(value, df, expected, tol):
    assert chi2_sf(value, df) == pytest.approx(expected, abs=tol)


def test_chi2_sf_edges():
    for k in (1, 3, 11):
        assert chi2_sf(0.0, k) == 1.0
        assert chi2_sf(math.inf, k) == 0.0
    with pytest.raises(ValueError):
        chi2_sf(-1.0, 3)
    with pytest.raises(ValueError):
        chi2_sf(1.0, 0)


@pytest.mark.parametrize("df", range(1, 16))
def test_chi2_sf_against_quadrature(df):
    pdf = stats.chi2(df).pdf
    for value in (0.05, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 40.0):
        tail, _ = integrate.quad(pdf, value, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
        assert abs(chi2_sf(value, df) - tail) <= 1e-8


@pytest.mark.parametrize("R, C, df", [(4, 4, 3), (12, 12, 11), (2, 2, 1), (3, 5, 2)])
def test_degrees_of_freedom(R, C, df):
    assert test_df(R, C) == df


def test_degrees_of_freedom_too_small():
    with pytest.raises(ValueError):
        test_df(1, 4)


def test_statistics_bundle(table1):
    s = test_statistics(table1)
    assert s.df == 3
    assert s.asymptotic_p == chi2_sf(s.g2, 3)
    assert s.pearson == pearson_chi2(table1, fit_cdem(table1))


def random_tables(count, seed, positive):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        R, C = rng.integers(2, 7, size=2)
        if positive:
            # every cell positive, so both MLEs are interior
            n = int(rng.integers(R * C, 201))
            yield 1 + rng.multinomial(n - R * C, np.full(R * C, 1 / (R * C))).reshape(R, C)
        else:
            # uneven cell probabilities give zeros and skewed margins
            n = int(rng.integers(1, 201))
            yield rng.multinomial(n, rng.dirichlet(np.full(R * C, 0.7))).reshape(R, C)


def _fit_all(tables):
    return [(x, fit_qi(x), fit_cdem(x)) for x in tables]


@pytest.fixture(scope="module")
def fitted():
    return _fit_all(random_tables(500, 2024, positive=True))


@pytest.fixture(scope="module")
def sparse_fitted():
    return _fit_all(random_tables(500, 2025, positive=False))


def test_margins_on_random_tables(fitted):
    for x, q, c in fitted:
        assert c.converged and q.converged
        assert margins_error(x, c.expected, diagonal=True) <= 1e-8
        assert abs(c.expected.sum() - x.sum()) <= 1e-8
        assert margins_error(x, q.expected, diagonal=False) <= 1e-8


def test_sparse_tables_converge_or_are_flagged(sparse_fitted):
    # zeros can put the MLE on the boundary, where IPF is sublinear
    for x, q, c in sparse_fitted:
        if c.converged:
            assert margins_error(x, c.expected, diagonal=True) <= 1e-8
        else:
            assert c.iterations == 10_000 and c.max_margin_error > 1e-8
        if q.converged:
            assert margins_error(x, q.expected, diagonal=False) <= 1e-8
    assert sum(c.converged and q.converged for _, q, c in sparse_fitted) > 400


def test_qi_diagonal_exact_on_random_tables(fitted, sparse_fitted):
    for x, q, _ in fitted + sparse_fitted:
        d = min(x.shape)
        assert np.array_equal(np.diag(q.expected)[:d], np.diag(x)[:d].astype(float))


def test_g2_non_negative_and_nested(fitted, sparse_fitted):
    for x, q, c in fitted + sparse_fitted:
        assert g2(x, q, c) >= -1e-9
        assert log_likelihood(x, c) <= log_likelihood(x, q) + 1e-9


def test_fiber_members_share_fitted_statistics():
    x = np.array([[3, 1, 0], [1, 2, 2], [0, 2, 4]])
    z = np.array([[1, 0, -1], [0, -1, 1], [-1, 1, 0]])
    y = x - z
    a, b = fit_cdem(x).expected, fit_cdem(y).expected
    assert np.allclose(a.sum(axis=0), b.sum(axis=0), atol=1e-8)
    assert np.allclose(a.sum(axis=1), b.sum(axis=1), atol=1e-8)
    assert np.trace(a) == pytest.approx(np.trace(b), abs=1e-8)
    # the CDEM fit depends on the data only through the statistic
    assert np.allclose(a, b, atol=1e-8)


def _glm_design(R, C, model):
    rows = []
    for i in range(R):
        for j in range(C):
            r = [1.0] + [float(i == a) for a in range(1, R)] + [float(j == b) for b in range(1, C)]
            if model == "cdem":
                r.append(float(i == j))
            else:
                r += [float(i == j == k) for k in range(min(R, C))]
            rows.append(r)
    return np.array(rows)


@pytest.mark.parametrize("name", ["table1", "table2", "table3"])
def test_g2_matches_poisson_glm(name, request):
    # independent oracle: Newton-fitted Poisson log-linear models
    sm = pytest.importorskip("statsmodels.api")
    x = request.getfixturevalue(name)
    R, C = x.shape
    y = x.cells.ravel().astype(float)
    dev = {
        m: sm.GLM(y, _glm_design(R, C, m), family=sm.families.Poisson()).fit(tol=1e-12, maxiter=1000).deviance
        for m in ("cdem", "qi")
    }
    assert g2(x, fit_qi(x), fit_cdem(x)) == pytest.approx(dev["cdem"] - dev["qi"], abs=1e-5)

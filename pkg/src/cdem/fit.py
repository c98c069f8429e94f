"""Maximum likelihood fits by iterative proportional fitting (IPF).

Three log-linear models for an R x C table are supported:

* independence, in closed form ``x_{i+} x_{+j} / n``;
* quasi-independence (QI), where every diagonal cell has its own
  parameter and is therefore fitted exactly;
* the common diagonal effect model (CDEM), where the diagonal cells
  share one extra parameter, so the fitted diagonal *sum* matches.

The CDEM cycle starts from the uniform table ``n / (R C)`` and repeats:
row scaling to ``x_{i+}``, column scaling to ``x_{+j}``, then scaling the
diagonal by ``x_S / m_S`` and the off-diagonal cells by
``(n - x_S) / (n - m_S)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import _backend
from .errors import FitError
from .table import Table, TableLike, _cells

__all__ = [
    "Model",
    "FitResult",
    "TestStatistics",
    "fit_independence",
    "fit_qi",
    "fit_cdem",
    "g2",
    "pearson_chi2",
    "log_likelihood",
    "chi2_sf",
    "test_df",
    "test_statistics",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000


class Model(enum.Enum):
    INDEPENDENCE = "INDEPENDENCE"
    QI = "QI"
    CDEM = "CDEM"


@dataclass(frozen=True)
class FitResult:
    model: Model
    expected: np.ndarray
    iterations: int
    converged: bool
    max_margin_error: float


@dataclass(frozen=True)
class TestStatistics:
    g2: float
    pearson: float
    df: int
    asymptotic_p: float


def _observed(x: TableLike) -> np.ndarray:
    a = _cells(x)
    if a.sum() <= 0:
        raise ValueError("cannot fit a table with zero total")
    return np.ascontiguousarray(a, dtype=np.int64)


def fit_independence(x: TableLike) -> FitResult:
    a = _observed(x).astype(float)
    m = np.outer(a.sum(axis=1), a.sum(axis=0)) / a.sum()
    err = max(np.abs(m.sum(axis=1) - a.sum(axis=1)).max(), np.abs(m.sum(axis=0) - a.sum(axis=0)).max())
    m.setflags(write=False)
    return FitResult(Model.INDEPENDENCE, m, 0, True, float(err))


def _run(kernel, model: Model, x: TableLike, tol: float, max_iter: int) -> FitResult:
    a = _observed(x)
    m = np.empty(a.shape, dtype=float)
    it, err = kernel(a, float(tol), int(max_iter), m)
    m.setflags(write=False)
    return FitResult(model, m, int(it), bool(err <= tol), float(err))


def fit_qi(x: TableLike, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FitResult:
    """Quasi-independence fit; diagonal cells equal the observed counts exactly.

    Rows or columns whose off-diagonal total is zero stay zero.  If the
    margins are not matched within ``tol`` after ``max_iter`` cycles the
    result is returned with ``converged=False``.
    """
    return _run(_backend.ipf_qi, Model.QI, x, tol, max_iter)


def fit_cdem(x: TableLike, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> FitResult:
    """Common diagonal effect fit: matches row sums, column sums and the diagonal sum."""
    return _run(_backend.ipf_cdem, Model.CDEM, x, tol, max_iter)


def _check_support(a: np.ndarray, m: np.ndarray) -> None:
    if np.any((a > 0) & (m <= 0)):
        raise FitError("a positive count has fitted value zero")


def g2(x: TableLike, qi: FitResult, cdem: FitResult) -> float:
    """Likelihood-ratio statistic ``2 sum x log(m_QI / m_CDEM)``; zero counts add nothing."""
    a = _cells(x)
    _check_support(a, qi.expected)
    _check_support(a, cdem.expected)
    pos = a > 0
    return float(2.0 * np.sum(a[pos] * np.log(qi.expected[pos] / cdem.expected[pos])))


def pearson_chi2(x: TableLike, fit: FitResult) -> float:
    a = _cells(x)
    m = fit.expected
    _check_support(a, m)
    pos = m > 0
    return float(np.sum((a[pos] - m[pos]) ** 2 / m[pos]))


def log_likelihood(x: TableLike, fit: FitResult) -> float:
    """Multinomial log-likelihood kernel ``sum x log(m / n)``."""
    a = _cells(x)
    _check_support(a, fit.expected)
    pos = a > 0
    return float(np.sum(a[pos] * np.log(fit.expected[pos] / a.sum())))


def chi2_sf(value: float, df: int) -> float:
    """Upper tail of the chi-squared distribution, ``Q(df/2, value/2)``."""
    if value < 0:
        raise ValueError("chi-squared values are non-negative")
    if df < 1:
        raise ValueError("degrees of freedom must be positive")
    if value == 0:
        return 1.0
    if math.isinf(value):
        return 0.0
    return float(special.gammaincc(df / 2.0, value / 2.0))


def test_df(R: int, C: int) -> int:
    """Degrees of freedom of CDEM against QI: ``min(R, C) - 1``."""
    d = min(int(R), int(C))
    if d < 2:
        raise ValueError("need min(R, C) >= 2")
    return d - 1


test_df.__test__ = False  # not a pytest test


def test_statistics(x: TableLike, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> TestStatistics:
    """G2 of CDEM against QI, its asymptotic p-value, and the Pearson
    statistic of the CDEM fit."""
    t = Table(x)
    q, c = fit_qi(t, tol, max_iter), fit_cdem(t, tol, max_iter)
    df = test_df(*t.shape)
    value = g2(t, q, c)
    return TestStatistics(value, pearson_chi2(t, c), df, chi2_sf(max(value, 0.0), df))


test_statistics.__test__ = False

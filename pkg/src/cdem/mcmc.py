"""Metropolis-Hastings walks on a fiber and the Monte Carlo exact test.

The target is the conditional null distribution given the sufficient
statistic, proportional to ``1 / prod x_ij!``.  A proposal picks a basis
move uniformly and a sign uniformly, so it is symmetric and the
acceptance ratio is the weight ratio, which only involves the cells in
the move's support.

Random numbers come from numpy's PCG64 generator.  For one chain the
draws are, in order: all move indices (``integers(0, L, size=steps)``),
all signs (``integers(0, 2, size=steps)``) and all uniforms
(``random(steps)``).  Traces are test fixtures, so this order is fixed.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .basis import MarkovBasis, generate_basis
from .errors import FitError
from .fit import DEFAULT_MAX_ITER, DEFAULT_TOL, chi2_sf, fit_cdem, fit_qi, g2, test_df
from .table import Move, Table, TableLike, _cells, is_applicable

__all__ = [
    "RNG_ALGORITHM",
    "DEFAULT_SEED",
    "ChainConfig",
    "ChainResult",
    "Walk",
    "conditional_log_weight",
    "mh_step",
    "sample_tables",
    "g2_statistic",
    "run_chain",
    "run_chains",
    "pooled_p",
    "batch_means_se",
    "histogram",
    "Histogram",
    "exact_conditional_p",
]

RNG_ALGORITHM = "PCG64"
DEFAULT_SEED = 20090401


@dataclass(frozen=True)
class ChainConfig:
    burn_in: int = 8000
    samples: int = 10_000
    thin: int = 1
    seed: int = DEFAULT_SEED
    basis_minimal: bool = False
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass
class ChainResult:
    g2_trace: np.ndarray
    observed_g2: float
    p_estimate: float
    acceptance_rate: float
    proposals_rejected_negative: int
    seed: int
    df: int
    asymptotic_p: float
    nonconverged: int = 0
    undefined: int = 0
    config: Optional[ChainConfig] = None

    @property
    def samples(self) -> int:
        return len(self.g2_trace)


def conditional_log_weight(x: TableLike) -> float:
    """``-sum log(x_ij!)``, the log of the unnormalised conditional probability."""
    return -float(sum(math.lgamma(v + 1) for v in _cells(x).ravel().tolist()))


def _log_factorials(n: int) -> np.ndarray:
    return np.array([math.lgamma(k + 1) for k in range(n + 1)], dtype=float)


def mh_step(x: TableLike, basis: MarkovBasis, rng: np.random.Generator) -> Table:
    """One Metropolis-Hastings step; returns the next state (possibly ``x``)."""
    t = Table(x)
    if t.shape != basis.shape:
        raise ValueError(f"basis is for {basis.shape}, table is {t.shape}")
    if not len(basis):
        return t
    z: Move = basis.moves[int(rng.integers(0, len(basis)))]
    if rng.integers(0, 2):
        z = -z
    u = rng.random()
    if not is_applicable(z, t):
        return t
    a = t.cells.copy()
    delta = 0.0
    for c, v in z.entries:
        delta += math.lgamma(a[c] + 1) - math.lgamma(a[c] + v + 1)
        a[c] += v
    if delta >= 0.0 or u < math.exp(delta):
        return Table._trusted(a)
    return t


@dataclass
class Walk:
    """States recorded by :func:`sample_tables`, flattened row-major."""

    states: np.ndarray
    shape: tuple[int, int]
    steps: int
    accepted: int
    rejected_negative: int

    def table(self, k: int) -> Table:
        return Table._trusted(self.states[k].reshape(self.shape))


def sample_tables(x: TableLike, basis: MarkovBasis, burn_in: int, samples: int, thin: int = 1,
                  seed: int = DEFAULT_SEED) -> Walk:
    """Walk ``burn_in + samples * thin`` steps from ``x``, recording every ``thin``-th state after burn-in."""
    t = Table(x)
    R, C = t.shape
    if (R, C) != basis.shape:
        raise ValueError(f"basis is for {basis.shape}, table is {t.shape}")
    steps = burn_in + samples * thin
    out = np.empty((samples, R * C), dtype=np.int64)
    state = t.cells.ravel().copy()
    if not len(basis):
        out[:] = state
        return Walk(out, (R, C), steps, 0, 0)
    rng = np.random.Generator(np.random.PCG64(seed))
    pick = rng.integers(0, len(basis), size=steps, dtype=np.int64)
    flip = rng.integers(0, 2, size=steps, dtype=np.uint8)
    u = rng.random(steps)
    cells, vals, lens = basis.sparse_arrays()
    accepted, rejected = _backend.walk(state, cells, vals, lens, _log_factorials(t.total), pick, flip, u,
                                       burn_in, thin, out)
    return Walk(out, (R, C), steps, int(accepted), int(rejected))


def g2_statistic(x: TableLike, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> tuple[float, bool]:
    """G2 of CDEM against QI for one table and whether both fits converged."""
    q = fit_qi(x, tol, max_iter)
    c = fit_cdem(x, tol, max_iter)
    return g2(x, q, c), q.converged and c.converged


def run_chain(x_obs: TableLike, config: ChainConfig = ChainConfig(), basis: Optional[MarkovBasis] = None
              ) -> ChainResult:
    """Monte Carlo estimate of the exact conditional p-value of G2.

    The chain starts at the observed table.  G2 is recomputed (both fits)
    for each recorded table; tables whose fits fail to converge are kept
    and counted, and only tables whose G2 is undefined are dropped from
    the p-value.  ``p_estimate`` is the fraction of recorded G2 values at
    or above the observed one.
    """
    t = Table(x_obs)
    R, C = t.shape
    if basis is None:
        basis = generate_basis(R, C, minimal=config.basis_minimal)
    observed, ok = g2_statistic(t, config.tol, config.max_iter)
    if not ok:
        raise FitError("IPF did not converge on the observed table")
    walk = sample_tables(t, basis, config.burn_in, config.samples, config.thin, config.seed)
    trace = np.empty(config.samples, dtype=float)
    cache: dict[bytes, tuple[float, bool]] = {t.cells.tobytes(): (observed, True)}
    nonconverged = undefined = 0
    for k in range(config.samples):
        key = walk.states[k].tobytes()
        hit = cache.get(key)
        if hit is None:
            try:
                hit = g2_statistic(walk.table(k), config.tol, config.max_iter)
            except FitError:
                hit = (math.nan, False)
            cache[key] = hit
        trace[k] = hit[0]
        nonconverged += not hit[1]
        undefined += math.isnan(hit[0])
    valid = trace[~np.isnan(trace)]
    p = float(np.count_nonzero(valid >= observed) / len(valid)) if len(valid) else math.nan
    df = test_df(R, C)
    return ChainResult(
        g2_trace=trace,
        observed_g2=observed,
        p_estimate=p,
        acceptance_rate=walk.accepted / walk.steps if walk.steps else 0.0,
        proposals_rejected_negative=walk.rejected_negative,
        seed=config.seed,
        df=df,
        asymptotic_p=chi2_sf(max(observed, 0.0), df),
        nonconverged=nonconverged,
        undefined=undefined,
        config=config,
    )


def run_chains(x_obs: TableLike, config: ChainConfig, chains: int, workers: Optional[int] = None
               ) -> list[ChainResult]:
    """Independent chains with seeds ``seed, seed + 1, ...`` run on a thread pool."""
    t = Table(x_obs)
    basis = generate_basis(*t.shape, minimal=config.basis_minimal)
    configs = [replace(config, seed=(config.seed + k) % 2**64) for k in range(chains)]
    with ThreadPoolExecutor(max_workers=workers or chains) as pool:
        return list(pool.map(lambda c: run_chain(t, c, basis), configs))


def pooled_p(results: Sequence[ChainResult]) -> float:
    hits = sum(float(np.count_nonzero(r.g2_trace[~np.isnan(r.g2_trace)] >= r.observed_g2)) for r in results)
    total = sum(int(np.count_nonzero(~np.isnan(r.g2_trace))) for r in results)
    return hits / total


def batch_means_se(indicator: np.ndarray, batches: int = 50) -> float:
    """Standard error of a chain average by non-overlapping batch means."""
    values = np.asarray(indicator, dtype=float)
    size = len(values) // batches
    if size < 1:
        raise ValueError("need at least one value per batch")
    means = values[: size * batches].reshape(batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def bins(self) -> int:
        return len(self.counts)


def histogram(trace: Sequence[float], bins: int = 50, observed: Optional[float] = None) -> Histogram:
    """Equal-width bins over ``[0, max(trace, observed)]``; NaNs are ignored."""
    if bins < 1:
        raise ValueError("bins must be at least 1")
    values = np.asarray(trace, dtype=float)
    values = values[~np.isnan(values)]
    if not len(values):
        raise ValueError("cannot bin an empty trace")
    top = max(float(values.max()), observed if observed is not None else -math.inf)
    lo = min(0.0, float(values.min()))
    if top <= lo:
        top = lo + 1.0
    counts, edges = np.histogram(values, bins=bins, range=(lo, top))
    return Histogram(edges, counts)


def exact_conditional_p(x: TableLike, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Exact conditional p-value of G2 by summing ``1 / prod x!`` over the whole fiber.

    Only feasible for small tables; no sampling is involved.
    """
    from .fiber import enumerate_fiber
    from .table import suff_stat

    t = Table(x)
    observed, _ = g2_statistic(t, tol, max_iter)
    fiber = enumerate_fiber(suff_stat(t))
    logw = np.array([conditional_log_weight(y) for y in fiber])
    w = np.exp(logw - logw.max())
    stat = np.array([g2_statistic(y, tol, max_iter)[0] for y in fiber])
    return float(w[stat >= observed].sum() / w.sum())

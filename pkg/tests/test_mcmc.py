import math

import numpy as np
import pytest

from cdem import Table, generate_basis, suff_stat
from cdem.fiber import enumerate_fiber
from cdem.mcmc import (
    DEFAULT_SEED,
    ChainConfig,
    batch_means_se,
    conditional_log_weight,
    exact_conditional_p,
    histogram,
    mh_step,
    pooled_p,
    run_chain,
    run_chains,
    sample_tables,
)

V_LEFT = Table([[0, 0, 2], [1, 1, 0]])
V_RIGHT = Table([[1, 1, 0], [0, 0, 2]])


def test_log_weight_examples():
    assert conditional_log_weight(np.zeros((3, 3), dtype=int)) == 0.0
    assert conditional_log_weight(V_RIGHT) == pytest.approx(-math.log(2))
    assert conditional_log_weight(V_LEFT) == conditional_log_weight(V_RIGHT)


def test_mh_step_type_v_always_accepts():
    basis = generate_basis(2, 3)
    for seed in range(50):
        probe = np.random.Generator(np.random.PCG64(seed))
        probe.integers(0, 1)
        minus = bool(probe.integers(0, 2))
        y = mh_step(V_LEFT, basis, np.random.Generator(np.random.PCG64(seed)))
        # +z moves V_LEFT to V_RIGHT; -z would make a cell negative
        assert y == (V_LEFT if minus else V_RIGHT)


def test_mh_step_stays_in_fiber(table1):
    basis = generate_basis(4, 4)
    rng = np.random.default_rng(1)
    x, stat = table1, suff_stat(table1)
    for _ in range(2000):
        x = mh_step(x, basis, rng)
        assert suff_stat(x) == stat


def test_mh_step_singleton_and_shape():
    x = Table([[1, 0], [0, 1]])
    rng = np.random.default_rng(0)
    assert mh_step(x, generate_basis(2, 2), rng) == x
    with pytest.raises(ValueError):
        mh_step(x, generate_basis(2, 3), rng)


def test_config_validation():
    for kwargs in ({"samples": 0}, {"thin": 0}, {"burn_in": -1}, {"seed": -1}, {"seed": 2**64}):
        with pytest.raises(ValueError):
            ChainConfig(**kwargs)
    c = ChainConfig()
    assert (c.burn_in, c.samples, c.thin, c.seed, c.basis_minimal) == (8000, 10_000, 1, DEFAULT_SEED, False)


def _stat_columns(states, R, C):
    a = states.reshape(len(states), R, C)
    d = min(R, C)
    return a.sum(axis=2), a.sum(axis=1), np.trace(a[:, :d, :d], axis1=1, axis2=2)


def test_fiber_preservation_over_many_steps(backend, table1):
    walk = sample_tables(table1, generate_basis(4, 4), 0, 100_000, seed=3)
    rows, cols, diag = _stat_columns(walk.states, 4, 4)
    s = suff_stat(table1)
    assert np.all(rows == s.row_sums)
    assert np.all(cols == s.col_sums)
    assert np.all(diag == s.diag_sum)
    assert walk.states.min() >= 0
    assert walk.accepted > 0


def test_thinning_records_every_kth_state(table2):
    basis = generate_basis(4, 4)
    full = sample_tables(table2, basis, 10, 300, 1, seed=5)
    thin = sample_tables(table2, basis, 10, 100, 3, seed=5)
    # both walks draw 310 steps from the same stream, so they visit the same states
    assert thin.steps == full.steps == 310
    assert np.array_equal(thin.states, full.states[2::3])


def _visit_check(x, basis, steps, seed):
    fiber = enumerate_fiber(suff_stat(x))
    logw = np.array([conditional_log_weight(t) for t in fiber])
    target = np.exp(logw - logw.max())
    target /= target.sum()
    walk = sample_tables(x, basis, 1000, steps, seed=seed)
    index = {t.cells.tobytes(): k for k, t in enumerate(fiber)}
    visits = np.array([index[s.tobytes()] for s in walk.states])
    worst = 0.0
    for k, p in enumerate(target):
        ind = (visits == k).astype(float)
        se = batch_means_se(ind, batches=100)
        worst = max(worst, abs(ind.mean() - p) / max(se, 1e-12))
        assert abs(ind.mean() - p) <= 3 * se + 1e-9, (k, ind.mean(), p, se)
    return len(fiber), worst


@pytest.mark.slow
def test_detailed_balance_two_state_fiber():
    size, _ = _visit_check(V_LEFT, generate_basis(2, 3), 1_000_000, 11)
    assert size == 2


@pytest.mark.slow
def test_detailed_balance_three_by_three():
    size, _ = _visit_check(Table([[2, 1, 1], [1, 2, 1], [1, 1, 2]]), generate_basis(3, 3), 1_000_000, 12)
    assert size == 12


def test_run_chain_reproducible(table1):
    config = ChainConfig(burn_in=500, samples=2000, seed=99)
    a, b = run_chain(table1, config), run_chain(table1, config)
    assert np.array_equal(a.g2_trace, b.g2_trace)
    assert a.p_estimate == b.p_estimate
    c = run_chain(table1, ChainConfig(burn_in=500, samples=2000, seed=100))
    assert not np.array_equal(a.g2_trace, c.g2_trace)


def test_run_chain_fields(table2):
    config = ChainConfig(burn_in=200, samples=1000, seed=4)
    r = run_chain(table2, config)
    assert r.samples == 1000 and r.seed == 4 and r.df == 3
    assert r.observed_g2 == pytest.approx(6.18159, abs=5e-4)
    hits = int(np.count_nonzero(r.g2_trace >= r.observed_g2))
    assert r.p_estimate == hits / 1000
    assert 0.0 < r.acceptance_rate < 1.0
    assert r.proposals_rejected_negative > 0
    assert r.nonconverged == 0 and r.undefined == 0


def test_p_estimate_granularity(table1):
    for samples in (1, 7, 333):
        r = run_chain(table1, ChainConfig(burn_in=10, samples=samples, seed=samples))
        assert (r.p_estimate * samples) == pytest.approx(round(r.p_estimate * samples), abs=1e-9)
        assert 0.0 <= r.p_estimate <= 1.0


def test_empty_basis_is_constant_chain():
    r = run_chain([[3, 1], [2, 5]], ChainConfig(burn_in=10, samples=50))
    assert r.p_estimate == 1.0
    assert np.all(r.g2_trace == r.g2_trace[0])
    assert r.acceptance_rate == 0.0


def test_minimal_basis_option(table2):
    r = run_chain(table2, ChainConfig(burn_in=100, samples=500, basis_minimal=True))
    assert r.config.basis_minimal and r.samples == 500


def test_run_chains_and_pooling(table2):
    config = ChainConfig(burn_in=100, samples=400, seed=10)
    results = run_chains(table2, config, 3)
    assert [r.seed for r in results] == [10, 11, 12]
    single = run_chain(table2, ChainConfig(burn_in=100, samples=400, seed=11))
    assert np.array_equal(results[1].g2_trace, single.g2_trace)
    assert pooled_p(results) == pytest.approx(np.mean([r.p_estimate for r in results]))


def test_batch_means_se():
    rng = np.random.default_rng(0)
    values = rng.random(100_000) < 0.3
    se = batch_means_se(values)
    assert se == pytest.approx(math.sqrt(0.3 * 0.7 / 100_000), rel=0.3)
    with pytest.raises(ValueError):
        batch_means_se(np.ones(10), batches=50)


def test_histogram_examples():
    h = histogram([2.0] * 10, bins=5)
    assert sorted(h.counts.tolist())[-1] == 10 and h.counts.sum() == 10
    h = histogram([0, 1, 2, 3], bins=2)
    assert h.counts.tolist() == [2, 2]
    assert h.edges.tolist() == [0.0, 1.5, 3.0]
    with pytest.raises(ValueError):
        histogram([], bins=3)
    with pytest.raises(ValueError):
        histogram([1.0], bins=0)


def test_histogram_extends_to_observed():
    h = histogram([0.5, 1.0], bins=4, observed=8.0)
    assert h.edges[0] == 0.0 and h.edges[-1] == 8.0
    assert h.counts.sum() == 2


def test_histogram_shape_table1(table1):
    r = run_chain(table1)
    h = histogram(r.g2_trace, 50, observed=r.observed_g2)
    assert h.counts.sum() == 10_000
    # right skewed with a long upper tail, like chi-squared with 3 df
    assert h.counts[:25].sum() > 0.9 * h.counts.sum()
    assert np.argmax(h.counts) < 50 // 3
    assert np.median(r.g2_trace) < np.mean(r.g2_trace)
    assert 1.5 < np.mean(r.g2_trace) < 4.5


def test_exact_p_two_state_fiber():
    # both tables have the same weight and the same G2
    assert exact_conditional_p(V_LEFT) == pytest.approx(1.0)

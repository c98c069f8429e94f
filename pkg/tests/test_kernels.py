"""The compiled kernels and the pure-Python fallback must agree."""
import numpy as np
import pytest

from cdem import MoveType, _backend, fit_cdem, fit_qi, generate_basis
from cdem.fiber import verify_connectivity
from cdem.mcmc import ChainConfig, run_chain, sample_tables

pytestmark = pytest.mark.skipif(not _backend.has_compiled(), reason="compiled extension not built")


def both(fn):
    out = {}
    for which in ("python", "compiled"):
        previous = _backend.use(which)
        try:
            out[which] = fn()
        finally:
            _backend.use(previous)
    return out["python"], out["compiled"]


def test_use_switches_and_rejects_unknown():
    previous = _backend.use("python")
    assert _backend.name() == "python"
    _backend.use(previous)
    with pytest.raises(ValueError):
        _backend.use("fortran")


@pytest.mark.parametrize("name", ["table1", "table2", "table3"])
def test_walks_are_identical(name, request):
    x = request.getfixturevalue(name)
    basis = generate_basis(*x.shape)
    a, b = both(lambda: sample_tables(x, basis, 500, 3000, 2, seed=17))
    assert np.array_equal(a.states, b.states)
    assert (a.accepted, a.rejected_negative) == (b.accepted, b.rejected_negative)


def test_chain_traces_are_identical(table1):
    config = ChainConfig(burn_in=300, samples=1500, seed=3)
    a, b = both(lambda: run_chain(table1, config))
    assert np.array_equal(a.g2_trace, b.g2_trace)
    assert a.acceptance_rate == b.acceptance_rate


@pytest.mark.parametrize("name", ["table1", "table2", "table3"])
def test_ipf_agrees(name, request):
    x = request.getfixturevalue(name)
    for fit in (fit_qi, fit_cdem):
        a, b = both(lambda: fit(x))
        assert a.iterations == b.iterations
        assert a.converged == b.converged
        assert np.allclose(a.expected, b.expected, rtol=0, atol=1e-10)


def test_ipf_agrees_on_random_tables():
    rng = np.random.default_rng(8)
    for _ in range(50):
        R, C = rng.integers(2, 6, size=2)
        x = rng.multinomial(int(rng.integers(1, 80)), rng.dirichlet(np.ones(R * C))).reshape(R, C)
        for fit in (fit_qi, fit_cdem):
            a, b = both(lambda: fit(x, 1e-8, 300))
            assert a.converged == b.converged
            assert np.allclose(a.expected, b.expected, rtol=0, atol=1e-9)


@pytest.mark.parametrize(
    "shape, n_max, types, zero_diag",
    [
        ((3, 3), 5, None, False),
        ((2, 4), 6, None, False),
        ((2, 3), 4, [MoveType.I], False),
        ((3, 4), 5, [MoveType.I, MoveType.II], True),
        ((4, 4), 3, [MoveType.I, MoveType.II, MoveType.III, MoveType.IV], False),
    ],
)
def test_connectivity_reports_agree(shape, n_max, types, zero_diag):
    basis = generate_basis(*shape, types=types)
    a, b = both(lambda: verify_connectivity(basis, n_max, structural_zero_diagonal=zero_diag))
    assert (a.tables, a.fibers) == (b.tables, b.fibers)
    assert a.witnesses == b.witnesses

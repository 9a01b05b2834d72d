from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeconv.criterion import FunctionSequence, Verdict
from aeconv.errors import WindowEmpty
from aeconv.measure import uniform_population
from aeconv.spaces import (
    GrandLebesgueSpec,
    default_p_grid,
    gls_bound_check,
    gls_norm,
    lambda_table,
    lambda_window,
    lp_bar_verdict,
    lp_norm,
    lp_tail,
    natural_function,
)


@pytest.fixture(scope="module")
def pop():
    return uniform_population((0.0, 1.0), 200, "gauss-legendre")


def power_seq():
    return FunctionSequence(lambda n, x: x ** n)


def test_lp_norm_of_power(pop):
    for p in (1.0, 2.0, 5.0):
        assert lp_norm(pop.points ** 3, pop, p) == pytest.approx((1 / (3 * p + 1)) ** (1 / p), rel=1e-12)
    assert lp_norm(pop.points, pop, math.inf) == pytest.approx(pop.points.max())


def test_lp_no_overflow(pop):
    assert math.isfinite(lp_norm(np.full(len(pop), 1e300), pop, 64.0))
    with pytest.raises(ValueError):
        lp_norm(pop.points, pop, 0.5)


def test_p_grid():
    g = default_p_grid()
    assert g.size == 32 and g[0] == pytest.approx(1 + 2 ** -10) and g[-1] == pytest.approx(64.0)
    assert default_p_grid(3.0)[-1] == pytest.approx(3 * (1 - 2 ** -10))


def test_natural_function_bound(pop):
    spec = natural_function(power_seq(), pop, N_max=32)
    # psi is attained at n = 1 for a decreasing family
    for p, s in spec.rows():
        assert s == pytest.approx((1 / (p + 1)) ** (1 / p), rel=1e-8)  # x^p is not polynomial
    assert gls_bound_check(power_seq(), pop, spec) <= 1 + 1e-12
    assert gls_norm(pop.points, pop, spec) == pytest.approx(1.0, rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        GrandLebesgueSpec([2.0, 1.5], [1.0, 1.0])
    with pytest.raises(ValueError):
        GrandLebesgueSpec([2.0, 3.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        GrandLebesgueSpec([2.0, 5.0], [1.0, 1.0], R=4.0)


def test_lambda_table_matches_window(pop):
    seq = FunctionSequence(lambda n, x: x / n)
    spec = natural_function(seq, pop, N_max=64)
    table = lambda_table(seq, pop, spec, n_grid=(2, 4, 8, 16), m_cap="4n")
    assert table.cell(4, 9) == pytest.approx(lambda_window(seq, pop, spec, 4, 9), rel=1e-12)
    # |max_{k>n} x/k|_p / |x|_p = 1/(n+1)
    assert table.tail_profile()[16][0] == pytest.approx(1 / 17, rel=1e-12)
    assert table.monotonicity_violations() == []
    with pytest.raises(WindowEmpty):
        lambda_window(seq, pop, spec, 4, 4)


def test_lp_bar(pop):
    seq = FunctionSequence(lambda n, x: x / n)
    rep = lp_bar_verdict(seq, pop, 2.0)
    assert rep.sup_profile[128] == pytest.approx((1 / 128 - 1 / 512) / math.sqrt(3), rel=1e-12)
    assert rep.pairwise_profile[128] == pytest.approx(lp_tail(seq, pop, 2.0, 128, 129), rel=1e-12)
    assert rep.verdict.verdict is Verdict.CONVERGES
    assert rep.values[4][0][0] == 5


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.0, 40.0), st.floats(-5, 5, allow_nan=False))
def test_lp_homogeneity_and_triangle(seed, p, c):
    pop = uniform_population((0.0, 1.0), 64, "gauss-legendre")
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((2, 64)) * rng.uniform(0.1, 10, size=2)[:, None]
    nf, ng = lp_norm(f, pop, p), lp_norm(g, pop, p)
    assert lp_norm(c * f, pop, p) == pytest.approx(abs(c) * nf, rel=1e-12, abs=1e-300)
    assert lp_norm(f + g, pop, p) <= nf + ng + 1e-12 * (nf + ng)

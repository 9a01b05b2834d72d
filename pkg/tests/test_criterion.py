from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeconv.criterion import (
    FunctionSequence,
    MCap,
    Verdict,
    direct_tail_sup,
    gamma_table,
    gamma_window,
    in_probability_criterion,
    in_probability_profile,
    kappa_table,
    kappa_window,
    linear_combination,
    moment_convergence_check,
    tau_table,
    tau_window,
    tchebychev_check,
    verdict,
    verdict_from_profile,
)
from aeconv.errors import BadThresholds, NumericOverflow, WindowEmpty
from aeconv.measure import monte_carlo_population, uniform_population
from aeconv.trial import TrialFunction, TrialClass, power_phi, ratio1_phi

POWER_KAPPA_1 = math.pi / 4 - math.log(2) / 2


@pytest.fixture(scope="module")
def gauss200():
    return uniform_population((0.0, 1.0), 200, "gauss-legendre")


def power_seq():
    return FunctionSequence(lambda n, x: x ** n, name="power")


def const_seq(f):
    return FunctionSequence(lambda n, x: np.full(x.shape[0], f(n)))


def test_power_window_value(gauss200):
    for m in (2, 5, 40):
        assert kappa_window(power_seq(), gauss200, None, 1, m).value == pytest.approx(POWER_KAPPA_1, abs=1e-12)


def test_window_needs_two_indices(gauss200):
    with pytest.raises(WindowEmpty):
        kappa_window(power_seq(), gauss200, None, 3, 3)


def test_table_matches_direct_path(gauss200):
    table = kappa_table(power_seq(), gauss200, n_grid=(2, 4, 8, 16))
    for n in table.n_grid:
        direct = direct_tail_sup(power_seq(), gauss200, n, table.m_cap[n]).value
        assert table.tail_profile()[n][0] == pytest.approx(direct, abs=1e-13)
        assert table.cell(n, n + 3) == pytest.approx(kappa_window(power_seq(), gauss200, None, n, n + 3).value,
                                                     abs=1e-13)


def test_recip_closed_form():
    pop = uniform_population((0.0, 1.0), 8)
    table = kappa_table(const_seq(lambda n: 1.0 / n), pop)
    for n, (s, _) in table.tail_profile().items():
        assert s == pytest.approx(math.atan(1.0 / n), abs=1e-14)
    assert verdict(table).verdict is Verdict.CONVERGES


def test_oscillate_gamma_diverges():
    pop = uniform_population((0.0, 1.0), 8)
    table = gamma_table(const_seq(lambda n: (-1.0) ** n), pop)
    v = verdict(table)
    assert v.verdict is Verdict.DIVERGES
    assert table.tail_profile()[128][0] == pytest.approx(math.atan(2.0), abs=1e-14)


def test_gamma_window_power(gauss200):
    # max_{n<k<=m} |x^k - x^n| = x^n - x^m
    val = gamma_window(power_seq(), gauss200, 2, 6).value
    ref = math.fsum(gauss200.weights * np.arctan(gauss200.points ** 2 - gauss200.points ** 6))
    assert val == pytest.approx(ref, abs=1e-14)


def test_tau_needs_vectors(gauss200):
    with pytest.raises(ValueError):
        tau_table(power_seq(), gauss200)


def test_tau_window_euclidean():
    pop = uniform_population((0.0, 1.0), 16)
    seq = FunctionSequence(lambda n, x: np.stack([x / n, -x / n], axis=1), value_dim=2)
    val = tau_window(seq, pop, 2, 4).value
    ref = math.fsum(pop.weights * np.arctan(math.sqrt(2) * pop.points * (1 / 2 - 1 / 4)))
    assert val == pytest.approx(ref, abs=1e-14)


def test_custom_phi_and_overflow(gauss200):
    cube = TrialFunction("cube", lambda x: np.abs(x) ** 3, TrialClass.K)
    t = kappa_table(power_seq(), gauss200, cube, n_grid=(1, 2, 3, 4), m_cap="n+1")
    assert t.cell(1, 2) == pytest.approx(1 / 4, abs=1e-12)
    huge = FunctionSequence(lambda n, x: np.full(x.shape[0], 1e200))
    with pytest.raises(NumericOverflow):
        kappa_table(huge, gauss200, power_phi(2.0), n_grid=(1, 2, 3, 4))


def test_mcap_parse():
    assert MCap.parse("4n")(8) == 32
    assert MCap.parse("n+1")(8) == 9
    assert MCap.parse("2n+3")(8) == 19
    with pytest.raises(ValueError):
        MCap.parse("sqrt n")


def test_threshold_errors():
    prof = {n: (0.0, 0.0) for n in (1, 2, 3, 4)}
    with pytest.raises(BadThresholds):
        verdict_from_profile(prof, 0.3, 0.2)
    with pytest.raises(ValueError):
        verdict_from_profile({1: (0.0, 0.0)})


def test_verdict_rules():
    dec = {n: (1.0 / n ** 2, 0.0) for n in (4, 8, 16, 32)}
    assert verdict_from_profile(dec).verdict is Verdict.CONVERGES
    flat = {n: (0.5, 0.0) for n in (4, 8, 16, 32)}
    assert verdict_from_profile(flat).verdict is Verdict.DIVERGES
    mid = {n: (0.05, 0.0) for n in (4, 8, 16, 32)}
    assert verdict_from_profile(mid).verdict is Verdict.INCONCLUSIVE
    # under eps_pass only thanks to noise: not enough margin
    noisy = {n: (0.005, 0.002) for n in (4, 8, 16, 32)}
    assert verdict_from_profile(noisy).verdict is Verdict.INCONCLUSIVE
    # large but still drifting
    drift = {4: (0.9, 0.0), 8: (0.7, 0.0), 16: (0.5, 0.0), 32: (0.3, 0.0)}
    assert verdict_from_profile(drift).verdict is Verdict.INCONCLUSIVE


def test_linear_combination(gauss200):
    combo = linear_combination([(2.0, power_seq()), (-1.0, const_seq(lambda n: 1.0 / n))])
    x = gauss200.points
    np.testing.assert_allclose(combo.values(3, x), 2 * x ** 3 - 1 / 3)


def test_in_probability(gauss200):
    vals = in_probability_criterion(power_seq(), gauss200, [(4, 5), (4, 8), (8, 9)])
    prof = in_probability_profile(vals)
    assert prof[4][0] == vals[(4, 8)].value
    assert set(prof) == {4, 8}


def test_moment_check(gauss200):
    rep = moment_convergence_check(power_seq(), gauss200, power_phi(2.0))
    assert rep.values[4] == pytest.approx(1 / 9, abs=1e-13)
    assert rep.bound_holds and rep.tends_to_zero


def test_tchebychev_power(gauss200):
    recs = tchebychev_check(power_seq(), gauss200, [1, 2, 5, 10], [1, 4, 16], [1, 8])
    assert len(recs) == 24
    assert all(r.holds for r in recs)


def test_workers_do_not_change_values():
    pop = monte_carlo_population(500, 3)
    z = np.random.default_rng(0).standard_normal((600, 500))
    seq = FunctionSequence(lambda n, idx: z[n, idx.astype(int)] / n)
    a = kappa_table(seq, pop, ratio1_phi(), workers=1)
    b = kappa_table(seq, pop, ratio1_phi(), workers=4)
    for n in a.n_grid:
        np.testing.assert_array_equal(a.values[n], b.values[n])
        np.testing.assert_array_equal(a.standard_errors[n], b.standard_errors[n])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["arctan", "ratio1", "ratio2"]))
def test_random_tables_are_monotone(seed, phi_name):
    from aeconv.trial import trial_from_name

    rng = np.random.default_rng(seed)
    data = rng.standard_normal((80, 40)) * rng.uniform(0.01, 100)
    pop = uniform_population((0.0, 1.0), 40)
    seq = FunctionSequence(lambda n, x: data[n - 1])
    table = kappa_table(seq, pop, trial_from_name(phi_name), n_grid=(1, 2, 4, 8, 16), m_cap="4n")
    assert table.monotonicity_violations() == []
    assert gamma_table(seq, pop, None, (1, 2, 4, 8), "4n").monotonicity_violations() == []

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aeconv.errors import EmptyGrid, ZeroDenominator
from aeconv.trial import (
    TrialClass,
    TrialFunction,
    arctan_phi,
    delta2_ratio,
    power_phi,
    ratio1_phi,
    ratio2_phi,
    trial_from_name,
    validate_class,
)


@pytest.mark.parametrize("phi", [arctan_phi(), ratio1_phi(), ratio2_phi()])
def test_builtins_pass_kb(phi):
    rep = validate_class(phi)
    assert rep.passed and rep.passes_kb
    assert rep.empirical_max <= phi.bound


def test_power_is_class_k_only():
    rep = validate_class(power_phi(2.0))
    assert rep.passed and rep.passes_k and not rep.passes_kb
    assert power_phi(2.0).is_young_orlicz and not power_phi(0.5).is_young_orlicz


def test_identity_fails():
    rep = validate_class(TrialFunction("id", lambda x: x))
    assert not rep.conditions["A"].passed
    assert not rep.conditions["D"].passed
    assert not rep.conditions["E"].passed


def test_step_fails_monotone_and_continuity():
    rep = validate_class(TrialFunction("step", lambda x: (np.abs(x) > 1).astype(float) + 0 * x))
    assert not rep.conditions["B"].passed
    assert not rep.conditions["C"].passed


def test_jump_is_detected():
    phi = TrialFunction("jump", lambda x: np.arctan(np.abs(x)) + 0.5 * (np.abs(x) > 1.0), bound=2.1)
    rep = validate_class(phi)
    assert rep.conditions["B"].passed
    assert not rep.conditions["C"].passed
    # jump measured relative to max(1, |phi|) at the jump
    assert rep.conditions["C"].worst_violation == pytest.approx(0.5 / (math.pi / 4 + 0.5), rel=1e-3)


@pytest.mark.parametrize("f", [lambda x: x * x, lambda x: np.log1p(np.abs(x))])
def test_unbounded_fails_kb(f):
    rep = validate_class(TrialFunction("u", f))
    assert not rep.conditions["E"].passed


def test_coarse_grid_note():
    rep = validate_class(arctan_phi(), grid=np.geomspace(0.1, 10, 5))
    assert any("only 5 points" in n for n in rep.notes)


def test_empty_grid():
    with pytest.raises(EmptyGrid):
        validate_class(arctan_phi(), grid=[])


def test_delta2():
    assert delta2_ratio(power_phi(2.0), np.geomspace(0.1, 10, 20)) == pytest.approx(4.0)
    big = delta2_ratio(TrialFunction("exp", np.expm1, TrialClass.K), np.geomspace(0.5, 50, 40))
    assert big > 1e20
    with pytest.raises(ZeroDenominator):
        delta2_ratio(TrialFunction("z", lambda x: np.maximum(x - 1, 0)), [0.5, 2.0])


def test_parse():
    assert trial_from_name("power:1.5").param == 1.5
    with pytest.raises(ValueError):
        trial_from_name("cosh")


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e8, 1e8, allow_nan=False), st.floats(0, 1e8, allow_nan=False))
def test_builtin_shape_properties(x, dx):
    for phi in (arctan_phi(), ratio1_phi(), ratio2_phi()):
        a, b = float(phi(np.array([abs(x)]))[0]), float(phi(np.array([abs(x) + dx]))[0])
        assert b >= a - 4e-16  # x/(1+x) may round down by an ulp near 1
        assert float(phi(np.array([-x]))[0]) == pytest.approx(float(phi(np.array([x]))[0]), abs=1e-15)
        assert 0 <= a <= phi.bound
    assert math.isclose(float(arctan_phi()(np.zeros(1))[0]), 0.0)

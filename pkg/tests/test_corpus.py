from __future__ import annotations

import numpy as np
import pytest

from aeconv.corpus import (
    GroundTruth,
    builtin_corpus,
    corpus_names,
    get_entry,
    random_decay_sequence,
    random_walk_sequence,
    typewriter,
    typewriter_block,
    typewriter_full_pass_cap,
    typewriter_index,
    typewriter_position,
)
from aeconv.measure import monte_carlo_population


def test_names():
    names = corpus_names()
    for required in ("power", "typewriter", "recip", "oscillate", "shrink-spike", "random-decay",
                     "random-walk-2d", "cosine", "square-wave", "sawtooth"):
        assert required in names
    assert any(n.startswith("trigpoly-") for n in names)
    assert get_entry("trigpoly-3").periodic.name
    with pytest.raises(KeyError):
        get_entry("nope")


def test_typewriter_example():
    n = typewriter_index(3, 5)
    assert typewriter_position(n) == (3, 5)
    assert typewriter_block(n) == (4 / 8, 5 / 8)
    x = np.array([0.49, 0.5, 0.6, 0.625, 0.7])
    np.testing.assert_array_equal(typewriter(n, x), [0, 1, 1, 0, 0])


def test_typewriter_enumeration():
    n = 1
    for j in range(1, 7):
        for i in range(1, 2 ** j + 1):
            assert typewriter_position(n) == (j, i)
            n += 1


def test_typewriter_pass_covers_unit_interval():
    x = (np.arange(4096) + 0.5) / 4096
    for n in (1, 5, 20, 64):
        cap = typewriter_full_pass_cap(n)
        cover = np.max([typewriter(k, x) for k in range(n, cap + 1)], axis=0)
        assert cover.min() == 1.0


def test_ground_truth_consistency():
    with pytest.raises(ValueError):
        GroundTruth(True, False, {})
    for e in builtin_corpus():
        assert e.ground_truth.in_measure or not e.ground_truth.ae_converges


def test_monte_carlo_entries_reproduce():
    pop = monte_carlo_population(300, 5)
    a = random_decay_sequence(5, 300).values(7, pop.points)
    b = random_decay_sequence(5, 300).values(7, pop.points)
    assert a.tobytes() == b.tobytes()
    w1 = random_walk_sequence(5, 300).value_block(1, 40, pop.points)
    w2 = random_walk_sequence(5, 300).value_block(1, 40, pop.points)
    assert w1.tobytes() == w2.tobytes()
    assert w1.shape == (40, 300, 2)
    # a path does not depend on how many paths are drawn
    small = random_decay_sequence(5, 10).values(7, np.arange(10.0))
    np.testing.assert_array_equal(small, a[:10])


def test_describe():
    d = get_entry("typewriter").describe()
    assert d["expected_verdict"] == "DIVERGES"
    assert d["m_cap"] == "end of next pass"

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from crawlbench.streams import Draws


def test_same_key_same_sequence():
    a, b = Draws(7, 2, 3), Draws(7, 2, 3)
    assert [a.integer(0, 100) for _ in range(50)] == [b.integer(0, 100) for _ in range(50)]


def test_streams_are_independent_of_each_other():
    a, b = Draws(7, 2, 3), Draws(7, 2, 4)
    assert [a.integer(0, 10**9) for _ in range(5)] != [b.integer(0, 10**9) for _ in range(5)]


def test_pinned_values():
    # Guards the generator identity recorded in manifests.
    d = Draws(0, 1)
    assert [d.integer(0, 999) for _ in range(5)] == [d2 for d2 in _pinned()]


def _pinned():
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=0, spawn_key=(1,))))
    return [int(rng.integers(0, 1000)) for _ in range(5)]


def test_integer_bounds_inclusive():
    d = Draws(3)
    seen = {d.integer(1, 4) for _ in range(400)}
    assert seen == {1, 2, 3, 4}


def test_draw_count():
    d = Draws(1)
    d.uniform()
    d.integer(0, 3)
    d.bernoulli(0.5)
    assert d.count == 3


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=30), st.integers(0, 40), st.integers(0, 2**32))
def test_weighted_sample_distinct_and_positive(weights, k, seed):
    picked = Draws(seed).weighted_sample(weights, k)
    positive = [i for i, w in enumerate(weights) if w > 0]
    assert len(set(picked)) == len(picked) == min(k, len(positive))
    assert all(weights[i] > 0 for i in picked)


def test_weighted_sample_follows_weights():
    d = Draws(11)
    hits = np.zeros(3)
    for _ in range(3000):
        hits[d.weighted_sample([1, 2, 7], 1)[0]] += 1
    assert np.allclose(hits / hits.sum(), [0.1, 0.2, 0.7], atol=0.03)


def test_categorical_never_picks_zero_weight():
    d = Draws(5)
    assert all(d.categorical([0, 3, 0, 1]) in (1, 3) for _ in range(500))

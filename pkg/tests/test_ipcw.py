import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgscan.dataset import from_arrays
from fgscan.errors import ZeroDenominatorError
from fgscan.ipcw import CensoringSurvival, censoring_km, precompute_weights

from helpers import random_instance, ref_censoring_survival


def test_hand_example_values(g_hand):
    G = censoring_km(g_hand)
    assert G.jump_times.tolist() == [2.0, 4.0]
    assert G.values.tolist() == [1.0, 2.0 / 3.0, 0.0]
    got = G([0.5, 1.0, 2.0, 2.0001, 3.0, 4.0, 4.5, 100.0])
    assert got.tolist() == [1.0, 1.0, 1.0, 2 / 3, 2 / 3, 2 / 3, 0.0, 0.0]


def test_no_censoring_is_one():
    ds = from_arrays([1.0, 2.0, 3.0], [1, 2, 1], np.zeros((3, 1)))
    G = censoring_km(ds)
    assert np.all(G(np.linspace(0, 10, 50)) == 1.0)
    w = precompute_weights(ds)
    assert np.all(w.G_at_X == 1.0)
    for i in range(ds.n):
        for k in range(ds.n):
            assert w.weight(ds, i, k) in (0.0, 1.0)


def test_all_censored_is_empirical_survival():
    t = np.array([0.3, 1.7, 0.9, 2.4, 1.1])
    ds = from_arrays(t, [0] * 5, np.zeros((5, 1)), require_primary=False)
    G = censoring_km(ds)
    for q in np.linspace(0.01, 3, 40):
        # Pr(C >= q) from the empirical distribution
        assert G(q) == pytest.approx(np.mean(t >= q), abs=1e-15)


def test_tie_events_leave_first():
    # event and censoring both at 2: censoring risk set at 2 is {censored@2, 3}
    ds = from_arrays([1.0, 2.0, 2.0, 3.0], [1, 1, 0, 1], np.zeros((4, 1)))
    G = censoring_km(ds)
    assert G(2.5) == pytest.approx(0.5)
    assert G(2.0) == 1.0


def test_weight_example():
    ds = from_arrays([1.5, 2.0, 3.5, 4.0], [2, 0, 1, 0], np.zeros((4, 1)))
    w = precompute_weights(ds)
    i = int(np.flatnonzero(ds.time == 3.5)[0])
    k = int(np.flatnonzero(ds.time == 1.5)[0])
    assert w.G(3.5) == pytest.approx(2 / 3)
    assert w.weight(ds, i, k) == pytest.approx(2 / 3, abs=1e-15)
    assert np.isnan(w.inv_G_at_X[i])
    assert w.backward_factor[i] == 0.0


def test_weight_matrix_matches_direct():
    rng = np.random.default_rng(11)
    for _ in range(5):
        ds = random_instance(rng, n=int(rng.integers(20, 200)), ties=bool(rng.integers(2)))
        w = precompute_weights(ds)
        G = ref_censoring_survival(ds.time, ds.status)
        for i in range(ds.n):
            for k in range(ds.n):
                if ds.time[k] >= ds.time[i]:
                    expect = 1.0
                elif ds.status[k] == 2:
                    expect = G(ds.time[i]) / G(min(ds.time[i], ds.time[k]))
                else:
                    expect = 0.0
                got = w.weight(ds, i, k)
                assert got == pytest.approx(expect, rel=1e-13, abs=1e-15)
                assert 0.0 <= got <= 1.0 + 1e-15


@given(st.lists(st.tuples(st.integers(1, 8), st.integers(0, 2)), min_size=1, max_size=30))
def test_km_properties(rows):
    t = np.array([r[0] for r in rows], dtype=float)
    s = np.array([r[1] for r in rows])
    ds = from_arrays(t, s, np.zeros((len(rows), 1)), require_primary=False)
    G = censoring_km(ds)
    grid = np.linspace(0, 10, 81)
    vals = G(grid)
    assert vals[0] == 1.0
    assert np.all(np.diff(vals) <= 0)
    assert np.all((vals >= 0) & (vals <= 1))
    ref = ref_censoring_survival(t, s)
    assert np.allclose(vals, [ref(q) for q in grid], rtol=0, atol=1e-14)
    # positive below the largest time unless that time holds a censoring
    tmax = t.max()
    if not np.any((t == tmax) & (s == 0)):
        assert np.all(G(grid[grid <= tmax]) > 0)


def test_zero_guard():
    ds = from_arrays([1.0, 2.0], [1, 2], np.zeros((2, 1)))
    G = CensoringSurvival(np.array([0.5]), np.array([1.0, 0.0]))
    with pytest.raises(ZeroDenominatorError, match="competing event"):
        precompute_weights(ds, G)

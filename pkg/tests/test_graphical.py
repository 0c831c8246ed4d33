import math

import pytest

from twostage.engine import FULL, SparseConfig, simulate
from twostage.errors import DomainError, ParameterError
from twostage.graphical import (
    ClockBundle,
    LazyClocks,
    containment_holds,
    path_event,
    sample_clocks,
    sir_from_clocks,
)
from twostage.lattice import Box, LatticeGeometry
from twostage.params import ProcessParams
from twostage.rng import substream
from twostage.saw import sample_walk

P = ProcessParams(lam=1.5, gamma=2.0, delta=0.5)


def _line_region(k):
    return {(i,) for i in range(k)}


def test_sample_clocks_counts():
    region = _line_region(5)
    clocks = sample_clocks(region, P, substream(1))
    assert len(clocks.recovery) == 5
    assert len(clocks.removal) == 5
    assert len(clocks.maturation) == 5
    # 4 adjacent pairs, both orders
    assert len(clocks.transmission) == 8
    assert all(v > 0 for v in clocks.recovery.values())
    assert clocks.transmission[((0,), (1,))] != clocks.transmission[((1,), (0,))]


def test_sample_clocks_empty_region_rejected():
    with pytest.raises(DomainError):
        sample_clocks(set(), P, substream(2))


def test_clock_means():
    # one long line gives many iid draws per bundle
    region = _line_region(500)
    w_sum = y_sum = 0.0
    n_bundles = 200
    for b in range(n_bundles):
        clocks = sample_clocks(region, ProcessParams(lam=1.0, gamma=1.0, delta=1.0), substream(3, b))
        w_sum += sum(clocks.recovery.values())
        y_sum += sum(clocks.removal.values())
    n = 500 * n_bundles
    assert abs(w_sum / n - 1.0) <= 3.0 / math.sqrt(n)  # Exp(1): sd = 1
    assert abs(y_sum / n - 0.5) <= 3.0 * 0.5 / math.sqrt(n)  # rate 1+delta = 2


def _hand_bundle(u01, w0, gam1, y1):
    region = frozenset({(0,), (1,)})
    return ClockBundle(
        recovery={(0,): w0, (1,): 9.9},
        removal={(0,): 9.9, (1,): y1},
        maturation={(0,): 9.9, (1,): gam1},
        transmission={((0,), (1,)): u01, ((1,), (0,)): 9.9},
        region=region,
    )


def test_path_event_direct_inequalities():
    path = [(0,), (1,)]
    assert path_event(path, _hand_bundle(u01=0.2, w0=0.5, gam1=0.1, y1=0.4))
    assert not path_event(path, _hand_bundle(u01=0.6, w0=0.5, gam1=0.1, y1=0.4))
    assert not path_event(path, _hand_bundle(u01=0.2, w0=0.5, gam1=0.5, y1=0.4))


def test_path_event_validations():
    bundle = _hand_bundle(0.2, 0.5, 0.1, 0.4)
    with pytest.raises(ParameterError):
        path_event([(1,), (0,)], bundle)  # does not start at the origin
    with pytest.raises(DomainError):
        path_event([(0,), (-1,)], bundle)  # leaves the region
    with pytest.raises(ParameterError):
        path_event([(0,)], bundle)  # no step


def test_path_event_probability_closed_form():
    # per step: P(U < W) = lam/(1+lam), P(Gam < Y) = gamma/(1+gamma+delta)
    p = ProcessParams(lam=1.5, gamma=2.0, delta=0.5)
    path = [(0,), (1,), (2,), (3,)]
    region = _line_region(4)
    n = 100000
    hits = 0
    for i in range(n):
        if path_event(path, sample_clocks(region, p, substream(4, i))):
            hits += 1
    step = (p.lam / (1 + p.lam)) * (p.gamma / (1 + p.gamma + p.delta))
    target = step ** 3
    se = math.sqrt(target * (1 - target) / n)
    assert abs(hits / n - target) <= 3 * se


def test_comparison_probabilities():
    p = ProcessParams(lam=0.8, gamma=1.0, delta=1.0)
    n = 100000
    lazy = LazyClocks(p, substream(5))
    u_hits = gam_hits = 0
    for i in range(n):
        x, y = (i, 0), (i, 1)
        if lazy.transmission(x, y) < lazy.recovery(x):
            u_hits += 1
        if lazy.maturation(y) < lazy.removal(y):
            gam_hits += 1
    pu = p.lam / (1 + p.lam)
    pg = p.gamma / (1 + p.gamma + p.delta)
    assert abs(u_hits / n - pu) <= 3 * math.sqrt(pu * (1 - pu) / n)
    assert abs(gam_hits / n - pg) <= 3 * math.sqrt(pg * (1 - pg) / n)


def test_sir_from_clocks_single_site():
    region = frozenset({(0,)})
    bundle = ClockBundle(
        recovery={(0,): 0.73},
        removal={(0,): 1.0},
        maturation={(0,): 1.0},
        transmission={},
        region=region,
    )
    traj = sir_from_clocks(bundle, SparseConfig(states={(0,): FULL}))
    assert traj.extinction_time == pytest.approx(0.73)
    assert traj.ever_fully_infected == {(0,)}
    assert [e[2] for e in traj.events] == [FULL, -1]


def test_sir_from_clocks_two_site_chain_timing():
    # U(O,x) < W(O) and Gam(x) < Y(x): x fully infected at U + Gam
    bundle = _hand_bundle(u01=0.2, w0=0.5, gam1=0.1, y1=0.4)
    traj = sir_from_clocks(bundle, SparseConfig(states={(0,): FULL}))
    times = {(site, state): t for t, site, state in traj.events}
    assert times[((1,), FULL)] == pytest.approx(0.2 + 0.1)
    assert (1,) in traj.ever_fully_infected


def test_sir_from_clocks_rejects_semi_or_recovered_init():
    bundle = _hand_bundle(0.2, 0.5, 0.1, 0.4)
    with pytest.raises(DomainError):
        sir_from_clocks(bundle, SparseConfig(states={(0,): 1}))
    with pytest.raises(DomainError):
        sir_from_clocks(bundle, SparseConfig(states={(0,): -1}))


def test_clock_sir_matches_engine_in_law():
    # same finite graph, two independent simulators: extinction times agree
    # (two-sample Kolmogorov-Smirnov at alpha = 0.001)
    p = ProcessParams(lam=1.2, gamma=1.5, delta=0.5)
    g = LatticeGeometry(2, Box(1))
    region = set(g.sites())
    o = (0, 0)
    init = SparseConfig(states={o: FULL})
    n = 4000
    clock_times = []
    for i in range(n):
        traj = sir_from_clocks(sample_clocks(region, p, substream(6, i)), init)
        clock_times.append(traj.extinction_time)
    engine_times = []
    for i in range(n):
        out = simulate("sir", init, p, g, 1e9, substream(7, i))
        engine_times.append(out.extinction_time)
    a = sorted(clock_times)
    b = sorted(engine_times)
    # two-sample KS statistic
    d_stat = 0.0
    ia = ib = 0
    while ia < n and ib < n:
        if a[ia] <= b[ib]:
            ia += 1
        else:
            ib += 1
        d_stat = max(d_stat, abs(ia - ib) / n)
    threshold = 1.949 * math.sqrt(2.0 / n)  # c(0.001) = sqrt(-ln(alpha/2)/2)
    assert d_stat <= threshold


def test_containment_vacuous_and_constructive():
    bundle = _hand_bundle(u01=0.6, w0=0.5, gam1=0.1, y1=0.4)  # event fails
    assert containment_holds([(0,), (1,)], bundle)
    bundle = _hand_bundle(u01=0.2, w0=0.5, gam1=0.1, y1=0.4)  # event holds
    assert path_event([(0,), (1,)], bundle)
    assert containment_holds([(0,), (1,)], bundle)


def test_containment_property_small_run():
    p = ProcessParams(lam=4.0, gamma=8.0, delta=0.5)
    rng = substream(8)
    for i in range(2000):
        n = 1 + int(rng.integers(8))
        path = sample_walk(6, n, substream(9, i)).sites
        clocks = sample_clocks(set(path), p, substream(10, i))
        assert containment_holds(path, clocks)

"""Event-driven simulation of the three particle systems.

Three continuous-time Markov processes share this module:

* two-stage contact process, site states {0, 1, 2} (healthy,
  semi-infected, fully-infected);
* two-stage SIR model, site states {-1, 0, 1, 2} with -1 an absorbing
  recovered state;
* the auxiliary linear pair process assigning each site a pair
  (zeta, theta) of non-negative integers whose projection reproduces the
  contact process in law.

The spread simulators use a next-event scheme over the active sites with
a thinning bound for infections: attempts are proposed at the constant
per-source rate lam * 2d and rejected when the chosen direction leaves
the domain or hits a non-susceptible site.  Rejected proposals are null
transitions, so the scheme is exact in law while keeping every event at
O(1) amortized cost.  Sites are handled as integer codes internally
(see lattice.LatticeGeometry); the public API speaks tuples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError
from .lattice import LatticeGeometry, Site
from .params import ProcessParams

HEALTHY = 0
SEMI = 1
FULL = 2
RECOVERED = -1

CONTACT_STATES = (HEALTHY, SEMI, FULL)
SIR_STATES = (RECOVERED, HEALTHY, SEMI, FULL)

_DRAW_BUF = 8192
_ZERO_PAIR = (0, 0)


@dataclass
class SparseConfig:
    """Sparse site -> state map; absent sites are healthy (0)."""

    states: dict[Site, int] = field(default_factory=dict)
    time: float = 0.0

    @classmethod
    def from_sites(cls, mapping: dict[Site, int], time: float = 0.0) -> "SparseConfig":
        """Build a config, dropping explicit zeros."""
        return cls(states={x: s for x, s in mapping.items() if s != HEALTHY}, time=time)

    def state(self, x: Site) -> int:
        return self.states.get(x, HEALTHY)

    def active_count(self) -> int:
        """Number of sites in state 1 or 2."""
        return sum(1 for s in self.states.values() if s in (SEMI, FULL))


@dataclass
class LinearConfig:
    """Sparse site -> (zeta, theta) map; absent sites are (0, 0)."""

    values: dict[Site, tuple[int, int]] = field(default_factory=dict)
    time: float = 0.0

    @classmethod
    def from_sites(cls, mapping: dict[Site, tuple[int, int]], time: float = 0.0) -> "LinearConfig":
        return cls(
            values={x: (int(z), int(t)) for x, (z, t) in mapping.items() if (z, t) != _ZERO_PAIR},
            time=time,
        )

    def value(self, x: Site) -> tuple[int, int]:
        return self.values.get(x, _ZERO_PAIR)


@dataclass
class TrajectorySummary:
    """Replica-level outcome of a spread simulation."""

    final: SparseConfig
    extinction_time: Optional[float]  # None when the survival proxy fired
    survived: bool
    peak_active: int
    event_count: int
    ever_fully_infected: Optional[set[Site]] = None


def all_full_config(g: LatticeGeometry) -> SparseConfig:
    """Every site of the domain fully infected."""
    return SparseConfig(states={x: FULL for x in g.sites()})


def all_ones_linear(g: LatticeGeometry) -> LinearConfig:
    """Every site of the domain at (1, 0)."""
    return LinearConfig(values={x: (1, 0) for x in g.sites()})


# ----------------------------------------------------------------------
# transition-rate tables
# ----------------------------------------------------------------------
def _infected_neighbor_count(cfg: SparseConfig, x: Site, g: LatticeGeometry) -> int:
    states = cfg.states
    return sum(1 for y in g.neighbors(x) if states.get(y, HEALTHY) == FULL)


def site_rates_contact(
    cfg: SparseConfig, x: Site, p: ProcessParams, g: LatticeGeometry
) -> list[tuple[int, float]]:
    """Outgoing transitions (target state, rate) of site x, contact process.

    Fully infected sites recover at rate 1; semi-infected sites mature at
    rate gamma or recover at rate 1 + delta; healthy sites become
    semi-infected at rate lam per fully-infected neighbor (omitted when
    that count is zero).
    """
    g.require(x)
    s = cfg.state(x)
    if s == FULL:
        return [(HEALTHY, 1.0)]
    if s == SEMI:
        return [(FULL, p.gamma), (HEALTHY, 1.0 + p.delta)]
    if s == HEALTHY:
        k = _infected_neighbor_count(cfg, x, g)
        if k:
            return [(SEMI, p.lam * k)]
        return []
    raise ParameterError(f"state {s} is not a contact-process state")


def site_rates_sir(
    cfg: SparseConfig, x: Site, p: ProcessParams, g: LatticeGeometry
) -> list[tuple[int, float]]:
    """Outgoing transitions of site x in the two-stage SIR model.

    As the contact process, except recoveries land in the absorbing
    state -1, which has no outgoing transitions.
    """
    g.require(x)
    s = cfg.state(x)
    if s == FULL:
        return [(RECOVERED, 1.0)]
    if s == SEMI:
        return [(RECOVERED, 1.0 + p.delta), (FULL, p.gamma)]
    if s == HEALTHY:
        k = _infected_neighbor_count(cfg, x, g)
        if k:
            return [(SEMI, p.lam * k)]
        return []
    if s == RECOVERED:
        return []
    raise ParameterError(f"state {s} is not an SIR state")


def fully_infected_set(cfg: SparseConfig) -> set[Site]:
    """The set of fully-infected (state 2) sites."""
    return {x for x, s in cfg.states.items() if s == FULL}


def project_linear(lc: LinearConfig) -> SparseConfig:
    """Project a pair configuration onto contact-process states.

    A site maps to 2 if zeta > 0, to 1 if zeta = 0 < theta, else to 0.
    """
    states: dict[Site, int] = {}
    for x, (z, th) in lc.values.items():
        if z > 0:
            states[x] = FULL
        elif th > 0:
            states[x] = SEMI
    return SparseConfig(states=states, time=lc.time)


# ----------------------------------------------------------------------
# spread simulation (contact / SIR)
# ----------------------------------------------------------------------
def simulate(
    kind: str,
    init: SparseConfig,
    p: ProcessParams,
    g: LatticeGeometry,
    horizon: float,
    rng: np.random.Generator,
    active_cap: Optional[int] = None,
    track_ever_fully_infected: bool = False,
) -> TrajectorySummary:
    """Run one replica of the contact or SIR process.

    The run terminates at extinction (no site in state 1 or 2), at the
    absolute time ``horizon``, or as soon as the active-site count
    reaches ``active_cap``; the latter two outcomes are reported as
    survival under the proxy.

    Args:
        kind: "contact" or "sir".
        init: initial configuration (finite support, time usually 0).
        horizon: absolute stop time, > init.time.
        rng: replica-local generator.
        active_cap: survival cap on |state 1| + |state 2|, or None.
        track_ever_fully_infected: record every site that ever reaches
            state 2 (off by default; costs memory).

    Returns:
        TrajectorySummary with the configuration at the stop time.
    """
    if kind not in ("contact", "sir"):
        raise ParameterError(f"kind must be 'contact' or 'sir', got {kind!r}")
    sir = kind == "sir"
    if not (isinstance(horizon, (int, float)) and math.isfinite(horizon)) or horizon <= init.time:
        raise ParameterError(f"horizon must be finite and exceed init.time, got {horizon}")
    if active_cap is not None and active_cap < 1:
        raise ParameterError(f"active_cap must be >= 1, got {active_cap}")

    allowed = SIR_STATES if sir else CONTACT_STATES
    states: dict[int, int] = {}
    ones: list[int] = []
    twos: list[int] = []
    for x, s in init.states.items():
        if s == HEALTHY:
            continue
        if s not in allowed:
            raise ParameterError(f"state {s} at {x} invalid for kind {kind!r}")
        code = g.encode(x)  # raises DomainError for sites outside the domain
        states[code] = s
        if s == SEMI:
            ones.append(code)
        elif s == FULL:
            twos.append(code)

    lam = p.lam
    gamma = p.gamma
    delta = p.delta
    twod = 2 * g.d
    lam2d = lam * twod
    semi_tot = gamma + 1.0 + delta  # total outgoing rate of a semi-infected site

    opos = {c: i for i, c in enumerate(ones)}
    tpos = {c: i for i, c in enumerate(twos)}
    ever2: Optional[set[int]] = set(twos) if track_ever_fully_infected else None

    nbr_cache = g._nbr_cache
    nbr_build = g.neighbor_codes

    t = init.time
    peak = len(ones) + len(twos)
    events = 0
    survived = False
    extinction_time: Optional[float] = None

    if peak == 0:
        extinction_time = t
    elif active_cap is not None and peak >= active_cap:
        survived = True
    else:
        u_buf = rng.random(_DRAW_BUF)
        e_buf = rng.standard_exponential(_DRAW_BUF)
        cur = 0
        while True:
            n1 = len(ones)
            n2 = len(twos)
            rate = n2 * (1.0 + lam2d) + n1 * semi_tot
            if cur >= _DRAW_BUF:
                u_buf = rng.random(_DRAW_BUF)
                e_buf = rng.standard_exponential(_DRAW_BUF)
                cur = 0
            t_next = t + e_buf[cur] / rate
            if t_next >= horizon:
                t = horizon
                survived = True
                break
            t = t_next
            u = u_buf[cur] * rate
            cur += 1
            if u < n2:
                # recovery of a fully-infected site
                i = int(u)
                if i >= n2:
                    i = n2 - 1
                x = twos[i]
                last = twos.pop()
                if i < len(twos):
                    twos[i] = last
                    tpos[last] = i
                del tpos[x]
                if sir:
                    states[x] = RECOVERED
                else:
                    del states[x]
                events += 1
                if n2 - 1 + n1 == 0:
                    extinction_time = t
                    break
            elif u < n2 + n1 * semi_tot:
                v = u - n2
                i = int(v / semi_tot)
                if i >= n1:
                    i = n1 - 1
                x = ones[i]
                last = ones.pop()
                if i < len(ones):
                    ones[i] = last
                    opos[last] = i
                del opos[x]
                events += 1
                if v - i * semi_tot < gamma:
                    # maturation to fully infected
                    states[x] = FULL
                    tpos[x] = len(twos)
                    twos.append(x)
                    if ever2 is not None:
                        ever2.add(x)
                else:
                    # recovery of a semi-infected site
                    if sir:
                        states[x] = RECOVERED
                    else:
                        del states[x]
                    if n1 - 1 + n2 == 0:
                        extinction_time = t
                        break
            else:
                # infection proposal: uniform (source, direction) thinning
                k = int((u - n2 - n1 * semi_tot) / lam)
                if k >= n2 * twod:
                    k = n2 * twod - 1
                i, direction = divmod(k, twod)
                x = twos[i]
                nb = nbr_cache.get(x)
                if nb is None:
                    nb = nbr_build(x)
                y = nb[direction]
                if y >= 0 and y not in states:
                    states[y] = SEMI
                    opos[y] = len(ones)
                    ones.append(y)
                    events += 1
                    active = n1 + 1 + n2
                    if active > peak:
                        peak = active
                    if active_cap is not None and active >= active_cap:
                        survived = True
                        break

    final = SparseConfig(
        states={g.decode(c): s for c, s in states.items()},
        time=t if extinction_time is None else extinction_time,
    )
    ever_sites = {g.decode(c) for c in ever2} if ever2 is not None else None
    return TrajectorySummary(
        final=final,
        extinction_time=extinction_time,
        survived=survived,
        peak_active=peak,
        event_count=events,
        ever_fully_infected=ever_sites,
    )


# ----------------------------------------------------------------------
# linear pair process
# ----------------------------------------------------------------------
def simulate_linear(
    init: LinearConfig,
    p: ProcessParams,
    g: LatticeGeometry,
    sample_times: list[float],
    rng: np.random.Generator,
) -> list[LinearConfig]:
    """Run the pair process and snapshot it at the requested times.

    Per site the five transition rows are: reset to (0, 0) at rate 1;
    (zeta, 0) at rate delta; (zeta + theta, 0) at rate gamma; and per
    ordered neighbor pair y ~ x, (zeta, theta + zeta(y)) at rate lam --
    one independent clock per direction, 2d per site.  Rows whose target
    equals the current pair are null, so only sites with a nonzero pair
    or a zeta-positive neighbor need live clocks.

    Returns one LinearConfig per entry of sample_times (ascending).
    """
    if not sample_times:
        raise ParameterError("sample_times must be non-empty")
    times = sorted(float(s) for s in sample_times)
    if times[0] < init.time:
        raise ParameterError("sample times must not precede init.time")

    vals: dict[int, tuple[int, int]] = {}
    for x, (z, th) in init.values.items():
        if z < 0 or th < 0:
            raise ParameterError(f"pair values must be non-negative, got {(z, th)} at {x}")
        if (z, th) == _ZERO_PAIR:
            continue
        vals[g.encode(x)] = (int(z), int(th))

    nbr_cache = g._nbr_cache
    nbr_build = g.neighbor_codes

    def nbrs(c: int) -> tuple[int, ...]:
        nb = nbr_cache.get(c)
        if nb is None:
            nb = nbr_build(c)
        return nb

    # active set: nonzero pair, or some neighbor with zeta > 0
    active: list[int] = []
    pos: dict[int, int] = {}

    def activate(c: int) -> None:
        if c not in pos:
            pos[c] = len(active)
            active.append(c)

    def deactivate(c: int) -> None:
        i = pos.pop(c)
        last = active.pop()
        if i < len(active):
            active[i] = last
            pos[last] = i

    for c, (z, _) in vals.items():
        activate(c)
        if z:
            for y in nbrs(c):
                if y >= 0:
                    activate(y)

    lam = p.lam
    gamma = p.gamma
    delta = p.delta
    twod = 2 * g.d
    bundle = 1.0 + delta + gamma + lam * twod
    gd_edge = 1.0 + delta + gamma  # lower edge of the lam rows

    out: list[LinearConfig] = []
    t = init.time
    next_i = 0

    def snapshot(at: float) -> None:
        out.append(
            LinearConfig(values={g.decode(c): v for c, v in vals.items()}, time=at)
        )

    u_buf = rng.random(_DRAW_BUF)
    e_buf = rng.standard_exponential(_DRAW_BUF)
    cur = 0
    while next_i < len(times):
        n = len(active)
        if n == 0:
            # frozen forever: emit the remaining snapshots
            while next_i < len(times):
                snapshot(times[next_i])
                next_i += 1
            break
        if cur >= _DRAW_BUF:
            u_buf = rng.random(_DRAW_BUF)
            e_buf = rng.standard_exponential(_DRAW_BUF)
            cur = 0
        t_next = t + e_buf[cur] / (n * bundle)
        while next_i < len(times) and times[next_i] <= t_next:
            snapshot(times[next_i])
            next_i += 1
        if next_i >= len(times):
            break
        t = t_next
        u = u_buf[cur] * n
        cur += 1
        i = int(u)
        if i >= n:
            i = n - 1
        x = active[i]
        v = (u - i) * bundle
        z, th = vals.get(x, _ZERO_PAIR)
        if v < 1.0:
            # reset row
            if z or th:
                del vals[x]
                # zeta drop can strand neighbors; they are pruned lazily
                if not any(vals.get(y, _ZERO_PAIR)[0] for y in nbrs(x) if y >= 0):
                    deactivate(x)
            else:
                # null touch: prune if no zeta-positive neighbor remains
                if not any(vals.get(y, _ZERO_PAIR)[0] for y in nbrs(x) if y >= 0):
                    deactivate(x)
        elif v < 1.0 + delta:
            # clear theta, keep zeta
            if th:
                if z:
                    vals[x] = (z, 0)
                else:
                    del vals[x]
        elif v < gd_edge:
            # promote theta into zeta
            if th:
                vals[x] = (z + th, 0)
                if z == 0:
                    for y in nbrs(x):
                        if y >= 0:
                            activate(y)
        else:
            # absorb a neighbor's zeta into theta
            k = int((v - gd_edge) / lam)
            if k >= twod:
                k = twod - 1
            y = nbrs(x)[k]
            if y >= 0:
                zy = vals.get(y, _ZERO_PAIR)[0]
                if zy:
                    vals[x] = (z, th + zy)
                    activate(x)
    return out

"""Structured self-avoiding walks and the second-moment survival bound.

The walk reserves the last ``band = floor(d / log d)`` coordinates for
forced positive "drift" steps taken every ``period = floor(log d)``
steps (natural logarithm); all other steps move +-1 in the first
``d - band`` coordinates, uniformly over the not-yet-visited choices.
The drift makes the admissible set at every free step at least

    2 * (d - band) - period

sites large, so the walk never gets stuck for d >= 3.

For two independent such walks S and V, the index sets

    F = { i : V_i hits some S_j }         (site collisions)
    K = { i : (V_i, V_{i+1}) = (S_j, S_{j+1}) }   (edge collisions)

control the second-moment weight
``2^|F\\K| * ((1+gamma+delta)/gamma)^(|F|-1) * ((lam+1)/lam)^|K|``,
whose inverse expectation lower-bounds the probability that some walk of
the class carries a full infection chain -- and hence lower-bounds
survival of the SIR model started from one fully-infected origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError
from .graphical import LazyClocks
from .lattice import Site, origin
from .params import ProcessParams
from .rng import DrawBuffer, substream


def drift_period(d: int) -> int:
    """floor(log d); must be >= 1, so d >= 3."""
    if d < 3:
        raise ParameterError(f"structured walks need d >= 3 (floor(log d) >= 1), got d={d}")
    return int(math.floor(math.log(d)))


def drift_band(d: int) -> int:
    """floor(d / log d): number of reserved drift coordinates."""
    if d < 3:
        raise ParameterError(f"structured walks need d >= 3, got d={d}")
    return int(math.floor(d / math.log(d)))


def admissible_floor(d: int) -> int:
    """Guaranteed minimum size 2*(d - band) - period of the admissible set."""
    return 2 * (d - drift_band(d)) - drift_period(d)


@dataclass
class WalkPath:
    """A finite walk of the structured class, built step by step."""

    sites: list[Site]
    d: int
    drift_period: int
    drift_band: int
    _visited: set[Site] = field(repr=False, default_factory=set)

    @classmethod
    def start(cls, d: int) -> "WalkPath":
        period = drift_period(d)
        band = drift_band(d)
        if 2 * (d - band) - period < 1:
            raise ParameterError(f"admissible floor not positive at d={d}")
        o = origin(d)
        return cls(sites=[o], d=d, drift_period=period, drift_band=band, _visited={o})

    @classmethod
    def from_sites(cls, d: int, sites: Sequence[Site]) -> "WalkPath":
        """Wrap an explicit site sequence (first site must be the origin)."""
        if not sites or sites[0] != origin(d):
            raise ParameterError("explicit paths must start at the origin")
        return cls(
            sites=list(sites),
            d=d,
            drift_period=drift_period(d),
            drift_band=drift_band(d),
            _visited=set(sites),
        )

    @property
    def length(self) -> int:
        return len(self.sites) - 1

    @property
    def last(self) -> Site:
        return self.sites[-1]

    def is_drift_step(self, step_index: int) -> bool:
        """Whether the 1-based step producing site ``step_index`` is a drift step."""
        return step_index % self.drift_period == 0

    def append(self, site: Site) -> None:
        self.sites.append(site)
        self._visited.add(site)

    def is_valid(self) -> bool:
        """Membership validator for the structured path class."""
        if self.sites[0] != origin(self.d):
            return False
        if len(set(self.sites)) != len(self.sites):
            return False
        free_axes = self.d - self.drift_band
        for s in range(1, len(self.sites)):
            delta = tuple(a - b for a, b in zip(self.sites[s], self.sites[s - 1]))
            nz = [(i, c) for i, c in enumerate(delta) if c != 0]
            if len(nz) != 1:
                return False
            axis, c = nz[0]
            if self.is_drift_step(s):
                if c != 1 or axis < free_axes:
                    return False
            else:
                if abs(c) != 1 or axis >= free_axes:
                    return False
        return True


def admissible_next(path: WalkPath) -> list[Site]:
    """Unvisited sites one free (non-drift) step from the walk's head.

    Only defined when the next step is a free step; calling it at a
    drift step is a contract error.
    """
    s = len(path.sites)
    if path.is_drift_step(s):
        raise ParameterError(f"step {s} is a drift step; the admissible set is undefined")
    cur = path.last
    visited = path._visited
    out = []
    for axis in range(path.d - path.drift_band):
        c = cur[axis]
        head, tail = cur[:axis], cur[axis + 1 :]
        cand = head + (c + 1,) + tail
        if cand not in visited:
            out.append(cand)
        cand = head + (c - 1,) + tail
        if cand not in visited:
            out.append(cand)
    return out


def step_walk(path: WalkPath, rng: np.random.Generator) -> Site:
    """Extend the walk by one step and return the new site.

    Drift steps pick uniformly among the ``band`` positive drift
    directions; free steps pick uniformly from the admissible set.
    """
    s = len(path.sites)
    cur = path.last
    if path.is_drift_step(s):
        axis = path.d - path.drift_band + int(rng.integers(path.drift_band))
        nxt = cur[:axis] + (cur[axis] + 1,) + cur[axis + 1 :]
    else:
        cands = admissible_next(path)
        if not cands:
            raise AssertionError("empty admissible set; the floor bound excludes this")
        nxt = cands[int(rng.integers(len(cands)))]
    path.append(nxt)
    return nxt


def sample_walk(d: int, n: int, rng: np.random.Generator) -> WalkPath:
    """A structured walk of length n from the origin."""
    if n < 1:
        raise ParameterError(f"walk length must be >= 1, got {n}")
    path = WalkPath.start(d)
    for _ in range(n):
        step_walk(path, rng)
    return path


def drift_weight(x: Site, d: int) -> int:
    """Sum of |coordinates| over the reserved drift band."""
    band = drift_band(d)
    return sum(abs(c) for c in x[d - band :])


@dataclass(frozen=True)
class PairStats:
    """Collision statistics of an ordered walk pair."""

    f_size: int
    k_size: int
    f_minus_k: int


def pair_stats(s_walk: WalkPath | Sequence[Site], v_walk: WalkPath | Sequence[Site], n: int) -> PairStats:
    """Site- and edge-collision counts of two walks up to length n.

    F collects indices i <= n with V_i among S's first n+1 sites; K
    collects indices i <= n-1 whose edge (V_i, V_{i+1}) appears among
    S's first n edges.  Index 0 is always in F (shared origin).
    """
    s_sites = s_walk.sites if isinstance(s_walk, WalkPath) else list(s_walk)
    v_sites = v_walk.sites if isinstance(v_walk, WalkPath) else list(v_walk)
    if len(s_sites) < n + 1 or len(v_sites) < n + 1:
        raise ParameterError(f"both walks must have length >= {n}")
    s_set = set(s_sites[: n + 1])
    s_edges = set(zip(s_sites[:n], s_sites[1 : n + 1]))
    f_idx = [i for i in range(n + 1) if v_sites[i] in s_set]
    k_idx = {i for i in range(n) if (v_sites[i], v_sites[i + 1]) in s_edges}
    f_minus_k = sum(1 for i in f_idx if i not in k_idx)
    return PairStats(f_size=len(f_idx), k_size=len(k_idx), f_minus_k=f_minus_k)


def pair_weight(stats: PairStats, p: ProcessParams) -> float:
    """Second-moment weight of a walk pair.

    2^(F\\K) * ((1+gamma+delta)/gamma)^(F-1) * ((lam+1)/lam)^K; returns
    inf on float overflow (flagged downstream as a heavy tail).
    """
    if stats.f_size < 1:
        raise ParameterError("F must contain the shared origin; got f_size=0")
    log_w = (
        stats.f_minus_k * math.log(2.0)
        + (stats.f_size - 1) * math.log((1.0 + p.gamma + p.delta) / p.gamma)
        + stats.k_size * math.log((p.lam + 1.0) / p.lam)
    )
    try:
        return math.exp(log_w)
    except OverflowError:
        return math.inf


@dataclass
class SawBoundEstimate:
    """Monte Carlo estimate of the second-moment survival lower bound."""

    bound: float
    ci_low: float
    ci_high: float
    mean_weight: float
    se_weight: float
    n_max: int
    replicas: int
    convergence: list[tuple[int, float]]  # (walk length, bound at that length)
    heavy_tail: bool


def estimate_survival_lower_bound(
    d: int, p: ProcessParams, n_max: int, replicas: int, seed: int
) -> SawBoundEstimate:
    """Estimate 1 / E[pair weight] over independent structured walk pairs.

    The limit object lives at infinite walk length; the estimate is taken
    at n_max with a three-point convergence diagnostic at n_max/4,
    n_max/2 and n_max so the truncation error stays visible.  The
    heavy_tail flag fires when the top 1% of sampled weights carries more
    than half of the total mass, signalling an unreliable mean.

    Returns a SawBoundEstimate with a 95% delta-method interval.
    """
    if n_max < 4:
        raise ParameterError(f"n_max must be >= 4, got {n_max}")
    if replicas < 2:
        raise ParameterError(f"replicas must be >= 2, got {replicas}")
    checkpoints = sorted({max(1, n_max // 4), max(1, n_max // 2), n_max})
    sums = {n: 0.0 for n in checkpoints}
    weights_at_max = np.empty(replicas)
    for r in range(replicas):
        rng = substream(seed, r)
        s_walk = sample_walk(d, n_max, rng)
        v_walk = sample_walk(d, n_max, rng)
        for n in checkpoints:
            w = pair_weight(pair_stats(s_walk, v_walk, n), p)
            sums[n] += w
            if n == n_max:
                weights_at_max[r] = w
    mean = float(np.mean(weights_at_max))
    se = float(np.std(weights_at_max, ddof=1) / math.sqrt(replicas))
    top = max(1, replicas // 100)
    tail_mass = float(np.sort(weights_at_max)[-top:].sum())
    total = float(weights_at_max.sum())
    heavy = not math.isfinite(mean) or (total > 0 and tail_mass / total > 0.5)
    bound = 0.0 if not math.isfinite(mean) else 1.0 / mean
    lo = 0.0 if not math.isfinite(mean) else 1.0 / (mean + 1.96 * se)
    denom = mean - 1.96 * se
    hi = 1.0 if (not math.isfinite(mean) or denom <= 1.0) else min(1.0, 1.0 / denom)
    convergence = [
        (n, (replicas / sums[n]) if math.isfinite(sums[n]) and sums[n] > 0 else 0.0)
        for n in checkpoints
    ]
    return SawBoundEstimate(
        bound=bound,
        ci_low=lo,
        ci_high=hi,
        mean_weight=mean,
        se_weight=se,
        n_max=n_max,
        replicas=replicas,
        convergence=convergence,
        heavy_tail=heavy,
    )


def union_lower_bound(
    probs: Sequence[float],
    pair_probs: Sequence[Sequence[float]],
    weights: Sequence[float],
) -> float:
    """Weighted second-moment lower bound on P(union of events).

    Given P(B_i) > 0, the joint matrix P(B_i & B_j) and positive weights
    p_i summing to one, the union probability is at least
    1 / sum_ij p_i p_j P(B_i & B_j) / (P(B_i) P(B_j)).
    """
    n = len(probs)
    if n == 0:
        raise ParameterError("need at least one event")
    if len(weights) != n or len(pair_probs) != n or any(len(row) != n for row in pair_probs):
        raise ParameterError("probs, weights and pair_probs dimensions must agree")
    if any(q <= 0.0 for q in probs):
        raise DomainError("every event must have strictly positive probability")
    if any(w <= 0.0 for w in weights):
        raise ParameterError("weights must be positive")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ParameterError(f"weights must sum to 1 within 1e-12, got {sum(weights)}")
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += weights[i] * weights[j] * pair_probs[i][j] / (probs[i] * probs[j])
    if total <= 0.0:
        raise DomainError("pair-probability mass vanished; bound undefined")
    return 1.0 / total


@dataclass(frozen=True)
class DirectUnionEstimate:
    """Plain Monte Carlo estimate of the union probability over the walk class."""

    p_hat: float
    se: float
    successes: int
    replicas: int


def estimate_union_direct(
    d: int, n: int, p: ProcessParams, replicas: int, seed: int, block: int = 10000
) -> DirectUnionEstimate:
    """Estimate P(some length-n structured path carries a full chain).

    Only dimensions with drift period 1 (3 <= d <= 7) are supported:
    there every structured path is a monotone path in the drift band, so
    the union event equals survival of a level-by-level reachability
    front, which is evaluated with lazily drawn clocks.
    """
    if drift_period(d) != 1:
        raise ParameterError(
            f"direct union estimation needs drift period 1 (3 <= d <= 7), got d={d}"
        )
    if n < 1:
        raise ParameterError(f"path length must be >= 1, got {n}")
    band = drift_band(d)
    axes = range(d - band, d)
    o = origin(d)
    successes = 0
    done = 0
    blk = 0
    while done < replicas:
        todo = min(block, replicas - done)
        buf = DrawBuffer(substream(seed, blk))
        for _ in range(todo):
            clocks = LazyClocks(p, buf)
            level = [o]
            for _step in range(n):
                nxt: list[Site] = []
                accepted: set[Site] = set()
                for x in level:
                    wx = clocks.recovery(x)
                    for axis in axes:
                        y = x[:axis] + (x[axis] + 1,) + x[axis + 1 :]
                        if y in accepted:
                            continue
                        if clocks.transmission(x, y) < wx and clocks.maturation(
                            y
                        ) < clocks.removal(y):
                            accepted.add(y)
                            nxt.append(y)
                if not nxt:
                    level = []
                    break
                level = nxt
            if level:
                successes += 1
        done += todo
        blk += 1
    p_hat = successes / replicas
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / replicas) / replicas)
    return DirectUnionEstimate(p_hat=p_hat, se=se, successes=successes, replicas=replicas)

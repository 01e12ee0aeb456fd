"""Monte Carlo oracle for route discovery, reputation and interception.

Random numbers come from a counter-based hash: every uniform draw is a pure
function of ``(seed, episode, hop, stream)``. Episodes are therefore
independent of evaluation order, and a batch can be simulated as numpy
vectors while ``simulate_episode`` replays any single episode bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import router
from .grid import HexGrid
from .security import ReputationTracker
from .spectrum import PrimaryTraffic, free_channel_pmf

DEFAULT_EPISODES = 100_000

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# stream ids inside one (episode, hop) cell
_SOURCE = 0
_WILLING = 1  # .. 6, one per priority position
_CHANNEL = 7
_PU = 8
_TRUST = 9


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, episode, hop, stream) -> np.ndarray:
    """Uniform [0, 1) draws keyed by (seed, episode, hop, stream); broadcasts."""
    with np.errstate(over="ignore"):
        z = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        z = _mix(z ^ np.asarray(episode, dtype=np.uint64))
        z = _mix((z + _GOLDEN) ^ np.asarray(hop, dtype=np.uint64))
        z = _mix((z + _GOLDEN) ^ np.asarray(stream, dtype=np.uint64))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass
class Episode:
    source: int
    trace: list[int]
    reached: bool
    hops: int
    interruptions: int
    draws: list[dict] = field(default_factory=list)

    @property
    def outcome(self) -> str:
        return "D" if self.reached else "nr"


@dataclass
class McEstimate:
    episodes: int
    seed: int
    mean_hops: float
    hops_se: float
    p_D: float
    p_D_se: float
    p_nr: float
    p_nr_se: float
    hop_counts: np.ndarray = field(repr=False, default=None)
    # position_counts[deg, m]: hops from a degree-``deg`` subcell that advanced
    # through position m (m = 0 means the hop failed and the walk hit nr)
    position_counts: np.ndarray = field(repr=False, default=None)

    CSV_HEADER = ("episodes", "seed", "tau_hat", "tau_se", "p_D_hat", "p_D_se", "p_nr_hat", "p_nr_se")

    def row(self):
        return (self.episodes, self.seed, self.mean_hops, self.hops_se,
                self.p_D, self.p_D_se, self.p_nr, self.p_nr_se)


class _Tables:
    def __init__(self, grid: HexGrid, model: router.RelayModel, sources):
        n = len(grid)
        self.nbr = np.full((n, 6), -1, dtype=np.int64)
        self.trust = np.ones((n, 6))
        self.deg = np.zeros(n, dtype=np.int64)
        for i in range(n):
            if i == grid.destination:
                continue
            order = router.relay_order(grid, model, i)
            self.deg[i] = len(order)
            for m, j in enumerate(order):
                self.nbr[i, m] = j
                self.trust[i, m] = model.trust(i, j)
        f = router.initial_distribution(grid, sources)
        self.src_ids = np.array(sorted(f), dtype=np.int64)
        self.src_cdf = np.cumsum([f[s] for s in self.src_ids])
        self.src_cdf[-1] = 1.0

    def draw_sources(self, seed, episodes):
        u = uniforms(seed, episodes, 0, _SOURCE)
        return self.src_ids[np.searchsorted(self.src_cdf, u, side="right")]


def simulate_episode(grid: HexGrid, model: router.RelayModel, seed: int, episode: int = 0,
                     sources=None, max_hops: int = 100_000) -> Episode:
    """Replay one route discovery episode hop by hop.

    At each hop the SU polls neighbours in priority order until one is willing
    (probability p each). The chosen relay then needs a free channel (p_a), no
    PU return during the hop (xi) and, in SecPR, a trusted connection (s_m).
    Any of those failing, or no willing neighbour, ends the walk in ``nr``.
    """
    tab = _Tables(grid, model, sources)
    state = int(tab.draw_sources(seed, np.array([episode]))[0])
    ep = Episode(state, [state], False, 0, 0)
    secure = model.mode == router.SECPR
    for hop in range(max_hops):
        deg = int(tab.deg[state])
        pos = -1
        for m in range(deg):
            if uniforms(seed, episode, hop, _WILLING + m) < model.availability:
                pos = m
                break
        ch = bool(uniforms(seed, episode, hop, _CHANNEL) < model.channel_availability)
        pu = bool(uniforms(seed, episode, hop, _PU) < model.link_reliability)
        tr = True
        if secure and pos >= 0:
            tr = bool(uniforms(seed, episode, hop, _TRUST) < tab.trust[state, pos])
        ep.hops += 1
        ep.draws.append({"position": pos + 1, "channel": ch, "no_return": pu, "trusted": tr})
        if pos < 0 or not (ch and pu and tr):
            if pos >= 0 and ch and not pu:
                ep.interruptions += 1
            return ep
        state = int(tab.nbr[state, pos])
        ep.trace.append(state)
        if state == grid.destination:
            ep.reached = True
            return ep
    raise RuntimeError("episode did not terminate")


def run_monte_carlo(grid: HexGrid, model: router.RelayModel, episodes: int = DEFAULT_EPISODES,
                    seed: int = 0, sources=None, max_hops: int = 100_000) -> McEstimate:
    """Vectorised batch of ``episodes`` route discoveries (same draws as ``simulate_episode``)."""
    if episodes < 1:
        raise ValueError("need at least one episode")
    tab = _Tables(grid, model, sources)
    ids = np.arange(episodes, dtype=np.uint64)
    state = tab.draw_sources(seed, ids)
    hops = np.zeros(episodes, dtype=np.int64)
    reached = np.zeros(episodes, dtype=bool)
    active = np.ones(episodes, dtype=bool)
    positions = np.zeros((7, 7), dtype=np.int64)
    secure = model.mode == router.SECPR
    for hop in range(max_hops):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        s = state[idx]
        ep = ids[idx]
        deg = tab.deg[s]
        pos = np.full(idx.size, -1, dtype=np.int64)
        for m in range(6):
            will = (m < deg) & (pos < 0)
            will &= uniforms(seed, ep, hop, _WILLING + m) < model.availability
            pos[will] = m
        ok = pos >= 0
        ok &= uniforms(seed, ep, hop, _CHANNEL) < model.channel_availability
        ok &= uniforms(seed, ep, hop, _PU) < model.link_reliability
        safe_pos = np.where(pos >= 0, pos, 0)
        if secure:
            ok &= uniforms(seed, ep, hop, _TRUST) < tab.trust[s, safe_pos]
        hops[idx] += 1
        np.add.at(positions, (deg, np.where(ok, pos + 1, 0)), 1)
        nxt = tab.nbr[s, safe_pos]
        state[idx[ok]] = nxt[ok]
        arrived = ok & (nxt == grid.destination)
        reached[idx[arrived]] = True
        active[idx[~ok | arrived]] = False
    else:
        raise RuntimeError("episodes did not terminate")
    hop_f = hops.astype(float)
    pD = reached.mean()
    se_h = hop_f.std(ddof=1) / np.sqrt(episodes) if episodes > 1 else 0.0
    se_p = reached.std(ddof=1) / np.sqrt(episodes) if episodes > 1 else 0.0
    return McEstimate(
        episodes, seed, float(hop_f.mean()), float(se_h), float(pD), float(se_p),
        float(1.0 - pD), float(se_p), np.bincount(hops), positions,
    )


# --- reputation -----------------------------------------------------------


@dataclass(frozen=True)
class ReputationScenario:
    """Relay that delivers its advertised level only part of the time.

    In ``distribution`` mode the experienced level is the draw itself. In
    ``protocol`` mode the draw is the relay's willingness p, and the experienced
    level is the resulting total relaying probability over ``degree`` positions.
    """

    advertised: float = 0.9
    delivered_prob: float = 0.15
    low: float = 0.5
    high: float = 0.9
    mode: str = "distribution"
    channel_availability: float = 1.0
    link_reliability: float = 1.0
    degree: int = 6

    def draw(self, rng: np.random.Generator) -> float:
        if rng.random() < self.delivered_prob:
            level = self.advertised
        else:
            level = rng.uniform(self.low, self.high)
        if self.mode == "distribution":
            return level
        model = router.RelayModel(level, self.channel_availability, self.link_reliability)
        return router.total_relay_prob(model, self.degree)[0]

    def mean_current(self) -> float:
        """Closed-form E[min(s_e / s_a, 1)] in distribution mode."""
        a, lo, hi, q = self.advertised, self.low, self.high, self.delivered_prob
        if hi <= a:
            uni = (lo + hi) / (2 * a)
        elif lo >= a:
            uni = 1.0
        else:
            uni = ((a * a - lo * lo) / (2 * a) + (hi - a)) / (hi - lo)
        return q + (1 - q) * uni


def simulate_reputation(scenario: ReputationScenario, episodes: int, weight: float, seed: int = 0):
    """Reputation trajectory: list of (episode, s_c, s_ij)."""
    rng = np.random.default_rng(seed)
    tracker = ReputationTracker(scenario.advertised, weight, episodes)
    out = []
    for t in range(1, episodes + 1):
        se = scenario.draw(rng)
        s = tracker.observe(se)
        out.append((t, tracker.current(se), s))
    return out


# --- interception -----------------------------------------------------------


def simulate_interception(sigmas, hops: int, trials: int, seed: int = 0):
    """Per-hop Bernoulli interception; returns (p_d_hat, standard error)."""
    rng = np.random.default_rng(seed)
    caught = np.ones((trials, hops), dtype=bool)
    for s in sigmas:
        caught &= rng.random((trials, hops)) < 1 - s
    hit = caught.any(axis=1)
    return float(hit.mean()), float(hit.std(ddof=1) / np.sqrt(trials))


# --- primary queue ----------------------------------------------------------


def simulate_primary_queue(traffic: PrimaryTraffic, events: int, seed: int = 0):
    """Event-driven M/M/c run; returns the time-averaged free-channel pmf (b = 0..c)."""
    rng = np.random.default_rng(seed)
    lam, mu, c = traffic.arrival_rate, traffic.service_rate, traffic.channels
    occupancy = np.zeros(c + 1)  # time spent with b free channels
    n = 0
    for _ in range(events):
        out_rate = mu * min(n, c)
        rate = lam + out_rate
        dt = rng.exponential(1 / rate)
        occupancy[max(c - n, 0)] += dt
        n += 1 if rng.random() * rate < lam else -1
    return occupancy / occupancy.sum()


def simulate_pu_return(traffic: PrimaryTraffic, t: float, probes: int, seed: int = 0):
    """Physical PU-return frequency over an interval ``t`` (returns estimate, SE).

    The probe starts from the stationary state, holds one free channel unknown
    to the operator, and is hit when a new PU arrival picks that channel among
    the free ones. Departures during the interval are simulated too.
    """
    rng = np.random.default_rng(seed)
    lam, mu, c = traffic.return_rate, traffic.service_rate, traffic.channels
    pmf = free_channel_pmf(traffic)
    hits = np.zeros(probes, dtype=bool)
    for k in range(probes):
        b = int(rng.choice(c + 1, p=pmf))
        if b == 0:
            continue  # no channel to hold; not counted as a return
        busy = c - b
        clock = 0.0
        while True:
            rate = lam + mu * busy
            clock += rng.exponential(1 / rate)
            if clock > t:
                break
            if rng.random() * rate < lam:
                free = c - busy
                if rng.random() < 1 / free:
                    hits[k] = True
                    break
                busy += 1
            else:
                busy -= 1
    return float(hits.mean()), float(hits.std(ddof=1) / np.sqrt(probes))

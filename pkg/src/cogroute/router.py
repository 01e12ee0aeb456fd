"""Route discovery as an absorbing Markov chain over the tessellation.

States are the non-destination subcells (transient) plus two absorbing states:
``D`` (destination reached) and ``nr`` (no route).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .grid import HexGrid, neighbor_priority

SAPR = "sapr"
SECPR = "secpr"
ABSORBING = ("D", "nr")


class ChainError(ValueError):
    pass


@dataclass(frozen=True)
class RelayModel:
    """Per-hop relaying behaviour.

    ``reputation`` is only read in SecPR mode. It may be a constant, or a
    callable ``(i, j) -> s_ij`` for the directed pair (relaying subcell, relay).
    """

    availability: float
    channel_availability: float = 1.0
    link_reliability: float = 1.0
    mode: str = SAPR
    reputation: float | Callable[[int, int], float] = 1.0
    reputation_first: bool = False

    def __post_init__(self):
        for name in ("availability", "channel_availability", "link_reliability"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ChainError(f"{name} must be in [0, 1], got {v!r}")
        if self.mode not in (SAPR, SECPR):
            raise ChainError(f"unknown routing mode {self.mode!r}")
        if not callable(self.reputation) and not 0.0 <= self.reputation <= 1.0:
            raise ChainError("reputation must be in [0, 1]")

    def trust(self, i: int, j: int) -> float:
        if self.mode != SECPR:
            return 1.0
        s = self.reputation(i, j) if callable(self.reputation) else self.reputation
        if not 0.0 <= s <= 1.0:
            raise ChainError(f"reputation s({i},{j}) = {s} outside [0, 1]")
        return s


def relay_prob(model: RelayModel, m: int, trust: float = 1.0) -> float:
    """Probability that the relay at priority position ``m`` carries the hop."""
    if not 1 <= m <= 6:
        raise ChainError("priority position must be in 1..6")
    p = model.availability
    pm = model.channel_availability * p * (1 - p) ** (m - 1) * model.link_reliability
    if model.mode == SECPR:
        pm = pm * trust
    return pm


def total_relay_prob(model: RelayModel, degree: int = 6, trusts: Sequence[float] | None = None):
    """Return ``(p_t, p_0)``: relay mass over ``degree`` positions and its complement."""
    if not 1 <= degree <= 6:
        raise ChainError("degree must be in 1..6")
    trusts = trusts if trusts is not None else [1.0] * degree
    pt = sum(relay_prob(model, m, trusts[m - 1]) for m in range(1, degree + 1))
    return pt, 1.0 - pt


def relay_order(grid: HexGrid, model: RelayModel, source: int) -> list[int]:
    order = neighbor_priority(grid, source, grid.destination)
    if model.mode == SECPR and model.reputation_first:
        # non-standard extension: most trusted relay first, distance order breaks ties
        order = sorted(order, key=lambda j: -model.trust(source, j))
    return order


@dataclass
class AbsorbingChain:
    """Canonical form: ``R`` holds transient->(D, nr), ``Q`` transient->transient."""

    transient: list[int]
    Q: np.ndarray
    R: np.ndarray
    f: np.ndarray
    position: dict[int, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.position:
            self.position = {s: k for k, s in enumerate(self.transient)}
        n = len(self.transient)
        if self.Q.shape != (n, n) or self.R.shape != (n, 2) or self.f.shape != (n,):
            raise ChainError("inconsistent block shapes")
        if np.any(self.Q < 0) or np.any(self.R < -1e-15):
            raise ChainError("negative transition probability")
        rows = self.Q.sum(axis=1) + self.R.sum(axis=1)
        if np.max(np.abs(rows - 1)) > 1e-12:
            raise ChainError("rows of [R | Q] must sum to 1")
        if abs(self.f.sum() - 1) > 1e-12 or np.any(self.f < 0):
            raise ChainError("initial distribution must be a probability vector")

    @property
    def size(self) -> int:
        return len(self.transient)

    def canonical(self) -> np.ndarray:
        """Full matrix with absorbing states (D, nr) first."""
        n = self.size
        P = np.zeros((n + 2, n + 2))
        P[0, 0] = P[1, 1] = 1.0
        P[2:, :2] = self.R
        P[2:, 2:] = self.Q
        return P

    def triples(self):
        """(from_state, to_state, probability) for every nonzero transition."""
        labels = list(ABSORBING) + [str(s) for s in self.transient]
        P = self.canonical()
        for a, b in zip(*np.nonzero(P)):
            yield labels[a], labels[b], float(P[a, b])

    def permuted(self, perm: Sequence[int]) -> "AbsorbingChain":
        perm = list(perm)
        return AbsorbingChain(
            [self.transient[k] for k in perm],
            self.Q[np.ix_(perm, perm)], self.R[perm], self.f[perm],
        )


def initial_distribution(grid: HexGrid, sources=None) -> dict[int, float]:
    """Normalise a source spec: None (uniform), a subcell id, or an iterable of ids."""
    candidates = [k for k in range(len(grid)) if k != grid.destination]
    if sources is None:
        chosen = candidates
    elif isinstance(sources, (int, np.integer)):
        chosen = [int(sources)]
    else:
        chosen = sorted(set(int(s) for s in sources))
    if not chosen or any(s == grid.destination or not 0 <= s < len(grid) for s in chosen):
        raise ChainError(f"invalid source set {sources!r}")
    return {s: 1.0 / len(chosen) for s in chosen}


def build_chain(grid: HexGrid, model: RelayModel, sources=None) -> AbsorbingChain:
    if len(grid.neighbors) != len(grid):
        raise ChainError("malformed grid: neighbour table does not match subcells")
    transient = [k for k in range(len(grid)) if k != grid.destination]
    pos = {s: k for k, s in enumerate(transient)}
    n = len(transient)
    Q = np.zeros((n, n))
    R = np.zeros((n, 2))
    for i in transient:
        row = pos[i]
        order = relay_order(grid, model, i)
        if not 1 <= len(order) <= 6:
            raise ChainError(f"subcell {i} has {len(order)} neighbours")
        pt = 0.0
        for m, j in enumerate(order, start=1):
            pm = relay_prob(model, m, model.trust(i, j))
            pt += pm
            if j == grid.destination:
                R[row, 0] += pm
            else:
                Q[row, pos[j]] += pm
        R[row, 1] = 1.0 - pt
    f = np.zeros(n)
    for s, w in initial_distribution(grid, sources).items():
        f[pos[s]] = w
    return AbsorbingChain(transient, Q, R, f, pos)


def _solve(chain: AbsorbingChain, rhs: np.ndarray) -> np.ndarray:
    A = np.eye(chain.size) - chain.Q
    try:
        x = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ChainError("I - Q is singular: some state never reaches absorption") from exc
    resid = np.max(np.abs(A @ x - rhs))
    if not np.isfinite(resid) or resid > 1e-12 * max(1.0, np.max(np.abs(x))):
        raise ChainError(f"ill-conditioned solve (residual {resid:.3g})")
    return x


def _average(f: np.ndarray, x: np.ndarray) -> float:
    # exactly rounded, so uniform averages of identical values come back unchanged
    return math.fsum(f * x)


def expected_hops(chain: AbsorbingChain, dwell: float | Sequence[float] = 1.0):
    """Mean time to absorption per transient state, and its average under ``f``."""
    if np.isscalar(dwell):
        tau = dwell * _solve(chain, np.ones(chain.size))
    else:
        tau = _solve(chain, np.asarray(dwell, dtype=float))
    return tau, _average(chain.f, tau)


def absorption(chain: AbsorbingChain):
    """Absorption matrix ``E`` and ``(p_D, p_nr)`` under the initial distribution."""
    E = _solve(chain, chain.R)
    return E, _average(chain.f, E[:, 0]), _average(chain.f, E[:, 1])


def hop_distribution(chain: AbsorbingChain, max_hops: int) -> np.ndarray:
    """P(absorbed at step k) for k = 1..max_hops (phase-type law of the route length)."""
    exit_mass = chain.R.sum(axis=1)
    out = np.empty(max_hops)
    v = chain.f.copy()
    for k in range(max_hops):
        out[k] = v @ exit_mass
        v = v @ chain.Q
    return out


def route_reliability(link_rel: float, hops: float) -> float:
    if not 0 <= link_rel <= 1 or hops < 0:
        raise ValueError("need link reliability in [0, 1] and hops >= 0")
    return link_rel**hops


def min_link_reliability(route_rel_min: float, hops: float) -> float:
    """Per-link reliability needed so ``hops`` i.i.d. links reach ``route_rel_min``."""
    if not 0 < route_rel_min <= 1 or hops <= 0:
        raise ValueError("need route reliability in (0, 1] and hops > 0")
    return route_rel_min ** (1.0 / hops)


def solve(grid: HexGrid, model: RelayModel, sources=None):
    """Convenience: build the chain and return ``(chain, tau_bar, p_D, p_nr)``."""
    chain = build_chain(grid, model, sources)
    _, tau = expected_hops(chain)
    _, pD, pnr = absorption(chain)
    return chain, tau, pD, pnr


def iter_sources(spec: str | int | Iterable[int] | None, grid: HexGrid):
    """Resolve a config-level source spec ('uniform', 'outer', 'ring:k', id list)."""
    if spec is None or spec == "uniform":
        return None
    if spec == "outer":
        return grid.ring_members(grid.ring_count)
    if isinstance(spec, str) and spec.startswith("ring:"):
        ring = int(spec.split(":", 1)[1])
        if not 1 <= ring <= grid.ring_count:
            raise ChainError(f"ring {ring} outside 1..{grid.ring_count}")
        return grid.ring_members(ring)
    if isinstance(spec, str):
        raise ChainError(f"unknown source spec {spec!r}")
    return spec

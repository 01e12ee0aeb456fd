"""Channel planning for reliability and delay targets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import router
from .grid import HexGrid
from .spectrum import PrimaryTraffic, SecondaryDemand, availability, link_reliability

SWITCH_GRID_POINTS = 10_000
_CEIL_SLACK = 1e-9


class InfeasibleQoS(ValueError):
    pass


@dataclass(frozen=True)
class QoSRequest:
    delay_max: float
    link_reliability_min: float | None = None
    route_reliability_min: float | None = None

    def __post_init__(self):
        if self.delay_max < 1:
            raise ValueError("delay_max must be >= 1 hop")
        if self.link_reliability_min is None and self.route_reliability_min is None:
            raise ValueError("give link_reliability_min or route_reliability_min")
        for v in (self.link_reliability_min, self.route_reliability_min):
            if v is not None and not 0 < v <= 1:
                raise ValueError("reliability targets must be in (0, 1]")

    def link_target(self, hops: float | None = None) -> float:
        if self.link_reliability_min is not None:
            return self.link_reliability_min
        return router.min_link_reliability(self.route_reliability_min, hops or self.delay_max)


@dataclass(frozen=True)
class SwitchPlan:
    switching_time: float
    switch_count: float
    backup_channels: int
    delay_channels: int | None = None
    purchase_count: int | None = None

    CSV_HEADER = ("xi_min", "tau_max", "t_w_star", "n_w", "w_min", "w_star", "w_R_min")


def _ceil(x: float) -> int:
    return max(1, math.ceil(x - _CEIL_SLACK))


def switch_objective(traffic: PrimaryTraffic, t, xi_min: float):
    t = np.asarray(t, dtype=float)
    return t * (link_reliability(traffic, t) - xi_min)


def optimal_switch_time(
    traffic: PrimaryTraffic, demand: SecondaryDemand, xi_min: float, points: int = SWITCH_GRID_POINTS
) -> float:
    """Longest-paying channel switching interval in (0, t_S] (grid search).

    Ties resolve toward the larger interval.
    """
    if not 0 < xi_min < 1:
        raise ValueError("xi_min must be in (0, 1)")
    ts = demand.service_time * np.arange(1, points + 1) / points
    xi = link_reliability(traffic, ts)
    if not np.any(xi >= xi_min):
        raise InfeasibleQoS(f"link reliability {xi_min} unattainable at any switching interval")
    obj = ts * (xi - xi_min)
    best = points - 1 - int(np.argmax(obj[::-1]))
    return float(ts[best])


def min_backup_channels(traffic: PrimaryTraffic, demand: SecondaryDemand, xi_min: float) -> int:
    tw = optimal_switch_time(traffic, demand, xi_min)
    n_w = demand.service_time / tw
    if demand.primary_service_time >= demand.service_time:
        return _ceil(n_w)
    return _ceil(n_w * demand.primary_service_time / demand.service_time)


def relay_model_for_channels(
    traffic: PrimaryTraffic, demand: SecondaryDemand, p: float, w: int, **model_kw
) -> router.RelayModel:
    """Relay model with ``w`` backup channels switched every t_S / w."""
    return router.RelayModel(
        availability=p,
        channel_availability=availability(traffic, w),
        link_reliability=float(link_reliability(traffic, demand.service_time / w)),
        **model_kw,
    )


def delay_curve(grid: HexGrid, traffic, demand, p: float, channels, sources=None, **model_kw):
    """Mean route length tau(p, w) for each w in ``channels``."""
    out = {}
    for w in channels:
        model = relay_model_for_channels(traffic, demand, p, w, **model_kw)
        _, out[w] = router.expected_hops(router.build_chain(grid, model, sources))
    return out


def optimal_channels_for_delay(
    grid: HexGrid, traffic: PrimaryTraffic, demand: SecondaryDemand, p: float,
    delay_max: float, w_min: int, sources=None, **model_kw,
) -> int:
    """Backup channel count whose mean route length is closest to ``delay_max``."""
    if w_min < 1 or delay_max < 1:
        raise ValueError("need w_min >= 1 and delay_max >= 1")
    candidates = range(w_min, traffic.channels + 1)
    if not candidates:
        raise InfeasibleQoS(f"w_min={w_min} exceeds the {traffic.channels}-channel pool")
    taus = delay_curve(grid, traffic, demand, p, candidates, sources, **model_kw)
    return min(candidates, key=lambda w: ((delay_max - taus[w]) ** 2, w))


def channels_to_buy(w_star: int, demand: SecondaryDemand) -> int:
    if w_star < 1:
        raise ValueError("w* must be >= 1")
    tp, ts = demand.primary_service_time, demand.service_time
    if tp <= ts:
        return int(w_star)
    return _ceil(w_star * tp / ts)


def per_hop_channels(w_route: int, demand: SecondaryDemand) -> int:
    """Backup channels per hop carried by ``w_route`` purchased channels (inverse of the buy rule)."""
    tp, ts = demand.primary_service_time, demand.service_time
    if tp <= ts:
        return int(w_route)
    return max(1, math.floor(w_route * ts / tp + _CEIL_SLACK))


def plan(
    grid: HexGrid, traffic: PrimaryTraffic, demand: SecondaryDemand, p: float,
    request: QoSRequest, sources=None, **model_kw,
) -> SwitchPlan:
    xi_min = request.link_target()
    tw = optimal_switch_time(traffic, demand, xi_min)
    w_min = min_backup_channels(traffic, demand, xi_min)
    w_star = optimal_channels_for_delay(grid, traffic, demand, p, request.delay_max, w_min, sources, **model_kw)
    return SwitchPlan(tw, demand.service_time / tw, w_min, w_star, channels_to_buy(w_star, demand))

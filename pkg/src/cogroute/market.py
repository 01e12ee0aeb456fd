"""Throughput, secure throughput, usage-based pricing and purchase optimisation."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from . import qos, router
from .grid import HexGrid, route_capacity
from .security import SecurityEnv, interception, robustness
from .spectrum import PrimaryTraffic, SecondaryDemand


@dataclass(frozen=True)
class PricingParams:
    fee_per_channel: float = 0.01
    fee_per_time: float = 0.01
    utility_scale: float = 0.01
    service_time: float | None = None  # per-hop time billed; None means 1/mu_S

    def __post_init__(self):
        if min(self.fee_per_channel, self.fee_per_time, self.utility_scale) < 0:
            raise ValueError("fees and utility scale must be >= 0")


@dataclass(frozen=True)
class RouteReport:
    channels: int
    hops: float
    p_D: float
    p_nr: float
    route_reliability: float
    capacity: float
    throughput: float
    p_nd: float
    secure_throughput: float
    price: float
    utility: float

    CSV_HEADER = ("w_R", "tau", "p_D", "p_nr", "xi_R", "c_R", "T", "p_nd", "T_s", "price", "U")

    def row(self):
        return tuple(asdict(self).values())


def throughput(capacity: float, K: int, hops: float) -> float:
    if hops <= 0:
        raise ValueError("no route: hops must be > 0")
    if K < 1:
        raise ValueError("K must be >= 1")
    return capacity / (K * hops)


def secure_throughput(p_nd: float, thr: float) -> float:
    if not 0 <= p_nd <= 1:
        raise ValueError("p_nd must be in [0, 1]")
    return p_nd * thr


def price(channels: int, hops: float, hop_time: float, fees: PricingParams) -> float:
    if channels < 1:
        raise ValueError("at least one channel must be bought")
    return channels * fees.fee_per_channel + hops * hop_time * fees.fee_per_time


def evaluate_route(
    grid: HexGrid, traffic: PrimaryTraffic, demand: SecondaryDemand, p: float,
    env: SecurityEnv, fees: PricingParams, channels: int, link_sinr: float,
    sources=None, **model_kw,
) -> RouteReport:
    """Closed-form metrics when ``channels`` are bought for the route."""
    w = qos.per_hop_channels(channels, demand)
    model = qos.relay_model_for_channels(traffic, demand, p, w, **model_kw)
    chain, tau, pD, pnr = router.solve(grid, model, sources)
    cap = route_capacity(link_sinr, channels)
    thr = throughput(cap, grid.reuse_factor, tau)
    _, p_nd = interception(*robustness(env), tau)
    thr_s = secure_throughput(p_nd, thr)
    hop_time = fees.service_time if fees.service_time is not None else demand.service_time
    cost = price(channels, tau, hop_time, fees)
    return RouteReport(
        channels, tau, pD, pnr, router.route_reliability(model.link_reliability, tau),
        cap, thr, p_nd, thr_s, cost, thr_s - fees.utility_scale * cost,
    )


def optimize_purchase(
    grid: HexGrid, traffic: PrimaryTraffic, demand: SecondaryDemand, p: float,
    env: SecurityEnv, fees: PricingParams, w_route_min: int, link_sinr: float,
    sources=None, **model_kw,
):
    """Exhaustive utility maximisation over w_R in [w_route_min, c].

    Returns ``(w_R*, best report, all reports)``; ties go to fewer channels.
    """
    if w_route_min < 1:
        raise ValueError("w_R,min must be >= 1")
    candidates = range(w_route_min, traffic.channels + 1)
    if not candidates:
        raise qos.InfeasibleQoS(f"w_R,min={w_route_min} exceeds the {traffic.channels}-channel pool")
    reports = [
        evaluate_route(grid, traffic, demand, p, env, fees, w, link_sinr, sources, **model_kw)
        for w in candidates
    ]
    best = reports[0]
    for rep in reports[1:]:
        if rep.utility > best.utility:
            best = rep
    return best.channels, best, reports

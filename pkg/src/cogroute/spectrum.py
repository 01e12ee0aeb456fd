"""Primary-network occupancy (M/M/c) and PU-return probabilities.

Free-channel probabilities are indexed by ``b``, the number of channels the
primary operator is not using. Index 0 carries every state where all ``c``
channels are busy (including the waiting queue), so the full vector sums to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class UnstableSystemError(ValueError):
    pass


@dataclass(frozen=True)
class PrimaryTraffic:
    """Primary arrival/service rates and the operator's channel pool.

    ``arrival_scale`` multiplies the arrival rate seen during an SU transmission
    interval (PU return) without touching the occupancy ratio ``r_p``. It is the
    knob tuned by calibration; 1.0 means the printed model.

    ``count_all_free`` selects whether availability sums include the state with
    every channel free (``b = c``).
    """

    arrival_rate: float
    service_rate: float
    channels: int = 10
    arrival_scale: float = 1.0
    count_all_free: bool = True

    def __post_init__(self):
        if self.arrival_rate < 0 or self.service_rate <= 0:
            raise ValueError("arrival_rate must be >= 0 and service_rate > 0")
        if int(self.channels) != self.channels or self.channels < 2:
            raise ValueError("channel count must be an integer >= 2")
        if self.arrival_scale <= 0:
            raise ValueError("arrival_scale must be > 0")
        if self.load >= 1:
            raise UnstableSystemError(f"rho_p = {self.load:.4g} >= 1: primary queue is unstable")

    @property
    def offered_load(self) -> float:
        return self.arrival_rate / self.service_rate

    @property
    def load(self) -> float:
        return self.offered_load / self.channels

    @property
    def service_time(self) -> float:
        return 1.0 / self.service_rate

    @property
    def return_rate(self) -> float:
        return self.arrival_rate * self.arrival_scale

    def scaled(self, scale: float) -> "PrimaryTraffic":
        return PrimaryTraffic(self.arrival_rate, self.service_rate, self.channels, scale, self.count_all_free)


@dataclass(frozen=True)
class SecondaryDemand:
    service_rate: float
    primary_service_rate: float

    def __post_init__(self):
        if self.service_rate <= 0 or self.primary_service_rate <= 0:
            raise ValueError("service rates must be > 0")

    @property
    def service_time(self) -> float:
        return 1.0 / self.service_rate

    @property
    def primary_service_time(self) -> float:
        return 1.0 / self.primary_service_rate

    @classmethod
    def for_traffic(cls, service_rate: float, traffic: PrimaryTraffic) -> "SecondaryDemand":
        return cls(service_rate, traffic.service_rate)


def empty_probability(traffic: PrimaryTraffic) -> float:
    r, c = traffic.offered_load, traffic.channels
    head = sum(r**n / math.factorial(n) for n in range(c))
    tail = r**c / (math.factorial(c) * (1 - traffic.load))
    return 1.0 / (head + tail)


def free_channel_pmf(traffic: PrimaryTraffic) -> np.ndarray:
    """Steady-state probability that exactly ``b`` channels are free, b = 0..c."""
    r, c = traffic.offered_load, traffic.channels
    p0 = empty_probability(traffic)
    pmf = np.empty(c + 1)
    for b in range(1, c):
        pmf[b] = r ** (c - b) / math.factorial(c - b) * p0
    pmf[c] = p0
    pmf[0] = r**c / (math.factorial(c) * (1 - traffic.load)) * p0
    return pmf


def _upper(traffic: PrimaryTraffic) -> int:
    return traffic.channels if traffic.count_all_free else traffic.channels - 1


def availability(traffic: PrimaryTraffic, required: int = 1) -> float:
    """Probability that at least ``required`` channels are free."""
    if not 1 <= required <= traffic.channels:
        raise ValueError(f"required channels must be in 1..{traffic.channels}")
    pmf = free_channel_pmf(traffic)
    return float(pmf[required:_upper(traffic) + 1].sum())


def pu_return_given_b(rate: float, t, free: int):
    """Probability that one of ``free`` held channels is reclaimed within ``t``.

    Poisson arrivals truncated at ``free``; no renormalisation. Accepts an array
    for ``t``.
    """
    if free < 1:
        raise ValueError("at least one free channel is required")
    x = rate * np.asarray(t, dtype=float)
    if np.any(x < 0):
        raise ValueError("rate * t must be >= 0")
    total = np.zeros_like(x)
    term = np.exp(-x)  # k = 0 Poisson term
    for k in range(1, free + 1):
        term = term * x / k
        total = total + k / free * term
    return total if total.ndim else float(total)


def pu_return(traffic: PrimaryTraffic, t):
    """Average PU-return probability over the free-channel distribution."""
    pmf = free_channel_pmf(traffic)
    acc = 0.0
    for b in range(1, _upper(traffic) + 1):
        acc = acc + pmf[b] * pu_return_given_b(traffic.return_rate, t, b)
    return acc


def link_reliability(traffic: PrimaryTraffic, t):
    return 1.0 - pu_return(traffic, t)

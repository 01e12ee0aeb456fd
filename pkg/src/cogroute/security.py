"""Relay reputation and interception robustness in space, frequency and time."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class ReputationTracker:
    """Exponential moving average of a relay's delivered vs advertised security."""

    advertised: float
    weight: float
    window: int | None = None
    value: float | None = None
    episode: int = 0

    def __post_init__(self):
        if not 0 < self.advertised <= 1:
            raise ValueError("advertised level must be in (0, 1]")
        if not 0 < self.weight < 1:
            raise ValueError("EMA weight must be in (0, 1)")

    @classmethod
    def for_window(cls, advertised: float, window: int) -> "ReputationTracker":
        return cls(advertised, 2.0 / (window + 1), window)

    def current(self, experienced: float) -> float:
        # over-delivery is clamped so the reputation stays a probability
        return min(max(experienced, 0.0) / self.advertised, 1.0)

    def observe(self, experienced: float) -> float:
        sc = self.current(experienced)
        self.episode += 1
        if self.value is None or self.episode <= 1:
            self.value = sc
        else:
            self.value = self.weight * sc + (1 - self.weight) * self.value
        return self.value


@dataclass(frozen=True)
class SecurityEnv:
    eavesdroppers: int
    subcells: int
    channels: int
    observation_hours: float
    transmission_time: float = 1.0

    def __post_init__(self):
        if not 0 <= self.eavesdroppers <= self.subcells:
            raise ValueError("eavesdropper count must be in 0..N")
        if self.channels < 1:
            raise ValueError("channel count must be >= 1")
        if not 0 < self.observation_hours <= 24:
            raise ValueError("observation hours must be in (0, 24]")

    @classmethod
    def from_fraction(cls, fraction: float, subcells: int, **kw) -> "SecurityEnv":
        return cls(eavesdroppers=int(round(fraction * subcells)), subcells=subcells, **kw)


def robustness(env: SecurityEnv) -> tuple[float, float, float]:
    """(spatial, frequency, time) probabilities of evading an eavesdropper."""
    return (
        1 - env.eavesdroppers / env.subcells,
        1 - 1 / env.channels,
        1 - env.observation_hours / 24,
    )


def hop_capture(sigma_s: float, sigma_f: float, sigma_t: float) -> float:
    return (1 - sigma_s) * (1 - sigma_f) * (1 - sigma_t)


def interception(sigma_s: float, sigma_f: float, sigma_t: float, hops: float) -> tuple[float, float]:
    """Return ``(p_d, p_nd)`` for a route of ``hops`` (possibly fractional) hops."""
    for s in (sigma_s, sigma_f, sigma_t):
        if not 0 <= s <= 1:
            raise ValueError("robustness values must be in [0, 1]")
    if hops < 0:
        raise ValueError("hops must be >= 0")
    p_nd = (1 - hop_capture(sigma_s, sigma_f, sigma_t)) ** hops
    return 1 - p_nd, p_nd

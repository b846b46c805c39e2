"""Relativistic bookkeeping in integer ticks (c = 1, so lengths are flight times).

Component ``p`` of a photon leaves Alice ``p * loop_delay`` after emission, crosses
the channel in ``distance + mu`` and is held by Bob for ``(n - 1 - p) * loop_delay``
so all components meet at his final beamsplitters together.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, InterlaceError


class ArrivalFlag(str, enum.Enum):
    OK = "OK"
    LATE = "LATE"
    ANOMALY = "ANOMALY"


def _tick(name: str, value, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(f"{name} must be an integer number of ticks, got {value!r}", field=name)
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}", field=name)
    return int(value)


@dataclass(frozen=True)
class TimingConfig:
    """Timing parameters, all in ticks.

    ``lengthen_loops`` adds ``mu`` to every loop, which is what keeps a deployment
    over a non-straight channel secure. Turning it off models a setup that ignored
    the excess path length.
    """

    delta_t: int = 1
    epsilon: int | None = None
    distance: int = 0
    mu: int = 0
    k: int = 2
    lengthen_loops: bool = True
    emission_probability: float = 0.5

    def __post_init__(self):
        _tick("deltaT", self.delta_t, 1)
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", self.delta_t)
        _tick("epsilon", self.epsilon, 1)
        _tick("distance", self.distance, 0)
        _tick("mu", self.mu, 0)
        _tick("k", self.k, 1)
        if not isinstance(self.lengthen_loops, bool):
            raise ConfigError("lengthenLoops must be a boolean", field="lengthenLoops")
        p = self.emission_probability
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0.0 < p <= 1.0:
            raise ConfigError(
                f"emissionProbability must be in (0, 1], got {p!r}", field="emissionProbability"
            )

    @property
    def components(self) -> int:
        return 1 << self.k

    @property
    def loop_delay(self) -> int:
        return self.delta_t + self.epsilon + (self.mu if self.lengthen_loops else 0)

    @property
    def transit(self) -> int:
        """Flight time of the deployed channel."""
        return self.distance + self.mu


@dataclass(frozen=True)
class Schedule:
    emission_time: int
    loop_delay: int
    transit: int
    departures: tuple[int, ...]
    arrivals: tuple[int, ...]
    expected_detection: int

    @property
    def components(self) -> int:
        return len(self.departures)

    def detection_times(self) -> tuple[int, ...]:
        """When each component reaches Bob's final beamsplitter after his delay lines."""
        n = self.components
        return tuple(a + (n - 1 - p) * self.loop_delay for p, a in enumerate(self.arrivals))

    def delayed(self, delays: Sequence[int]) -> "Schedule":
        """Same photon with component ``p`` arriving ``delays[p]`` ticks later."""
        if len(delays) != self.components:
            raise ValueError(f"need {self.components} delays, got {len(delays)}")
        arrivals = tuple(a + int(d) for a, d in zip(self.arrivals, delays))
        return Schedule(self.emission_time, self.loop_delay, self.transit,
                        self.departures, arrivals, self.expected_detection)


def build_schedule(emission_time: int, cfg: TimingConfig) -> Schedule:
    L = cfg.loop_delay
    n = cfg.components
    departures = tuple(emission_time + p * L for p in range(n))
    arrivals = tuple(d + cfg.transit for d in departures)
    return Schedule(
        emission_time=emission_time,
        loop_delay=L,
        transit=cfg.transit,
        departures=departures,
        arrivals=arrivals,
        expected_detection=arrivals[0] + (n - 1) * L,
    )


def next_emission_time(previous: int, cfg: TimingConfig, rng: np.random.Generator) -> int:
    """Memoryless source: one emission attempt per tick succeeding with ``emission_probability``."""
    return previous + int(rng.geometric(cfg.emission_probability))


def check_arrival(expected: int, actual: int, cfg: TimingConfig) -> ArrivalFlag:
    if actual - expected >= cfg.delta_t:
        return ArrivalFlag.LATE
    if actual < expected - cfg.delta_t:
        return ArrivalFlag.ANOMALY
    return ArrivalFlag.OK


def arrival_flag(schedule: Schedule, cfg: TimingConfig) -> ArrivalFlag:
    """Worst flag over all components of one photon."""
    flags = {check_arrival(schedule.expected_detection, t, cfg) for t in schedule.detection_times()}
    if ArrivalFlag.LATE in flags:
        return ArrivalFlag.LATE
    if ArrivalFlag.ANOMALY in flags:
        return ArrivalFlag.ANOMALY
    return ArrivalFlag.OK


@dataclass(frozen=True)
class CausalWindow:
    time: int
    accessible: frozenset = field(default_factory=frozenset)


def causal_window(eve_position: int, domain_length: int, schedule: Schedule, t: int,
                  holds: Sequence[int] | None = None) -> CausalWindow:
    """Components physically inside Eve's domain at time ``t``.

    Eve's domain starts ``eve_position`` ticks down the channel and spans
    ``domain_length`` ticks. ``holds[p]`` extends how long she keeps component ``p``
    (buffering), which is what lets her see several components at once.
    """
    if not 0 <= eve_position <= schedule.transit:
        raise ConfigError(
            f"Eve position {eve_position} outside channel [0, {schedule.transit}]", field="evePosition"
        )
    if domain_length < 1:
        raise ConfigError(f"domain length must be >= 1 tick, got {domain_length}", field="domainLength")
    holds = holds or (0,) * schedule.components
    accessible = frozenset(
        p for p, dep in enumerate(schedule.departures)
        if dep + eve_position <= t < dep + eve_position + domain_length + holds[p]
    )
    return CausalWindow(t, accessible)


@dataclass(frozen=True)
class SwitchToggle:
    time: int
    setting: int
    photon: int
    component: int


@dataclass(frozen=True)
class InterlaceTimetable:
    """Channel slot per (photon, component) and the toggle list for every switch.

    Alice's merge tree uses switches S1..S(n-1) (S1 feeds the channel), Bob's
    mirror tree S(n)..S(2n-2). A toggle's ``setting`` is the input (Alice) or output
    (Bob) port, 0 or 1, the component must take at that switch.
    """

    slots: dict
    switches: dict


def _route(p: int, n: int):
    """(heap index, port) for each switch from leaf level up to the root."""
    node = n + p
    while node > 1:
        yield node // 2, node % 2
        node //= 2


def interlace_schedule(photon_emissions: Sequence[int], cfg: TimingConfig,
                       slot_width: int = 1) -> InterlaceTimetable:
    emissions = [int(e) for e in photon_emissions]
    if any(b < a for a, b in zip(emissions, emissions[1:])):
        raise ConfigError("photon emission times must be sorted")
    slot_width = _tick("slotWidth", slot_width, 1)
    n = cfg.components
    names_alice = [f"S{h}" for h in range(1, n)]
    names_bob = [f"S{h + n - 1}" for h in range(1, n)]
    switches = {name: [] for name in names_alice + names_bob}
    if not emissions:
        return InterlaceTimetable({}, {})

    slots = {}
    for photon, e in enumerate(emissions):
        sched = build_schedule(e, cfg)
        for p in range(n):
            slots[(photon, p)] = sched.departures[p]
            for h, port in _route(p, n):
                switches[f"S{h}"].append(SwitchToggle(sched.departures[p], port, photon, p))
                switches[f"S{h + n - 1}"].append(SwitchToggle(sched.arrivals[p], port, photon, p))

    ordered = sorted(slots.items(), key=lambda kv: (kv[1], kv[0]))
    for (a, ta), (b, tb) in zip(ordered, ordered[1:]):
        if tb < ta + slot_width:
            raise InterlaceError(f"components {a} and {b} collide in the channel at t={tb}", pair=(a, b))
    for toggles in switches.values():
        toggles.sort(key=lambda s: (s.time, s.photon, s.component))
    return InterlaceTimetable(dict(ordered), switches)

"""Alice's state preparation, Bob's decoding and disclosure, and Alice's verification.

State ``i`` puts a relative phase of pi on every path ``p`` with an odd number of
bits in ``i & p``. Bob's cascade maps it back to detector ``j = i``. Each bit of
``j`` is one decoding axis; for k = 2 axis 0 is the which-branch bit and axis 1 the
which-detector bit. Per photon Bob discloses one random axis and the others are key.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ProtocolError, UnsupportedError
from .optics import AnyState, PhotonState, butterfly_transform, measure_path
from .timing import ArrivalFlag


def bit(x: int, axis: int) -> int:
    return (x >> axis) & 1


def kept_axes(k: int, disclosed_axis: int) -> tuple[int, ...]:
    return tuple(a for a in range(k) if a != disclosed_axis)


def bits_at(x: int, axes: Sequence[int]) -> tuple[int, ...]:
    return tuple(bit(x, a) for a in axes)


def phase_pattern(i: int, k: int) -> np.ndarray:
    """Sign (+1/-1) Alice applies to each path for state ``i``."""
    p = np.arange(1 << k)
    parity = np.array([bin(v).count("1") & 1 for v in (p & i)])
    return 1 - 2 * parity


def alice_prepare(i: int, k: int) -> PhotonState:
    n = 1 << k
    if not 0 <= i < n:
        raise IndexError(f"state index {i} out of range [0, {n})")
    return PhotonState(k, phase_pattern(i, k) / np.sqrt(n))


@dataclass(frozen=True)
class Outcome:
    """Which of Bob's 2**k detectors fired."""

    j: int
    k: int

    @property
    def branch(self) -> int:
        return outcome_to_branch_detector(self.j, self.k)[0]

    @property
    def detector(self) -> int:
        return outcome_to_branch_detector(self.j, self.k)[1]


def outcome_to_branch_detector(j: int, k: int = 2) -> tuple[int, int]:
    """(branch, detector) labels of the two-bit setup.

    Branch 1 collects states with a sign flip inside each pair (j in {1, 3}),
    Detector 1 those with a flip between the pairs (j in {2, 3}).
    """
    if k != 2:
        raise UnsupportedError("branch/detector labels exist only for k = 2; use axis bits")
    if not 0 <= j < 4:
        raise IndexError(f"outcome {j} out of range [0, 4)")
    branch = 1 if bit(j, 0) else 2
    detector = 1 if bit(j, 1) else 2
    return branch, detector


def bob_decode(state: AnyState, rng: np.random.Generator) -> Outcome:
    j, _ = measure_path(butterfly_transform(state), rng)
    return Outcome(j, state.k)


def bob_disclose(outcome: Outcome, rng: np.random.Generator, k: int | None = None):
    """Pick the axis to announce; returns (axis, announced bit, kept bits)."""
    k = outcome.k if k is None else k
    axis = int(rng.integers(k))
    return axis, bit(outcome.j, axis), bits_at(outcome.j, kept_axes(k, axis))


@dataclass(frozen=True)
class SiftRecord:
    photon_id: int
    sent: int
    received: Outcome
    arrival_flag: ArrivalFlag
    disclosed_axis: int
    disclosed_bit: int
    kept_bits: tuple[int, ...]

    def __post_init__(self):
        j = self.received.j
        if self.disclosed_bit != bit(j, self.disclosed_axis):
            raise ProtocolError(f"photon {self.photon_id}: disclosed bit does not match outcome")
        if self.kept_bits != bits_at(j, kept_axes(self.received.k, self.disclosed_axis)):
            raise ProtocolError(f"photon {self.photon_id}: kept bits do not match outcome")


@dataclass(frozen=True)
class SessionStats:
    total_photons: int
    key_bits: str
    timing_violations: int
    bit_mismatches: int
    detected: bool
    key_rate_per_photon: Fraction
    flagged_photons: int = 0
    eve_information_bits: float = 0.0


def alice_verify(records: Sequence[SiftRecord], sent: Sequence[int],
                 abort_threshold: int = 0) -> SessionStats:
    """Compare Bob's announcements against what Alice sent.

    ``sent`` is Alice's private list of state indices in photon order.
    """
    if len(records) != len(sent):
        raise ProtocolError(f"{len(records)} sift records but {len(sent)} sent states")
    mismatches = timing = flagged = 0
    key: list[str] = []
    for rec, i in zip(records, sent):
        if rec.sent != i:
            raise ProtocolError(f"photon {rec.photon_id}: record says {rec.sent}, Alice sent {i}")
        bad_bit = rec.disclosed_bit != bit(i, rec.disclosed_axis)
        bad_time = rec.arrival_flag is not ArrivalFlag.OK
        mismatches += bad_bit
        timing += bad_time
        if bad_bit or bad_time:
            flagged += 1
        else:
            key.extend(str(b) for b in rec.kept_bits)
    detected = mismatches + timing > abort_threshold
    key_bits = "" if detected else "".join(key)
    n = len(records)
    return SessionStats(
        total_photons=n,
        key_bits=key_bits,
        timing_violations=timing,
        bit_mismatches=mismatches,
        detected=detected,
        key_rate_per_photon=Fraction(len(key_bits), n) if n else Fraction(0),
        flagged_photons=flagged,
    )

"""Eavesdropping attacks on in-flight photons and what Eve learns from them."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
from scipy.linalg import hadamard

from .errors import CausalityMaskError, NormalizationError, UnsupportedError
from .optics import (
    JointState,
    PhotonState,
    apply_joint_unitary,
    as_joint,
    butterfly_transform,
    check_unitary,
    embed_local_unitary,
    measure_path,
    tensor_with_ancilla,
)
from .protocol import alice_prepare, bit, bits_at
from .timing import ArrivalFlag, Schedule, TimingConfig, arrival_flag, build_schedule, causal_window

RESEND_POLICIES = ("forward", "guess")


@dataclass(frozen=True)
class NoAttack:
    pass


@dataclass(frozen=True)
class PathMeasureResend:
    """Which-path measurement on every photon.

    ``forward`` sends the collapsed component on in its own slot; ``guess`` sends a
    freshly prepared state with a uniformly random index instead.
    """

    resend_policy: str = "forward"

    def __post_init__(self):
        if self.resend_policy not in RESEND_POLICIES:
            raise UnsupportedError(f"unknown resend policy {self.resend_policy!r}")


@dataclass(frozen=True)
class FullStateMeasureResend:
    """Hold all components, decode the state exactly, re-prepare it.

    Eve sits next to Alice. ``shortcut_gain`` is flight time she saves by sending
    the copy along a straight line instead of the deployed channel; it cannot
    exceed the channel's excess ``mu``.
    """

    shortcut_gain: int = 0

    def __post_init__(self):
        if self.shortcut_gain < 0:
            raise ValueError("shortcut gain must be >= 0")


@dataclass(frozen=True, eq=False)
class AttackStep:
    """Unitary on (``support`` paths ⊗ ancilla), applied ``time`` ticks after emission."""

    time: int
    support: tuple[int, ...]
    unitary: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(p) for p in self.support))
        u = np.array(self.unitary, dtype=complex)
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)


@dataclass(frozen=True, eq=False)
class CausalAncillaUnitary:
    """Coherent attack: a sequence of masked unitaries coupling components to an ancilla.

    Each step may only touch components inside Eve's domain at its time.
    ``buffer_delays[p]`` is how long Eve holds component ``p``; it widens her view
    and delays that component by the same amount. ``eve_position`` defaults to mid
    channel.
    """

    ancilla_dim: int
    steps: tuple[AttackStep, ...] = ()
    buffer_delays: tuple[int, ...] = ()
    ancilla_init: np.ndarray | None = None
    eve_position: int | None = None
    domain_length: int = 1

    def __post_init__(self):
        if self.ancilla_dim < 1:
            raise ValueError("ancilla dimension must be >= 1")
        object.__setattr__(self, "steps", tuple(self.steps))
        for s in self.steps:
            size = len(s.support) * self.ancilla_dim
            if s.unitary.shape != (size, size):
                raise ValueError(f"step at t={s.time} needs a {size}x{size} unitary, got {s.unitary.shape}")
            check_unitary(s.unitary)
        object.__setattr__(self, "buffer_delays", tuple(int(d) for d in self.buffer_delays))
        if any(d < 0 for d in self.buffer_delays):
            raise ValueError("buffer delays must be >= 0")
        if self.ancilla_init is not None:
            init = np.array(self.ancilla_init, dtype=complex).reshape(-1)
            if init.size != self.ancilla_dim:
                raise ValueError(f"ancilla init has {init.size} entries, expected {self.ancilla_dim}")
            if abs(np.vdot(init, init).real - 1.0) > 1e-9:
                raise NormalizationError("ancilla init is not normalized")
            init.setflags(write=False)
            object.__setattr__(self, "ancilla_init", init)

    def initial_ancilla(self) -> np.ndarray:
        if self.ancilla_init is not None:
            return self.ancilla_init
        e0 = np.zeros(self.ancilla_dim, dtype=complex)
        e0[0] = 1.0
        return e0

    def delays(self, n: int) -> tuple[int, ...]:
        if not self.buffer_delays:
            return (0,) * n
        if len(self.buffer_delays) != n:
            raise ValueError(f"need {n} buffer delays, got {len(self.buffer_delays)}")
        return self.buffer_delays

    def position(self, schedule: Schedule) -> int:
        return schedule.transit // 2 if self.eve_position is None else self.eve_position


Attack = Union[NoAttack, PathMeasureResend, FullStateMeasureResend, CausalAncillaUnitary]


@dataclass(frozen=True, eq=False)
class EveRecord:
    """What Eve holds after one photon.

    ``ancilla_final`` is her ancilla conditioned on Bob finding the state Alice
    sent; ``guessed_index`` is her classical estimate of Alice's index.
    """

    photon_id: int
    ancilla_final: np.ndarray | None = None
    guessed_index: int | None = None


def full_state_holdup(cfg: TimingConfig, attack: FullStateMeasureResend) -> int:
    raw = (cfg.components - 1) * cfg.loop_delay
    return max(0, raw - min(attack.shortcut_gain, cfg.mu))


def attack_steps(attack: CausalAncillaUnitary, schedule: Schedule, k: int):
    """Yield (full unitary, support) per step after checking it against Eve's view."""
    n = 1 << k
    holds = attack.delays(n)
    pos = attack.position(schedule)
    for step in attack.steps:
        window = causal_window(pos, attack.domain_length, schedule,
                               schedule.emission_time + step.time, holds)
        if not set(step.support) <= window.accessible:
            raise CausalityMaskError(
                f"step at t+{step.time} acts on {sorted(step.support)} but only "
                f"{sorted(window.accessible)} are inside Eve's domain"
            )
        yield embed_local_unitary(step.unitary, step.support, k, attack.ancilla_dim), step.support


def attack_operator(attack: CausalAncillaUnitary, cfg: TimingConfig) -> np.ndarray:
    """Whole attack as one matrix on path ⊗ ancilla, ancilla preparation included.

    Acting on |psi>|e0> it gives the same result as the step-by-step attack.
    """
    k = cfg.k
    prep = _preparation_unitary(attack.initial_ancilla())
    total = np.kron(np.eye(1 << k), prep)
    for full, _ in attack_steps(attack, build_schedule(0, cfg), k):
        total = full @ total
    return total


def _preparation_unitary(v: np.ndarray) -> np.ndarray:
    """A unitary whose first column is ``v`` (Householder reflection, phase-corrected)."""
    d = v.size
    e0 = np.zeros(d, dtype=complex)
    e0[0] = 1.0
    phase = v[0] / abs(v[0]) if abs(v[0]) > 1e-15 else 1.0
    w = e0 - v / phase
    nw = np.linalg.norm(w)
    if nw < 1e-15:
        return phase * np.eye(d, dtype=complex)
    w = w / nw
    return phase * (np.eye(d) - 2.0 * np.outer(w, w.conj()))


def apply_attack(state: PhotonState, schedule: Schedule, attack: Attack,
                 rng: np.random.Generator, cfg: TimingConfig, photon_id: int = 0):
    """Run one photon through Eve. Returns (state, schedule, EveRecord)."""
    if isinstance(attack, NoAttack):
        return state, schedule, EveRecord(photon_id)

    if isinstance(attack, PathMeasureResend):
        p, collapsed = measure_path(state, rng)
        if attack.resend_policy == "forward":
            return collapsed, schedule, EveRecord(photon_id, guessed_index=p)
        guess = int(rng.integers(state.dim))
        return alice_prepare(guess, state.k), schedule, EveRecord(photon_id, guessed_index=guess)

    if isinstance(attack, FullStateMeasureResend):
        i, _ = measure_path(butterfly_transform(state), rng)
        holdup = full_state_holdup(cfg, attack)
        shifted = schedule.delayed((holdup,) * schedule.components)
        return alice_prepare(i, state.k), shifted, EveRecord(photon_id, guessed_index=i)

    if isinstance(attack, CausalAncillaUnitary):
        joint = tensor_with_ancilla(state, attack.initial_ancilla())
        for full, support in attack_steps(attack, schedule, state.k):
            joint = apply_joint_unitary(joint, full, support)
        shifted = schedule.delayed(attack.delays(schedule.components))
        return joint, shifted, EveRecord(photon_id)

    raise UnsupportedError(f"unknown attack {attack!r}")


def conditional_phi(joint, sent_state: PhotonState) -> np.ndarray | None:
    """Eve's normalized ancilla given Bob finds ``sent_state``; None if that never happens."""
    v = as_joint(joint).conditional_ancilla(sent_state)
    n = np.linalg.norm(v)
    return None if n < 1e-12 else v / n


def von_neumann_bits(eigenvalues: np.ndarray, floor: float = 1e-12) -> float:
    """Entropy in bits of a spectrum; eigenvalues below ``floor`` are rounding noise."""
    ev = np.real(eigenvalues)
    ev = ev[ev > floor]
    if ev.size <= 1:
        return 0.0
    ev = ev / ev.sum()
    return float(-np.sum(ev * np.log2(ev)))


def holevo_pure(states: Sequence[np.ndarray], probs: Sequence[float] | None = None) -> float:
    """Holevo quantity of a pure-state ensemble from its Gram matrix.

    For pure members it equals the entropy of the average state, and the weighted
    Gram matrix sqrt(p_i p_j) <phi_i|phi_j> has the same nonzero spectrum.
    """
    if not len(states):
        return 0.0
    vs = np.array([np.asarray(s, dtype=complex) / np.linalg.norm(s) for s in states])
    p = np.full(len(vs), 1.0 / len(vs)) if probs is None else np.asarray(probs, dtype=float)
    sq = np.sqrt(p)
    gram = (sq[:, None] * sq[None, :]) * (vs.conj() @ vs.T)
    return max(0.0, von_neumann_bits(np.linalg.eigvalsh(gram)))


def channel_information(pairs: Sequence[tuple[tuple, tuple]]) -> float:
    """Mutual information in bits between Eve's symbol and the key symbol.

    ``pairs`` holds (eve, key) observations. P(eve | key) is estimated from the
    data and combined with a uniform prior over the observed key symbols, since
    Alice's choices are uniform by construction.
    """
    if not pairs:
        return 0.0
    counts: dict = defaultdict(lambda: defaultdict(int))
    for x, y in pairs:
        counts[y][x] += 1
    ys = sorted(counts)
    xs = sorted({x for y in ys for x in counts[y]})
    cond = np.array([[counts[y][x] / sum(counts[y].values()) for x in xs] for y in ys])
    prior = 1.0 / len(ys)
    px = prior * cond.sum(axis=0)
    info = 0.0
    for row in cond:
        nz = row > 0
        info += prior * float(np.sum(row[nz] * np.log2(row[nz] / px[nz])))
    return max(0.0, info)


def eve_information(records: Sequence[EveRecord], sent_indices: Sequence[int],
                    kept_axes_per_photon: Sequence[Sequence[int]]) -> float:
    """Eve's information per photon, in bits.

    Coherent attacks: Holevo quantity of {uniform i, Phi_i}. Classical attacks:
    mutual information between Eve's guess and Alice's kept key bits.
    """
    if not records:
        return 0.0
    if len(records) != len(sent_indices) or len(records) != len(kept_axes_per_photon):
        raise ValueError("records, sent indices and kept axes must align")
    phis: dict[int, np.ndarray] = {}
    pairs = []
    for rec, i, axes in zip(records, sent_indices, kept_axes_per_photon):
        if rec.ancilla_final is not None:
            phis.setdefault(i, rec.ancilla_final)
        elif rec.guessed_index is not None:
            pairs.append((bits_at(rec.guessed_index, axes), bits_at(i, axes)))
    if phis:
        return holevo_pure([phis[i] for i in sorted(phis)])
    return channel_information(pairs)


def _hadamard_signs(k: int) -> np.ndarray:
    return hadamard(1 << k).astype(int)


def detection_probability_oracle(attack: Attack, cfg: TimingConfig) -> float:
    """Exact per-photon probability that a timing or announced-bit check fails.

    Sums over Alice's index, every measurement outcome and both halves of Bob's
    announcement choice. Built from explicit Hadamard sign tables, not from the
    simulator's optics.
    """
    k = cfg.k
    n = 1 << k
    H = _hadamard_signs(k)

    if isinstance(attack, NoAttack):
        return 0.0

    if isinstance(attack, FullStateMeasureResend):
        return 1.0 if full_state_holdup(cfg, attack) >= cfg.delta_t else 0.0

    if isinstance(attack, PathMeasureResend):
        total = Fraction(0)
        for i in range(n):
            for axis in range(k):
                w = Fraction(1, n * k)
                if attack.resend_policy == "forward":
                    for p in range(n):
                        p_path = Fraction(int(H[p, i]) ** 2, n)
                        for j in range(n):
                            if bit(j, axis) != bit(i, axis):
                                total += w * p_path * Fraction(int(H[j, p]) ** 2, n)
                else:
                    for g in range(n):
                        if bit(g, axis) != bit(i, axis):
                            total += w * Fraction(1, n)
        return float(total)

    if isinstance(attack, CausalAncillaUnitary):
        sched = build_schedule(0, cfg).delayed(attack.delays(n))
        if arrival_flag(sched, cfg) is not ArrivalFlag.OK:
            return 1.0
        d = attack.ancilla_dim
        U = attack_operator(attack, cfg)
        decode = np.kron(H / np.sqrt(n), np.eye(d))
        e0 = np.zeros(d)
        e0[0] = 1.0
        total = 0.0
        for i in range(n):
            out = (decode @ U @ np.kron(H[:, i] / np.sqrt(n), e0)).reshape(n, d)
            pj = np.sum(np.abs(out) ** 2, axis=1)
            for axis in range(k):
                wrong = [j for j in range(n) if bit(j, axis) != bit(i, axis)]
                total += pj[wrong].sum() / (n * k)
        return float(total)

    raise UnsupportedError(f"no exact detection model for {attack!r}")

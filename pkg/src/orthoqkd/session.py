"""End-to-end session: emit, prepare, transmit, attack, decode, sift, verify."""
from __future__ import annotations

import dataclasses

from .adversary import Attack, CausalAncillaUnitary, apply_attack, conditional_phi, eve_information
from .config import SessionConfig
from .protocol import SessionStats, SiftRecord, alice_prepare, alice_verify, bob_decode, bob_disclose, kept_axes
from .rng import photon_stream
from .timing import arrival_flag, build_schedule, next_emission_time


def run_session(cfg: SessionConfig, attack: Attack | None = None, seed: int | None = None,
                return_records: bool = False):
    """Simulate ``cfg.photons`` photons.

    ``attack`` and ``seed`` override the config. Photon ``n`` draws, in order, its
    emission gap, Alice's index, Eve's randomness, Bob's detector click and Bob's
    disclosure axis from its own stream, so the run is reproducible bit for bit.
    """
    attack = cfg.attack if attack is None else attack
    seed = cfg.seed if seed is None else seed
    timing = cfg.timing
    k = cfg.k
    n_states = 1 << k

    sent: list[int] = []
    records: list[SiftRecord] = []
    eve_records = []
    axes = []
    t = 0
    for photon in range(cfg.photons):
        rng = photon_stream(seed, photon)
        t = next_emission_time(t, timing, rng)
        i = int(rng.integers(n_states))
        state = alice_prepare(i, k)
        schedule = build_schedule(t, timing)
        received, schedule, eve = apply_attack(state, schedule, attack, rng, timing, photon)
        if isinstance(attack, CausalAncillaUnitary):
            eve = dataclasses.replace(eve, ancilla_final=conditional_phi(received, state))
        outcome = bob_decode(received, rng)
        axis, disclosed, kept = bob_disclose(outcome, rng, k)
        records.append(SiftRecord(photon, i, outcome, arrival_flag(schedule, timing),
                                  axis, disclosed, kept))
        sent.append(i)
        eve_records.append(eve)
        axes.append(kept_axes(k, axis))

    stats = alice_verify(records, sent, cfg.abort_threshold)
    stats = dataclasses.replace(stats, eve_information_bits=eve_information(eve_records, sent, axes))
    if return_records:
        return stats, records
    return stats

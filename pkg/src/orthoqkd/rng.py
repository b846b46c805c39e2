"""Seedable random streams.

Every stream is a PCG64 generator keyed by ``SeedSequence(seed, spawn_key=...)``.
Photon ``n`` of a session draws only from ``photon_stream(seed, n)``, so results do
not depend on the order in which photons are processed.
"""
import numpy as np

PHOTON_STREAM = 0
PROOF_STREAM = 1

_U64 = 1 << 64


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) < _U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return int(seed)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for the stream identified by ``stream`` under ``seed``."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def photon_stream(seed: int, photon_id: int) -> np.random.Generator:
    return make_rng(seed, PHOTON_STREAM, photon_id)


def proof_stream(seed: int, sample_id: int) -> np.random.Generator:
    return make_rng(seed, PROOF_STREAM, sample_id)

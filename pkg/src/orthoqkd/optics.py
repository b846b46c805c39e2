"""Single-photon amplitudes over 2**k path modes and the optics acting on them.

Path ``p`` is addressed by its binary digits: bit 0 separates the members of a
pair (a/b, c/d for k=2), bit 1 separates the pairs, and so on. Beamsplitters use
the real convention (1/sqrt2)[[1, 1], [1, -1]], which makes a full cascade of
them a normalized Walsh-Hadamard transform.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import CausalityMaskError, NormalizationError, UnitarityError

NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
INPUT_NORM_TOL = 1e-9

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PhotonState:
    """Pure single-photon state; ``amps[p]`` is the amplitude on path ``p``."""

    k: int
    amps: np.ndarray

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError(f"mode exponent k must be >= 1, got {self.k}")
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (1 << self.k,):
            raise ValueError(f"expected {1 << self.k} amplitudes for k={self.k}, got shape {amps.shape}")
        object.__setattr__(self, "amps", _frozen(amps))

    @classmethod
    def basis(cls, k: int, p: int) -> "PhotonState":
        amps = np.zeros(1 << k, dtype=complex)
        amps[_check_index(p, 1 << k)] = 1.0
        return cls(k, amps)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def allclose(self, other: "PhotonState", atol: float = NORM_TOL) -> bool:
        return self.k == other.k and np.allclose(self.amps, other.amps, rtol=0.0, atol=atol)


@dataclass(frozen=True, eq=False)
class JointState:
    """Photon entangled with an eavesdropper ancilla: ``amps[p, e]``."""

    k: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 2 or amps.shape[0] != (1 << self.k) or amps.shape[1] < 1:
            raise ValueError(f"expected a [{1 << self.k} x d_E] amplitude matrix, got shape {amps.shape}")
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def ancilla_dim(self) -> int:
        return self.amps.shape[1]

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def path_probabilities(self) -> np.ndarray:
        return np.sum(np.abs(self.amps) ** 2, axis=1)

    def photon(self) -> PhotonState:
        """The photon alone; only defined when the ancilla is one-dimensional."""
        if self.ancilla_dim != 1:
            raise ValueError("photon is entangled with a nontrivial ancilla")
        return PhotonState(self.k, self.amps[:, 0])

    def conditional_ancilla(self, reference: PhotonState) -> np.ndarray:
        """Unnormalized ancilla vector <reference| ⊗ 1 applied to this state."""
        return reference.amps.conj() @ self.amps


@dataclass(frozen=True, eq=False)
class ModeUnitary:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise UnitarityError(f"unitary must be square, got shape {m.shape}")
        check_unitary(m)
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


AnyState = Union[PhotonState, JointState]


def check_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> None:
    err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
    if err > tol:
        raise UnitarityError(f"matrix is not unitary: max |U^dag U - I| = {err:.3e}")


def _as_matrix(u) -> np.ndarray:
    if isinstance(u, ModeUnitary):
        return u.matrix
    m = np.asarray(u, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise UnitarityError(f"unitary must be square, got shape {m.shape}")
    check_unitary(m)
    return m


def _check_index(p, n: int) -> int:
    p = int(p)
    if not 0 <= p < n:
        raise IndexError(f"path index {p} out of range [0, {n})")
    return p


def apply_beamsplitter(state: PhotonState, mode_a: int, mode_b: int) -> PhotonState:
    """50-50 beamsplitter between two paths: (a, b) -> ((a+b)/sqrt2, (a-b)/sqrt2)."""
    a = _check_index(mode_a, state.dim)
    b = _check_index(mode_b, state.dim)
    if a == b:
        raise ValueError("beamsplitter needs two distinct modes")
    amps = state.amps.copy()
    x, y = amps[a], amps[b]
    amps[a] = (x + y) * _SQRT_HALF
    amps[b] = (x - y) * _SQRT_HALF
    return PhotonState(state.k, amps)


def apply_phase(state: PhotonState, mode: int, phase: float) -> PhotonState:
    p = _check_index(mode, state.dim)
    amps = state.amps.copy()
    amps[p] *= np.exp(1j * phase)
    return PhotonState(state.k, amps)


def walsh_hadamard(x: np.ndarray) -> np.ndarray:
    """Normalized Walsh-Hadamard transform along axis 0 via the butterfly network.

    Stage ``h`` pairs index ``p`` with ``p | h`` (bit ``h`` clear in ``p``), which is
    one rank of balanced beamsplitters.
    """
    out = np.array(x, dtype=complex)
    n = out.shape[0]
    if n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    tail = out.shape[1:]
    h = 1
    while h < n:
        v = out.reshape((n // (2 * h), 2, h) + tail)
        upper = v[:, 0].copy()
        v[:, 0] += v[:, 1]
        v[:, 1] = upper - v[:, 1]
        h *= 2
    return out / np.sqrt(n)


def butterfly_transform(state: AnyState) -> AnyState:
    """Bob's interferometer cascade; an involution."""
    if isinstance(state, JointState):
        return JointState(state.k, walsh_hadamard(state.amps))
    return PhotonState(state.k, walsh_hadamard(state.amps))


def measure_path(state: AnyState, rng: np.random.Generator) -> tuple[int, AnyState]:
    """Projective which-path measurement (Born rule).

    For a joint state the ancilla is left in its branch conditioned on the outcome.
    """
    if isinstance(state, JointState):
        probs = state.path_probabilities()
    else:
        probs = state.probabilities()
    total = float(probs.sum())
    if abs(total - 1.0) > INPUT_NORM_TOL:
        raise NormalizationError(f"state norm {total!r} deviates from 1")
    cdf = np.cumsum(probs)
    p = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    p = min(p, len(probs) - 1)
    while probs[p] == 0.0:  # guards the cdf edge when trailing modes are empty
        p -= 1
    if isinstance(state, JointState):
        amps = np.zeros_like(state.amps)
        amps[p] = state.amps[p] / np.sqrt(probs[p])
        return p, JointState(state.k, amps)
    return p, PhotonState.basis(state.k, p)


def tensor_with_ancilla(state: PhotonState, ancilla: Iterable[complex]) -> JointState:
    anc = np.asarray(ancilla, dtype=complex).reshape(-1)
    n = float(np.vdot(anc, anc).real)
    if anc.size == 0 or abs(n - 1.0) > INPUT_NORM_TOL:
        raise NormalizationError(f"ancilla norm {n!r} deviates from 1")
    return JointState(state.k, np.outer(state.amps, anc))


def as_joint(state: AnyState) -> JointState:
    if isinstance(state, JointState):
        return state
    return JointState(state.k, state.amps[:, None])


def embed_local_unitary(local, support, k: int, ancilla_dim: int) -> np.ndarray:
    """Lift a unitary on (paths in ``support``) ⊗ ancilla to the full joint space.

    ``local`` is indexed path-major in the order ``support`` is given. The result
    acts as the identity on every path outside ``support``.
    """
    support = [_check_index(p, 1 << k) for p in support]
    if len(set(support)) != len(support):
        raise ValueError(f"repeated path in support {support}")
    local = _as_matrix(local)
    if local.shape[0] != len(support) * ancilla_dim:
        raise ValueError(
            f"local unitary has dim {local.shape[0]}, expected {len(support)}*{ancilla_dim}"
        )
    full = np.eye((1 << k) * ancilla_dim, dtype=complex)
    idx = [p * ancilla_dim + e for p in support for e in range(ancilla_dim)]
    full[np.ix_(idx, idx)] = local
    return full


def check_mask(u: np.ndarray, support, k: int, ancilla_dim: int, tol: float = UNITARY_TOL) -> None:
    """Raise unless ``u`` is the identity on, and does not couple to, paths outside ``support``."""
    outside = np.ones(1 << k, dtype=bool)
    for p in support:
        outside[_check_index(p, 1 << k)] = False
    if not outside.any():
        return
    idx = np.flatnonzero(np.repeat(outside, ancilla_dim))
    eye = np.eye(u.shape[0])
    err = max(np.max(np.abs(u[idx, :] - eye[idx, :])), np.max(np.abs(u[:, idx] - eye[:, idx])))
    if err > tol:
        raise CausalityMaskError(
            f"operator acts on paths outside support {sorted(support)} (deviation {err:.3e})"
        )


def apply_joint_unitary(joint: JointState, u, support) -> JointState:
    """Apply ``u`` (over 2**k * d_E) to the joint state, enforcing the causal mask."""
    m = _as_matrix(u)
    n, d = joint.amps.shape
    if m.shape[0] != n * d:
        raise ValueError(f"unitary dim {m.shape[0]} does not match joint dim {n * d}")
    check_mask(m, support, joint.k, d)
    return JointState(joint.k, (m @ joint.amps.reshape(-1)).reshape(n, d))

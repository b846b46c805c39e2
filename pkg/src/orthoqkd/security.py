"""Numerical checks of the no-information argument for causal attacks.

An attack operator ``u`` acts on path ⊗ ancilla (index ``p * d_E + e``) with Eve's
ancilla starting in its first basis vector. Feeding it each of Alice's states
gives ``u |Psi_i>|e0> = s_i |Psi_i>|Phi_i> + (residual)``; an undetectable attack
has zero residual and a common scale ``s_i = 2**(k/2) * C``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import unitary_group

from .adversary import (
    AttackStep,
    CausalAncillaUnitary,
    attack_operator,
    detection_probability_oracle,
    holevo_pure,
)
from .optics import _as_matrix
from .protocol import alice_prepare
from .timing import CausalWindow, TimingConfig, build_schedule, causal_window

_ZERO = 1e-12


@dataclass(frozen=True)
class Tolerances:
    constraint: float = 1e-10
    conclusion: float = 1e-8
    information: float = 1e-6


@dataclass(frozen=True, eq=False)
class PhiExtraction:
    phis: list          # unnormalized s_i * Phi_i
    scale: float        # common C
    detection_residuals: np.ndarray
    outputs: list       # u |Psi_i>|e0> as [2**k x d_E] matrices

    @property
    def detection_residual(self) -> float:
        return float(np.max(self.detection_residuals))

    def normalized(self) -> list:
        return [None if np.linalg.norm(v) < _ZERO else v / np.linalg.norm(v) for v in self.phis]


@dataclass(frozen=True)
class ConstraintResiduals:
    magnitude: float
    phase: float
    causality: float
    phi_spread: float
    detection: float


@dataclass(frozen=True)
class ProofCheck:
    residuals: ConstraintResiduals
    holevo_bits: float
    walsh_consistent: bool
    premise: bool
    verdict: bool


def _check_dims(u: np.ndarray, k: int, ancilla_dim: int) -> None:
    if u.shape[0] != (1 << k) * ancilla_dim:
        raise ValueError(f"operator dim {u.shape[0]} != 2**{k} * {ancilla_dim}")


def extract_phi_states(u, k: int, ancilla_dim: int) -> PhiExtraction:
    m = _as_matrix(u)
    _check_dims(m, k, ancilla_dim)
    n = 1 << k
    e0 = np.zeros(ancilla_dim, dtype=complex)
    e0[0] = 1.0
    phis, outs, resid = [], [], []
    for i in range(n):
        psi = alice_prepare(i, k).amps
        out = (m @ np.kron(psi, e0)).reshape(n, ancilla_dim)
        phi = psi.conj() @ out
        outs.append(out)
        phis.append(phi)
        resid.append(np.linalg.norm(out - np.outer(psi, phi)))
    scale = float(np.mean([np.linalg.norm(v) for v in phis])) / math.sqrt(n)
    return PhiExtraction(phis, scale, np.array(resid), outs)


def sine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """sqrt(1 - |<a|b>|^2) for normalized vectors; blind to global phase.

    Evaluated as the length of b's component orthogonal to a, which stays accurate
    near zero where the closed form loses half its digits.
    """
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return float(min(1.0, np.linalg.norm(b - np.vdot(a, b) * a)))


def phi_spread(phis: Sequence[np.ndarray]) -> float:
    """Largest pairwise sine distance; a vanishing state counts as fully distinct."""
    if any(v is None or np.linalg.norm(v) < _ZERO for v in phis):
        return 1.0
    return max((sine_distance(a, b) for n, a in enumerate(phis) for b in phis[n + 1:]), default=0.0)


def walsh_sums(phis: Sequence[np.ndarray]) -> np.ndarray:
    """Row ``m - 1`` holds sum_i (-1)**popcount(i & m) Phi_i for m = 1 .. n-1.

    For n = 4 these are the b-, a-, c-path coefficient combinations left by the
    last component; together with the all-plus sum (m = 0) they determine every
    Phi_i, so they vanish exactly when all Phi_i coincide.
    """
    vs = np.array(phis, dtype=complex)
    n = vs.shape[0]
    rows = []
    for m in range(1, n):
        signs = np.array([1 - 2 * (bin(i & m).count("1") & 1) for i in range(n)])
        rows.append(signs @ vs)
    return np.array(rows)


def _forbidden(q: int, n: int, windows) -> list[int]:
    """Components released before ``q`` that never share a window with it."""
    together = set()
    for w in windows or ():
        if q in w.accessible:
            together |= w.accessible
    return [p for p in range(q) if p not in together]


def causality_residual(u, k: int, ancilla_dim: int,
                       windows: Sequence[CausalWindow] | None = None) -> float:
    """Largest squared amplitude a later component sends into earlier, departed ones.

    Component ``q`` enters as ``|q>|e0>``; any weight the output places on a path that
    left Eve's domain before ``q`` arrived (no shared window) is acausal. For k = 2
    and ``q = 3`` this is the weight on a, b and c.
    """
    m = _as_matrix(u)
    _check_dims(m, k, ancilla_dim)
    n = 1 << k
    worst = 0.0
    for q in range(1, n):
        bad = _forbidden(q, n, windows)
        if not bad:
            continue
        out = m[:, q * ancilla_dim].reshape(n, ancilla_dim)
        worst = max(worst, float(np.sum(np.abs(out[bad]) ** 2)))
    return worst


def constraint_residuals(ext: PhiExtraction, k: int, causality: float) -> ConstraintResiduals:
    n = 1 << k
    magnitude = phase = 0.0
    for i, (out, phi) in enumerate(zip(ext.outputs, ext.phis)):
        signs = np.real(alice_prepare(i, k).amps) * math.sqrt(n)
        mags = np.linalg.norm(out, axis=1)
        magnitude = max(magnitude, float(np.max(np.abs(mags - ext.scale))))
        nphi = np.linalg.norm(phi)
        if nphi < _ZERO:
            phase = max(phase, 2.0)
            continue
        for p in range(n):
            if mags[p] < _ZERO:
                continue
            v = signs[p] * out[p] / mags[p]
            phase = max(phase, float(np.linalg.norm(v - phi / nphi)))
    return ConstraintResiduals(
        magnitude=magnitude,
        phase=phase,
        causality=causality,
        phi_spread=phi_spread(ext.normalized()),
        detection=ext.detection_residual,
    )


def ensemble_information(ext: PhiExtraction) -> float:
    """Holevo quantity of {uniform i, Phi_i} over the states Bob can still find."""
    return holevo_pure([v for v in ext.normalized() if v is not None])


def verify_proof_instance(u, k: int, ancilla_dim: int,
                          windows: Sequence[CausalWindow] | None = None,
                          tol: Tolerances = Tolerances()) -> ProofCheck:
    """Check "causal and undetectable implies Eve's states coincide" for one operator."""
    ext = extract_phi_states(u, k, ancilla_dim)
    res = constraint_residuals(ext, k, causality_residual(u, k, ancilla_dim, windows))
    info = ensemble_information(ext)
    premise = res.causality <= tol.constraint and res.detection <= tol.constraint
    sums_vanish = bool(np.max(np.abs(walsh_sums(ext.phis)), initial=0.0) <= tol.conclusion)
    spread_vanishes = res.phi_spread <= tol.conclusion
    walsh_ok = sums_vanish == spread_vanishes
    conclusion = spread_vanishes and info <= tol.information and walsh_ok
    return ProofCheck(res, info, walsh_ok, premise, (not premise) or conclusion)


def _haar(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(d, random_state=rng)


def _step_time(p: int, cfg: TimingConfig, eve_position: int) -> int:
    return p * cfg.loop_delay + eve_position


def random_causal_attack(cfg: TimingConfig, ancilla_dim: int, rng: np.random.Generator,
                         undetectable: bool = False) -> CausalAncillaUnitary:
    """One Haar-random ancilla unitary per component, applied while it crosses Eve's domain.

    With ``undetectable`` every block sends the ancilla's start vector to the same
    place (a shared Haar unitary after a Haar unitary fixing the start vector),
    which is exactly the condition for Bob never seeing an error.
    """
    n = cfg.components
    pos = cfg.transit // 2
    shared = _haar(ancilla_dim, rng) if undetectable else None
    steps = []
    for p in range(n):
        if undetectable:
            fix = np.eye(ancilla_dim, dtype=complex)
            if ancilla_dim > 1:
                fix[1:, 1:] = _haar(ancilla_dim - 1, rng)
            block = shared @ fix
        else:
            block = _haar(ancilla_dim, rng)
        steps.append(AttackStep(_step_time(p, cfg, pos), (p,), block))
    return CausalAncillaUnitary(ancilla_dim, tuple(steps), eve_position=pos, domain_length=1)


def attack_windows(attack: CausalAncillaUnitary, cfg: TimingConfig) -> list[CausalWindow]:
    sched = build_schedule(0, cfg)
    pos = attack.position(sched)
    holds = attack.delays(cfg.components)
    return [causal_window(pos, attack.domain_length, sched, s.time, holds) for s in attack.steps]


# -- attack families for tradeoff scans ------------------------------------------------

def controlled_phase_attack(theta: float, cfg: TimingConfig) -> CausalAncillaUnitary:
    """Phase ``theta`` on an ancilla qubit in |+> when the last two components are antisymmetric.

    Eve's domain is one tick longer than a loop so the last two components are
    inside it together; their relative sign is bit 0 of Alice's index.
    """
    n = cfg.components
    if n < 2:
        raise ValueError("needs at least two components")
    L = cfg.loop_delay
    pos = cfg.transit // 2
    minus = np.array([1.0, -1.0]) / math.sqrt(2.0)
    proj = np.kron(np.outer(minus, minus), np.diag([0.0, 1.0]))
    local = np.eye(4, dtype=complex) - (1.0 - np.exp(1j * theta)) * proj
    step = AttackStep(_step_time(n - 1, cfg, pos), (n - 2, n - 1), local)
    plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
    return CausalAncillaUnitary(2, (step,), ancilla_init=plus, eve_position=pos, domain_length=L + 1)


def single_path_probe_attack(theta: float, cfg: TimingConfig) -> CausalAncillaUnitary:
    """Rotate an ancilla qubit by ``theta`` when the photon is on the last path."""
    n = cfg.components
    pos = cfg.transit // 2
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    local = np.array([[c, -s], [s, c]], dtype=complex)
    step = AttackStep(_step_time(n - 1, cfg, pos), (n - 1,), local)
    return CausalAncillaUnitary(2, (step,), eve_position=pos, domain_length=1)


FAMILIES: dict[str, Callable[[float, TimingConfig], CausalAncillaUnitary]] = {
    "controlled-phase": controlled_phase_attack,
    "single-path-probe": single_path_probe_attack,
}


@dataclass(frozen=True)
class ScanRow:
    family: str
    params: dict = field(default_factory=dict)
    detection_probability: float = 0.0
    eve_information_bits: float = 0.0


def attack_information(attack: CausalAncillaUnitary, cfg: TimingConfig) -> float:
    return ensemble_information(extract_phi_states(attack_operator(attack, cfg), cfg.k, attack.ancilla_dim))


def tradeoff_scan(family: str, grid: Sequence[float], cfg: TimingConfig) -> list[ScanRow]:
    if family not in FAMILIES:
        raise KeyError(f"unknown family {family!r}; available: {', '.join(sorted(FAMILIES))}")
    build = FAMILIES[family]
    rows = []
    for theta in sorted(float(g) for g in grid):
        attack = build(theta, cfg)
        rows.append(ScanRow(
            family=family,
            params={"theta": theta},
            detection_probability=detection_probability_oracle(attack, cfg),
            eve_information_bits=attack_information(attack, cfg),
        ))
    return rows

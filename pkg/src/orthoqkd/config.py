"""Session configuration: JSON parsing, validation and the canonical echo.

Unknown keys are rejected. Complex numbers are written as ``[re, im]`` pairs (a
bare number is read as real).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .adversary import (
    Attack,
    AttackStep,
    CausalAncillaUnitary,
    FullStateMeasureResend,
    NoAttack,
    PathMeasureResend,
)
from .errors import ConfigError
from .timing import TimingConfig

SCHEMA_VERSION = 1
DISCLOSURE_POLICIES = ("uniform-axis",)

_TOP_KEYS = {"schemaVersion", "k", "photons", "seed", "timing", "attack",
             "disclosurePolicy", "abortThreshold", "outputPath"}
_REQUIRED = ("schemaVersion", "k", "photons", "seed")
_TIMING_KEYS = {"deltaT": "delta_t", "epsilon": "epsilon", "distance": "distance", "mu": "mu",
                "lengthenLoops": "lengthen_loops", "emissionProbability": "emission_probability"}
_ATTACK_KEYS = {
    "none": {"type"},
    "path_measure_resend": {"type", "resendPolicy"},
    "full_state_measure_resend": {"type", "shortcutGain"},
    "causal_ancilla_unitary": {"type", "ancillaDim", "steps", "bufferDelays", "ancillaInit",
                               "evePosition", "domainLength"},
}
_STEP_KEYS = {"time", "support", "unitary"}


@dataclass(frozen=True)
class SessionConfig:
    k: int = 2
    photons: int = 1000
    seed: int = 0
    timing: TimingConfig = field(default_factory=TimingConfig)
    attack: Attack = field(default_factory=NoAttack)
    disclosure_policy: str = "uniform-axis"
    abort_threshold: int = 0
    output_path: str | None = None

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 1 << 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}", field="seed")
        if self.photons < 1:
            raise ConfigError(f"photons must be >= 1, got {self.photons}", field="photons")
        if self.timing.k != self.k:
            raise ConfigError(f"timing k={self.timing.k} does not match k={self.k}", field="k")
        if self.disclosure_policy not in DISCLOSURE_POLICIES:
            raise ConfigError(f"unknown disclosurePolicy {self.disclosure_policy!r}",
                              field="disclosurePolicy")


def _line_of(source: str | None, key: str) -> int | None:
    if not source:
        return None
    pat = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for n, line in enumerate(source.splitlines(), start=1):
        if pat.search(line):
            return n
    return None


class _Reader:
    def __init__(self, source: str | None):
        self.source = source

    def error(self, msg: str, key: str) -> ConfigError:
        return ConfigError(msg, field=key, line=_line_of(self.source, key.split(".")[-1]))

    def check_keys(self, obj: Any, allowed: set, where: str):
        if not isinstance(obj, dict):
            raise self.error(f"{where} must be an object", where)
        for key in obj:
            if key not in allowed:
                raise self.error(f"unknown field {key!r} in {where}", key)

    def int_(self, obj: dict, key: str, default=None, minimum: int | None = None, where: str = ""):
        name = f"{where}.{key}" if where else key
        if key not in obj:
            if default is None:
                raise self.error(f"missing required field {name!r}", name)
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.error(f"field {name!r} must be an integer, got {v!r}", name)
        if minimum is not None and v < minimum:
            raise self.error(f"field {name!r} must be >= {minimum}, got {v}", name)
        return v


def _complex(v, name: str, reader: _Reader) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise reader.error(f"{name} entries must be numbers or [re, im] pairs, got {v!r}", name)


def _complex_matrix(rows, name: str, reader: _Reader) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise reader.error(f"{name} must be a list of rows", name)
    return np.array([[_complex(v, name, reader) for v in r] for r in rows], dtype=complex)


def _encode_complex(z: complex):
    return [float(z.real), float(z.imag)]


def _parse_attack(obj: dict, r: _Reader) -> Attack:
    if not isinstance(obj, dict) or "type" not in obj:
        raise r.error("attack must be an object with a 'type'", "attack")
    kind = obj["type"]
    if kind not in _ATTACK_KEYS:
        raise r.error(f"unknown attack type {kind!r}; expected one of {sorted(_ATTACK_KEYS)}", "type")
    r.check_keys(obj, _ATTACK_KEYS[kind], "attack")
    try:
        if kind == "none":
            return NoAttack()
        if kind == "path_measure_resend":
            return PathMeasureResend(obj.get("resendPolicy", "forward"))
        if kind == "full_state_measure_resend":
            return FullStateMeasureResend(r.int_(obj, "shortcutGain", 0, 0, "attack"))
        d = r.int_(obj, "ancillaDim", None, 1, "attack")
        steps = []
        for s in obj.get("steps", []):
            r.check_keys(s, _STEP_KEYS, "attack.steps")
            if not isinstance(s.get("support"), list):
                raise r.error("step support must be a list of path indices", "support")
            steps.append(AttackStep(r.int_(s, "time", None, None, "step"), tuple(s["support"]),
                                    _complex_matrix(s.get("unitary"), "unitary", r)))
        init = obj.get("ancillaInit")
        if init is not None:
            if not isinstance(init, list):
                raise r.error("ancillaInit must be a list", "ancillaInit")
            init = np.array([_complex(v, "ancillaInit", r) for v in init])
        delays = obj.get("bufferDelays", [])
        if not isinstance(delays, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in delays):
            raise r.error("bufferDelays must be a list of integers", "bufferDelays")
        pos = obj.get("evePosition")
        if pos is not None:
            pos = r.int_(obj, "evePosition", None, 0, "attack")
        return CausalAncillaUnitary(
            ancilla_dim=d, steps=tuple(steps), buffer_delays=tuple(delays), ancilla_init=init,
            eve_position=pos, domain_length=r.int_(obj, "domainLength", 1, 1, "attack"),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError, NotImplementedError) as exc:
        raise r.error(f"invalid attack: {exc}", "attack") from exc


def config_from_dict(data: dict, source: str | None = None) -> SessionConfig:
    r = _Reader(source)
    r.check_keys(data, _TOP_KEYS, "config")
    for key in _REQUIRED:
        if key not in data:
            raise r.error(f"missing required field {key!r}", key)
    version = r.int_(data, "schemaVersion")
    if version != SCHEMA_VERSION:
        raise r.error(f"unsupported schemaVersion {version}; expected {SCHEMA_VERSION}", "schemaVersion")
    k = r.int_(data, "k", minimum=1)
    photons = r.int_(data, "photons", minimum=1)
    seed = r.int_(data, "seed", minimum=0)
    if seed >= 1 << 64:
        raise r.error("seed must fit in 64 bits", "seed")

    timing_obj = data.get("timing", {})
    r.check_keys(timing_obj, set(_TIMING_KEYS), "timing")
    try:
        timing = TimingConfig(k=k, **{_TIMING_KEYS[key]: v for key, v in timing_obj.items()})
    except ConfigError as exc:
        raise r.error(str(exc), exc.field or "timing") from exc
    except TypeError as exc:
        raise r.error(f"invalid timing: {exc}", "timing") from exc

    attack = _parse_attack(data.get("attack", {"type": "none"}), r)
    policy = data.get("disclosurePolicy", "uniform-axis")
    if policy not in DISCLOSURE_POLICIES:
        raise r.error(f"unknown disclosurePolicy {policy!r}", "disclosurePolicy")
    out = data.get("outputPath")
    if out is not None and not isinstance(out, str):
        raise r.error("outputPath must be a string", "outputPath")
    return SessionConfig(
        k=k, photons=photons, seed=seed, timing=timing, attack=attack,
        disclosure_policy=policy, abort_threshold=r.int_(data, "abortThreshold", 0, 0),
        output_path=out,
    )


def parse_config(text: str) -> SessionConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
    return config_from_dict(data, source=text)


def load_config(path) -> SessionConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def attack_to_dict(attack: Attack) -> dict:
    if isinstance(attack, NoAttack):
        return {"type": "none"}
    if isinstance(attack, PathMeasureResend):
        return {"type": "path_measure_resend", "resendPolicy": attack.resend_policy}
    if isinstance(attack, FullStateMeasureResend):
        return {"type": "full_state_measure_resend", "shortcutGain": attack.shortcut_gain}
    out = {
        "type": "causal_ancilla_unitary",
        "ancillaDim": attack.ancilla_dim,
        "steps": [
            {"time": s.time, "support": list(s.support),
             "unitary": [[_encode_complex(z) for z in row] for row in s.unitary]}
            for s in attack.steps
        ],
        "bufferDelays": list(attack.buffer_delays),
        "domainLength": attack.domain_length,
    }
    if attack.ancilla_init is not None:
        out["ancillaInit"] = [_encode_complex(z) for z in attack.ancilla_init]
    if attack.eve_position is not None:
        out["evePosition"] = attack.eve_position
    return out


def config_to_dict(cfg: SessionConfig) -> dict:
    t = cfg.timing
    return {
        "schemaVersion": SCHEMA_VERSION,
        "k": cfg.k,
        "photons": cfg.photons,
        "seed": cfg.seed,
        "timing": {
            "deltaT": t.delta_t,
            "epsilon": t.epsilon,
            "distance": t.distance,
            "mu": t.mu,
            "lengthenLoops": t.lengthen_loops,
            "emissionProbability": t.emission_probability,
        },
        "attack": attack_to_dict(cfg.attack),
        "disclosurePolicy": cfg.disclosure_policy,
        "abortThreshold": cfg.abort_threshold,
        "outputPath": cfg.output_path,
    }

"""Command-line entry point: ``simulate``, ``verify-proof`` and ``scan``.

Exit codes: 0 clean, 1 usage or config error, 2 eavesdropper detected,
3 internal invariant failure (including a failed proof check).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import SessionConfig, config_to_dict, load_config
from .errors import ConfigError, InvariantError
from .rng import proof_stream
from .adversary import attack_operator
from .security import (
    FAMILIES,
    Tolerances,
    attack_windows,
    random_causal_attack,
    tradeoff_scan,
    verify_proof_instance,
)
from .session import run_session
from .timing import TimingConfig

EXIT_OK, EXIT_USAGE, EXIT_DETECTED, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _dump(payload: dict) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _emit(text: str, out: str | None, quiet: bool) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    elif not quiet:
        sys.stdout.write(text)


def _metadata() -> dict:
    return {"tool": "orthoqkd", "version": __version__,
            "generatedAt": datetime.now(timezone.utc).isoformat(timespec="seconds")}


def simulation_payload(cfg: SessionConfig) -> dict:
    stats = run_session(cfg)
    return {
        "config": config_to_dict(cfg),
        "result": {
            "totalPhotons": stats.total_photons,
            "keyLength": len(stats.key_bits),
            "keyBits": stats.key_bits,
            "timingViolations": stats.timing_violations,
            "bitMismatches": stats.bit_mismatches,
            "flaggedPhotons": stats.flagged_photons,
            "detected": stats.detected,
            "keyRatePerPhoton": float(stats.key_rate_per_photon),
            "eveInformationBits": stats.eve_information_bits,
        },
    }


def cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        try:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        except (ConfigError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    payload = simulation_payload(cfg)
    if args.with_metadata:
        payload = {"metadata": _metadata(), **payload}
    _emit(_dump(payload), args.out or cfg.output_path, args.quiet)
    return EXIT_DETECTED if payload["result"]["detected"] else EXIT_OK


def proof_report(samples: int, ancilla_dim: int, seed: int, k: int = 2,
                 tol: Tolerances = Tolerances()) -> dict:
    """Sample causal attacks (alternately generic and undetectable) and check each."""
    cfg = TimingConfig(k=k, distance=8)
    filtered = failures = 0
    max_spread = max_info = max_causality = 0.0
    for n in range(samples):
        rng = proof_stream(seed, n)
        attack = random_causal_attack(cfg, ancilla_dim, rng, undetectable=bool(n % 2))
        u = attack_operator(attack, cfg)
        check = verify_proof_instance(u, k, ancilla_dim, attack_windows(attack, cfg), tol)
        max_causality = max(max_causality, check.residuals.causality)
        failures += not check.verdict
        if check.residuals.detection <= tol.constraint:
            filtered += 1
            max_spread = max(max_spread, check.residuals.phi_spread)
            max_info = max(max_info, check.holevo_bits)
    passed = failures == 0 and max_spread <= tol.conclusion and max_info <= tol.information
    return {
        "samples": samples,
        "ancillaDim": ancilla_dim,
        "k": k,
        "seed": seed,
        "tolerances": {"constraint": tol.constraint, "conclusion": tol.conclusion,
                       "information": tol.information},
        "undetectableSamples": filtered,
        "maxCausalityResidual": max_causality,
        "maxFilteredPhiSpread": max_spread,
        "maxFilteredHolevoBits": max_info,
        "failedInstances": failures,
        "verdict": "PASS" if passed else "FAIL",
    }


def cmd_verify_proof(args) -> int:
    if args.samples < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if not 1 <= args.ancilla_dim <= 16:
        print("error: --ancilla-dim must be in [1, 16]", file=sys.stderr)
        return EXIT_USAGE
    report = proof_report(args.samples, args.ancilla_dim, args.seed, args.k)
    payload = {"metadata": _metadata(), **report} if args.with_metadata else report
    _emit(_dump(payload), args.out, args.quiet)
    return EXIT_OK if report["verdict"] == "PASS" else EXIT_INTERNAL


def parse_grid(spec: str) -> list[float]:
    """``start:stop:count`` (inclusive, ``pi`` allowed) or a comma-separated list."""
    def num(s: str) -> float:
        s = s.strip().lower()
        scale = 1.0
        if s.endswith("pi"):
            head = s[:-2].rstrip("*")
            scale, s = math.pi, (head if head not in ("", "+") else "1")
            if s == "-":
                s = "-1"
        return float(s) * scale

    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {spec!r} must be start:stop:count")
        start, stop = num(parts[0]), num(parts[1])
        count = int(parts[2])
        if count < 1:
            raise ValueError(f"grid resolution must be positive, got {count}")
        if count == 1:
            return [start]
        if stop < start:
            raise ValueError("grid stop must be >= start")
        return [float(x) for x in np.linspace(start, stop, count)]
    values = [num(s) for s in spec.split(",") if s.strip()]
    if not values:
        raise ValueError("empty grid")
    return values


def scan_csv(family: str, grid: list[float], cfg: TimingConfig) -> str:
    rows = tradeoff_scan(family, grid, cfg)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["family", "theta", "detection_probability", "eve_information_bits"])
    for r in rows:
        writer.writerow([r.family, repr(r.params["theta"]), repr(r.detection_probability),
                         repr(r.eve_information_bits)])
    return buf.getvalue()


def cmd_scan(args) -> int:
    if args.family not in FAMILIES:
        print(f"error: unknown family {args.family!r}; available: {', '.join(sorted(FAMILIES))}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        grid = parse_grid(args.grid)
    except ValueError as exc:
        print(f"error: bad --grid: {exc}", file=sys.stderr)
        return EXIT_USAGE
    timing = TimingConfig()
    if args.config:
        try:
            timing = load_config(args.config).timing
        except (OSError, ConfigError) as exc:
            print(f"error: {args.config}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    _emit(scan_csv(args.family, grid, timing), args.out, args.quiet)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="orthoqkd", description="Relativistic orthogonal-state QKD simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one session from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    s.add_argument("--out", default=None)
    s.add_argument("--quiet", action="store_true")
    s.add_argument("--with-metadata", action="store_true",
                   help="prepend a metadata block with a timestamp")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify-proof", help="check the security argument on random causal attacks")
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("--ancilla-dim", type=int, default=4)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--k", type=int, default=2)
    v.add_argument("--out", default=None)
    v.add_argument("--quiet", action="store_true")
    v.add_argument("--with-metadata", action="store_true")
    v.set_defaults(func=cmd_verify_proof)

    c = sub.add_parser("scan", help="detection vs information along an attack family")
    c.add_argument("--family", required=True)
    c.add_argument("--grid", default="0:pi:11")
    c.add_argument("--config", default=None, help="take timing parameters from a session config")
    c.add_argument("--out", default=None)
    c.add_argument("--quiet", action="store_true")
    c.set_defaults(func=cmd_scan)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

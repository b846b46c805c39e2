import csv
import io
import json
import math

import numpy as np
import pytest

from orthoqkd.adversary import CausalAncillaUnitary, FullStateMeasureResend, PathMeasureResend
from orthoqkd.cli import main, parse_grid
from orthoqkd.config import SessionConfig, config_from_dict, config_to_dict, parse_config
from orthoqkd.errors import ConfigError
from orthoqkd.security import controlled_phase_attack
from orthoqkd.timing import TimingConfig

BASE = {"schemaVersion": 1, "k": 2, "photons": 200, "seed": 5}


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data, indent=2))
    return p


class TestConfig:
    def test_defaults(self):
        cfg = config_from_dict(BASE)
        assert cfg.timing == TimingConfig(k=2)
        assert cfg.abort_threshold == 0 and cfg.disclosure_policy == "uniform-axis"

    @pytest.mark.parametrize("attack", [
        PathMeasureResend("guess"),
        FullStateMeasureResend(shortcut_gain=4),
        controlled_phase_attack(0.9, TimingConfig(distance=6)),
    ], ids=["path", "full", "ancilla"])
    def test_round_trip_through_echo(self, attack):
        cfg = SessionConfig(photons=7, seed=2**64 - 1, timing=TimingConfig(distance=6, mu=2), attack=attack)
        echo = config_to_dict(cfg)
        again = parse_config(json.dumps(echo))
        assert config_to_dict(again) == echo
        if isinstance(attack, CausalAncillaUnitary):
            np.testing.assert_allclose(again.attack.steps[0].unitary, attack.steps[0].unitary)
        else:
            assert again.attack == attack

    def test_unknown_top_level_field(self):
        with pytest.raises(ConfigError, match="unknown field 'photon'"):
            config_from_dict({**BASE, "photon": 3})

    def test_unknown_timing_field(self):
        with pytest.raises(ConfigError, match="deltat"):
            config_from_dict({**BASE, "timing": {"deltat": 1}})

    def test_missing_seed_names_field_and_line(self):
        text = '{\n  "schemaVersion": 1,\n  "k": 2,\n  "photons": 10\n}'
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.field == "seed" and "seed" in str(info.value)

    def test_bad_value_reports_line(self):
        text = '{\n  "schemaVersion": 1,\n  "k": 2,\n  "photons": -3,\n  "seed": 1\n}'
        with pytest.raises(ConfigError, match="line 4"):
            parse_config(text)

    def test_malformed_json(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config('{"k": 2,\n oops}')

    @pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True])
    def test_seed_range(self, seed):
        with pytest.raises(ConfigError):
            config_from_dict({**BASE, "seed": seed})

    def test_schema_version(self):
        with pytest.raises(ConfigError, match="schemaVersion"):
            config_from_dict({**BASE, "schemaVersion": 2})

    def test_unknown_attack(self):
        with pytest.raises(ConfigError, match="path_measure_resend"):
            config_from_dict({**BASE, "attack": {"type": "beam_split"}})

    def test_non_unitary_step_rejected(self):
        bad = {"type": "causal_ancilla_unitary", "ancillaDim": 2,
               "steps": [{"time": 3, "support": [0], "unitary": [[1, 0], [0, 2]]}]}
        with pytest.raises(ConfigError, match="invalid attack"):
            config_from_dict({**BASE, "attack": bad})


class TestSimulate:
    def test_honest_run(self, tmp_path, capsys):
        cfg = _write(tmp_path, BASE)
        assert main(["simulate", "--config", str(cfg)]) == 0
        out = json.loads(capsys.readouterr().out)
        res = out["result"]
        assert res["keyRatePerPhoton"] == 1.0 and res["keyLength"] == 200
        assert res["timingViolations"] == 0 and not res["detected"]
        assert out["config"] == config_to_dict(config_from_dict(BASE))
        assert "metadata" not in out

    def test_full_state_attack_detected(self, tmp_path, capsys):
        cfg = _write(tmp_path, {**BASE, "attack": {"type": "full_state_measure_resend"}})
        assert main(["simulate", "--config", str(cfg)]) == 2
        res = json.loads(capsys.readouterr().out)["result"]
        assert res["timingViolations"] == 200 and res["detected"]

    def test_missing_seed_exit_1(self, tmp_path, capsys):
        cfg = _write(tmp_path, {k: v for k, v in BASE.items() if k != "seed"})
        assert main(["simulate", "--config", str(cfg)]) == 1
        assert "seed" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 1

    def test_seed_override_and_out(self, tmp_path):
        cfg = _write(tmp_path, BASE)
        out = tmp_path / "r.json"
        assert main(["simulate", "--config", str(cfg), "--seed", "77", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["config"]["seed"] == 77

    def test_metadata_opt_in(self, tmp_path, capsys):
        cfg = _write(tmp_path, BASE)
        main(["simulate", "--config", str(cfg), "--with-metadata"])
        assert "generatedAt" in json.loads(capsys.readouterr().out)["metadata"]

    def test_quiet(self, tmp_path, capsys):
        cfg = _write(tmp_path, BASE)
        main(["simulate", "--config", str(cfg), "--quiet"])
        assert capsys.readouterr().out == ""

    def test_usage_error_exit_1(self):
        with pytest.raises(SystemExit) as info:
            main(["simulate"])
        assert info.value.code == 1


class TestVerifyProof:
    def test_zero_samples(self, capsys):
        assert main(["verify-proof", "--samples", "0"]) == 1
        assert "samples" in capsys.readouterr().err

    def test_bad_dim(self):
        assert main(["verify-proof", "--ancilla-dim", "0"]) == 1

    def test_report_is_reproducible(self, tmp_path):
        outs = [tmp_path / "a.json", tmp_path / "b.json"]
        for o in outs:
            assert main(["verify-proof", "--samples", "40", "--seed", "3", "--out", str(o)]) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()
        rep = json.loads(outs[0].read_text())
        assert rep["verdict"] == "PASS" and rep["undetectableSamples"] == 20


class TestScan:
    def _rows(self, text):
        return list(csv.reader(io.StringIO(text)))

    def test_default_grid(self, capsys):
        assert main(["scan", "--family", "controlled-phase"]) == 0
        text = capsys.readouterr().out
        rows = self._rows(text)
        assert rows[0] == ["family", "theta", "detection_probability", "eve_information_bits"]
        body = rows[1:]
        assert len(body) == 11
        thetas = [float(r[1]) for r in body]
        assert thetas == sorted(thetas) and thetas[-1] == pytest.approx(math.pi)
        assert [float(x) for x in body[0][1:]] == [0.0, 0.0, 0.0]
        assert "\r\n" in text

    def test_negative_resolution(self, capsys):
        assert main(["scan", "--family", "controlled-phase", "--grid", "0:1:-3"]) == 1
        assert "positive" in capsys.readouterr().err

    def test_unknown_family_lists_available(self, capsys):
        assert main(["scan", "--family", "teleport"]) == 1
        err = capsys.readouterr().err
        assert "controlled-phase" in err and "single-path-probe" in err

    def test_timing_from_config(self, tmp_path, capsys):
        cfg = _write(tmp_path, {**BASE, "timing": {"distance": 12}})
        assert main(["scan", "--family", "single-path-probe", "--grid", "0,pi", "--config", str(cfg)]) == 0
        body = self._rows(capsys.readouterr().out)[1:]
        assert float(body[1][2]) == pytest.approx(0.25)


@pytest.mark.parametrize("spec, expected", [
    ("0:1:3", [0.0, 0.5, 1.0]),
    ("0:pi:2", [0.0, math.pi]),
    ("pi/2", None),
    ("0.5,2*pi,-pi", [0.5, 2 * math.pi, -math.pi]),
    ("1:1:1", [1.0]),
])
def test_parse_grid(spec, expected):
    if expected is None:
        with pytest.raises(ValueError):
            parse_grid(spec)
    else:
        assert parse_grid(spec) == pytest.approx(expected)


@pytest.mark.parametrize("spec", ["0:1", "1:0:3", "0:1:0", ","])
def test_parse_grid_errors(spec):
    with pytest.raises(ValueError):
        parse_grid(spec)

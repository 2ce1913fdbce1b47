import json
import os
import re

import numpy as np
import pytest

from ppassive import cli
from ppassive.circuits import circuit_to_dict
from ppassive.errors import DivergenceError, ValidationError


def write_circuit(path, **overrides):
    doc = json.loads(cli._preset_text("ladder_oscillator"))
    doc["components"].update(overrides)
    path.write_text(json.dumps(doc))
    return str(path)


class TestLoadCircuit:
    def test_oscillator_preset(self):
        cl = cli.load_preset("ladder_oscillator")
        c = cl.components
        assert cl.topology == "ladder_oscillator"
        assert (c["alpha"], c["R0"], c["C0"]) == (0.1, 1e6, 15.9e-9)
        assert cl.opamp.phi.to_dict()["params"] == {"exponent": 5, "scale": 12.0}

    def test_mixed_preset(self):
        c = cli.load_preset("mixed_sweep").components
        assert (c["C1"], c["C2"]) == (100e-6, 200e-6)

    def test_file_roundtrip(self, tmp_path, oscillator):
        p = tmp_path / "osc.json"
        p.write_text(json.dumps(circuit_to_dict(oscillator)))
        assert circuit_to_dict(cli.load_circuit(p)) == circuit_to_dict(oscillator)

    def test_negative_resistor(self, tmp_path):
        with pytest.raises(ValidationError, match="R1"):
            cli.load_circuit(write_circuit(tmp_path / "bad.json", R1=-1))

    def test_every_violation_listed(self, tmp_path):
        doc = json.loads(cli._preset_text("ladder_oscillator"))
        doc["components"].update(R1=-1, C1=0)
        doc["components"]["bogus"] = 1.0
        doc["topology2"] = "x"
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(doc))
        with pytest.raises(ValidationError) as err:
            cli.load_circuit(p)
        assert len(err.value.violations) >= 4

    def test_missing_and_malformed(self, tmp_path):
        with pytest.raises(ValidationError):
            cli.load_circuit(tmp_path / "nope.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        with pytest.raises(ValidationError):
            cli.load_circuit(bad)


class TestCommands:
    def test_rates_ladder(self, tmp_path, capsys):
        out = tmp_path / "cert.json"
        assert cli.run(["rates", "--preset", "ladder_oscillator", "--p", "2",
                        "--out", str(out)]) == 0
        text = capsys.readouterr().out
        lo, hi = map(float, re.search(r"network rates\s.*\n.*?\(([\d.]+), ([\d.]+)\)",
                                      text).groups())
        assert lo == pytest.approx(2.52, abs=0.02)
        assert hi == pytest.approx(4.92, abs=0.02)
        doc = json.loads(out.read_text())
        assert doc["degree"] == 2
        assert os.path.exists(str(out) + ".meta.json")

    def test_equilibria_bistable(self, tmp_path, capsys):
        out = tmp_path / "eq.json"
        assert cli.run(["equilibria", "--preset", "bistable", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        xs = sorted(e["state"][0] for e in doc["equilibria"])
        np.testing.assert_allclose(xs, [-20.904, 0.0, 20.904], atol=0.01)
        tags = {round(e["state"][0]): e["stability"] for e in doc["equilibria"]}
        assert tags[0] == "unstable" and tags[21] == tags[-21] == "stable"
        assert doc["bistability_condition"] is True
        assert "R1" in capsys.readouterr().out

    def test_certify_bistable(self, tmp_path):
        out = tmp_path / "c.json"
        assert cli.run(["certify", "--preset", "bistable", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["bounded"] is True
        assert {c["degree"] for c in doc["certificates"]} >= {1}

    def test_sweep_csv(self, tmp_path):
        out = tmp_path / "map.csv"
        assert cli.run(["sweep", "--preset", "mixed_sweep", "--grid", "12",
                        "--workers", "1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "Ra,Rb,label" and len(lines) == 145
        labels = {ln.rsplit(",", 1)[1] for ln in lines[1:]}
        assert labels == {"p0", "p2", "none"}
        meta = json.loads((tmp_path / "map.csv.meta.json").read_text())
        assert meta["options"]["grid"] == 12
        assert meta["circuit"]["topology"] == "mixed_feedback"

    def test_simulate_determinism(self, tmp_path):
        paths = []
        for k in range(2):
            out = tmp_path / f"traj{k}.csv"
            assert cli.run(["simulate", "--preset", "mixed_switching", "--t-end", "0.5",
                            "--dt", "1e-3", "--out", str(out)]) == 0
            paths.append(out)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert paths[0].read_text().startswith("t,x,z1,z2,Sa,Sb\n")

    def test_probe_determinism(self, tmp_path):
        blobs = []
        for k in range(2):
            out = tmp_path / f"probe{k}.json"
            assert cli.run(["probe", "--preset", "bistable", "--ics", "6", "--t-end", "1",
                            "--seed", "4", "--workers", "1", "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]

    def test_no_stray_temp_files(self, tmp_path):
        cli.run(["equilibria", "--preset", "bistable", "--out", str(tmp_path / "e.json")])
        assert sorted(os.listdir(tmp_path)) == ["e.json", "e.json.meta.json"]


class TestExitCodes:
    def test_validation_bad_file(self, tmp_path, capsys):
        path = write_circuit(tmp_path / "bad.json", R1=-1)
        assert cli.run(["rates", "--circuit", path]) == cli.EXIT_VALIDATION
        assert "rates" in capsys.readouterr().err

    def test_validation_bad_flag(self):
        assert cli.run(["simulate", "--preset", "bistable", "--dt", "-1"]) == 2
        assert cli.run(["sweep", "--preset", "bistable"]) == 2

    def test_certification_failure(self, tmp_path, capsys):
        code = cli.run(["rates", "--preset", "ladder_oscillator", "--p", "1",
                        "--out", str(tmp_path / "x.json")])
        assert code == cli.EXIT_CERTIFICATION
        assert not (tmp_path / "x.json").exists()

    def test_numeric_failure(self, monkeypatch, tmp_path, capsys):
        def boom(*a, **k):
            raise DivergenceError("integrate: state left the finite range", None)
        monkeypatch.setattr(cli, "integrate", boom)
        code = cli.run(["simulate", "--preset", "bistable", "--out", str(tmp_path / "t.csv")])
        assert code == cli.EXIT_NUMERIC
        assert "integrate" in capsys.readouterr().err

    def test_argparse_errors(self):
        with pytest.raises(SystemExit) as err:
            cli.run(["rates"])
        assert err.value.code == 2
        with pytest.raises(SystemExit):
            cli.run(["rates", "--preset", "nope"])

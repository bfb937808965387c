import json

import pytest

from xpmfocus import cli, experiments
from xpmfocus.experiments import CheckResult, example1_channel


@pytest.fixture
def example1_file(tmp_path):
    p = tmp_path / "h.json"
    p.write_text(json.dumps(example1_channel().to_json()))
    return p


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestDesign:
    def test_example1(self, capsys, example1_file):
        code, out, _ = run(capsys, "design", "--channel", example1_file, "--power", 1e6)
        assert code == 0
        doc = json.loads(out)
        assert doc["multipliers"] == [12, 10, 15]
        assert doc["focusing"]["max_residual"] == 0.0
        assert doc["config"]["command"] == "design"

    def test_identity_channel(self, capsys, tmp_path):
        p = tmp_path / "h.json"
        p.write_text(json.dumps({"K": 2, "unit": 1.0, "spm": [1.0, 1.0], "xpm": [[0, 1], [1, 0]]}))
        code, out, _ = run(capsys, "design", "--channel", p, "--power", 1e4)
        assert code == 0
        for c in json.loads(out)["constellations"]:
            assert c["p0"] == pytest.approx(6.283185307179586)

    def test_low_budget(self, capsys, example1_file):
        code, _, err = run(capsys, "design", "--channel", example1_file, "--power", 10)
        assert code == 2 and "error" in err

    def test_float_coefficient(self, capsys, tmp_path):
        p = tmp_path / "h.json"
        p.write_text(json.dumps({"K": 2, "unit": 1.0, "spm": [1.0, 1.0], "xpm": [[0, 0.7071], [1, 0]]}))
        code, _, _ = run(capsys, "design", "--channel", p, "--power", 1e4)
        assert code == 3

    def test_out_file(self, capsys, example1_file, tmp_path):
        out = tmp_path / "c.json"
        code, stdout, _ = run(capsys, "design", "--channel", example1_file, "--power", 1e5, "--out", out)
        assert code == 0 and stdout == ""
        assert len(json.loads(out.read_text())["constellations"]) == 3


class TestConfig:
    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"samples": 10000, "bogus": 1}))
        code, _, err = run(capsys, "mi", "--config", cfg)
        assert code == 2 and "bogus" in err

    def test_flags_override_file(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"samples": 10_000, "snr": 100.0, "seed": 5}))
        code, out, _ = run(capsys, "mi", "--config", cfg, "--seed", 7, "--scheme", "single_ring_phase")
        assert code == 0
        echo = json.loads(out)["config"]
        assert echo["seed"] == 7 and echo["snr"] == 100.0 and echo["samples"] == 10_000

    def test_bad_threads(self, capsys):
        code, _, _ = run(capsys, "mi", "--threads", 0, "--samples", 10_000)
        assert code == 2

    def test_help_lists_flags(self, capsys):
        parser = cli._parser()
        for name, sp in parser._subparsers._group_actions[0].choices.items():
            text = sp.format_help()
            for action in sp._actions:
                for opt in action.option_strings:
                    assert opt in text, (name, opt)


class TestVerify:
    def test_pass(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == 0 and "FAIL" not in out

    def test_json_stdout(self, capsys, monkeypatch):
        monkeypatch.setattr(experiments, "BOUND_CHECKS", [lambda: CheckResult("ok", True, 1.0)])
        code, out, _ = run(capsys, "verify", "--json")
        doc = json.loads(out)
        assert code == 0 and doc["passed"] and doc["checks"][0]["name"] == "ok"

    def test_injected_failure(self, capsys, monkeypatch):
        monkeypatch.setattr(experiments, "BOUND_CHECKS",
                            [lambda: CheckResult("ok", True, 1.0), lambda: CheckResult("bad", False, -1.0)])
        code, out, _ = run(capsys, "verify")
        assert code == 1 and "FAIL" in out


class TestSweepAndFriends:
    def test_sweep_csv_deterministic(self, capsys, tmp_path):
        paths = []
        for threads in (1, 3):
            p = tmp_path / f"s{threads}.csv"
            code, out, _ = run(capsys, "sweep", "--snr", 1e3, 1e4, 1e5, 1e6, "--samples", 10_000,
                               "--threads", threads, "--csv", p)
            assert code == 0 and "slope" in out
            paths.append(p.read_bytes())
        assert paths[0] == paths[1]

    def test_sweep_stdout_json(self, capsys):
        code, out, err = run(capsys, "sweep", "--scheme", "single_ring_phase", "--snr", 1e3, 1e4, 1e5, 1e6,
                             "--samples", 10_000, "--format", "json")
        assert code == 0 and "slope" in err
        doc = json.loads(out)
        assert len(doc["rows"]) == 4 and doc["slope_fit"]["k"] == 4

    def test_mi_csv(self, capsys):
        code, out, _ = run(capsys, "mi", "--snr", 1e4, "--samples", 10_000, "--format", "csv")
        assert code == 0 and out.splitlines()[0].startswith("snr_db,total_bits")

    def test_pe_rings(self, capsys):
        code, out, _ = run(capsys, "pe", "--rings", 10, "--spacing", 40, "--samples", 10_000)
        doc = json.loads(out)
        assert code == 0
        assert doc["report"]["pe_bound"] == pytest.approx(8.171987357e-5, rel=1e-6)

    def test_pe_needs_target(self, capsys):
        assert run(capsys, "pe")[0] == 2
        assert run(capsys, "pe", "--rings", 3)[0] == 2

    def test_example1(self, capsys):
        code, out, _ = run(capsys, "example1", "--m", 2, 3, 1)
        assert code == 0 and json.loads(out)["xpm_turns"] == ["24", "28", "26"]

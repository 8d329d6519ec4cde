import json
import subprocess
import sys

import pytest

from bellbound.cli import args_hash, build_parser, main

SUBCOMMANDS = ("parse", "classical", "tight", "canon", "generate", "seesaw", "npa", "certify", "eta", "golden")


@pytest.fixture
def rdir(tmp_path, monkeypatch):
    monkeypatch.delenv("BELLBOUND_RESULTS", raising=False)
    return tmp_path / "res"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def records(path):
    return sorted(path.rglob("*.json"))


def test_all_subcommands_registered():
    parser = build_parser()
    for name in SUBCOMMANDS:
        ns = parser.parse_args(_minimal(name))
        assert ns.command == name


def _minimal(name):
    if name == "parse":
        return ["parse", "x.txt"]
    if name == "generate":
        return ["generate", "--seed", "CHSH"]
    if name == "golden":
        return ["golden"]
    return [name, "--ineq", "CHSH"]


def test_classical_tight_canon(rdir, capsys):
    for cmd in ("classical", "tight", "canon"):
        code, out = run([cmd, "--ineq", "I3322", "--results-dir", str(rdir)], capsys)
        assert code == 0
    files = records(rdir)
    assert [f.parent.name for f in files] == ["I3322"] * 3
    assert {f.name.split("-")[0] for f in files} == {"classical", "tight", "canon"}
    rec = json.loads((rdir / "I3322").glob("classical-*.json").__next__().read_text())
    assert rec["outputs"]["bound"] == "0"


def test_json_stdout(rdir, capsys):
    code, out = run(["tight", "--ineq", "CHSH", "--json", "--results-dir", str(rdir)], capsys)
    assert code == 0
    rec = json.loads(out)
    assert rec["op"] == "tight" and rec["ineq"] == "CHSH"
    assert rec["outputs"]["tight"] is True


def test_json_to_file(rdir, tmp_path, capsys):
    target = tmp_path / "out.json"
    assert main(["classical", "--ineq", "CHSH", "--json", str(target), "--results-dir", str(rdir)]) == 0
    assert json.loads(target.read_text())["ineq"] == "CHSH"


def test_env_overrides_results_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BELLBOUND_RESULTS", str(tmp_path / "env"))
    assert main(["classical", "--ineq", "CHSH", "--results-dir", str(tmp_path / "flag")]) == 0
    assert records(tmp_path / "env")
    assert not (tmp_path / "flag").exists()


def test_parse_round_trip(rdir, tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("# scenario 2222\nC\t-10-10111-1\n")
    out = tmp_path / "back.txt"
    code, text = run(["parse", str(src), "--out", str(out), "--results-dir", str(rdir)], capsys)
    assert code == 0
    assert "C" in text
    assert out.read_text().strip().endswith("-10-10111-1")


def test_parse_error_exit(rdir, tmp_path, capsys):
    src = tmp_path / "bad.txt"
    src.write_text("# scenario 2222\nC\t-10-10\n")
    assert main(["parse", str(src), "--results-dir", str(rdir)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_unknown_inequality_exit(rdir, capsys):
    assert main(["classical", "--ineq", "NOPE", "--results-dir", str(rdir)]) == 1


def test_generate_slicing(rdir, tmp_path, capsys):
    out = tmp_path / "gen.txt"
    code, text = run(["generate", "--method", "slicing", "--seed", "CHSH", "--cut", "-100", "--out", str(out),
                      "--results-dir", str(rdir)], capsys)
    assert code == 0
    assert out.read_text().count("\n") == 1


def test_seesaw_record_and_determinism(rdir, capsys):
    argv = ["seesaw", "--ineq", "I3322", "--restarts", "2", "--probes", "8", "--seed", "3", "--json",
            "--results-dir", str(rdir)]
    code, out = run(argv, capsys)
    assert code == 0
    a = json.loads(out)
    assert a["outputs"]["violation"] == pytest.approx(0.25, abs=1e-6)
    code, out = run(argv, capsys)
    b = json.loads(out)
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b
    assert len(records(rdir)) == 1


def test_npa_and_bad_level(rdir, capsys):
    code, out = run(["npa", "--ineq", "CHSH", "--level", "1a", "--results-dir", str(rdir)], capsys)
    assert code == 0 and "0.207106" in out
    with pytest.raises(SystemExit) as e:
        main(["npa", "--ineq", "CHSH", "--level", "L7", "--results-dir", str(rdir)])
    assert e.value.code == 2


def test_certify(rdir, capsys):
    code, out = run(["certify", "--ineq", "CHSH", "--level", "L1", "--restarts", "2", "--probes", "4", "--json",
                     "--results-dir", str(rdir)], capsys)
    assert code == 0
    assert json.loads(out)["outputs"]["matched"] is True


def test_eta(rdir, capsys):
    code, out = run(["eta", "--ineq", "CHSH", "--json", "--results-dir", str(rdir)], capsys)
    assert code == 0
    assert json.loads(out)["outputs"]["eta_sym"] == pytest.approx(0.8284, abs=1e-3)


def test_hash_ignores_output_flags():
    assert args_hash({"a": 1, "b": [1, 2]}) == args_hash({"b": [1, 2], "a": 1})
    assert args_hash({"a": 1}) != args_hash({"a": 2})


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "bellbound.cli", "classical", "--ineq", "CHSH",
                          "--results-dir", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0
    assert "0" in res.stdout

import json
import subprocess
import sys

import pytest

from fhn_levy.cli import main
from fhn_levy.config import ExperimentConfig, defaults_text, serialize

FAST = """
[system]
forcing_scale = 2
[lattice]
I = 24
[tails]
N_grid = 2, 4, 8
t_grid = 5, 10
m_points = 2
[absorb]
t_grid = 1, 2, 5, 10
m_dirs = 2
[attractor]
t_grid = 5, 10, 20
m_points = 3
[tempered]
n_t = 11
"""


@pytest.fixture
def fast_cfg(tmp_path):
    p = tmp_path / "fast.cfg"
    p.write_text(FAST)
    return p


def test_print_defaults(capsys):
    assert main(["--print-defaults"]) == 0
    assert capsys.readouterr().out == defaults_text()


def test_missing_subcommand(capsys):
    assert main([]) == 2
    assert "subcommand" in capsys.readouterr().err


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[noise]\nalpha = 2.5\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "config-error" and "alpha" in err["detail"]


def test_unwritable_out(tmp_path, fast_cfg):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["simulate", "--config", str(fast_cfg), "--out", str(blocker / "x")]) == 2


@pytest.mark.parametrize("name", ["noise-test", "ou-test", "simulate", "conjugacy", "absorb", "tempered", "tails", "attractor"])
def test_subcommands_pass(tmp_path, fast_cfg, name):
    out = tmp_path / "o"
    assert main([name, "--config", str(fast_cfg), "--out", str(out), "--seeds", "1,2"]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["seeds"] == [1, 2] and m["runs"][0]["passed"]
    assert m["runs"][0]["checks"]


def test_simulate_decay_fixture(tmp_path):
    cfg = tmp_path / "decay.cfg"
    cfg.write_text("[noise]\nepsilons = 0, 0\n[system]\nforcing_amplitude = 0\n")
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--seeds", "4"]) == 0
    rows = (out / "simulate_seed4.csv").read_text().splitlines()
    assert rows[0] == "t,E,norm2_U,norm2_V"
    E = [float(r.split(",")[1]) for r in rows[1:]]
    assert all(b <= a for a, b in zip(E, E[1:]))
    names = [c["name"] for c in json.loads((out / "manifest.json").read_text())["runs"][0]["checks"]]
    assert "seed4.monotone_decay" in names


def test_conjugacy_ratio_reported(tmp_path, fast_cfg):
    out = tmp_path / "o"
    assert main(["conjugacy", "--config", str(fast_cfg), "--out", str(out), "--seeds", "3"]) == 0
    check = json.loads((out / "manifest.json").read_text())["runs"][0]["checks"][0]
    assert 1.5 <= float(check["detail"]) <= 3.0


def test_attractor_single_point(tmp_path):
    cfg = tmp_path / "one.cfg"
    cfg.write_text(FAST.replace("m_points = 3", "m_points = 1"))
    out = tmp_path / "o"
    assert main(["attractor", "--config", str(cfg), "--out", str(out), "--seeds", "1"]) == 0
    nest = (out / "attractor_nesting_seed1.csv").read_text().splitlines()
    assert nest[0] == "t,hausdorff"


def test_check_failure_exit(tmp_path, fast_cfg, capsys):
    # an absurd tolerance cannot be met: reported as an assertion failure
    cfg = tmp_path / "strict.cfg"
    cfg.write_text(FAST.replace("[tails]\n", "[tails]\neps = 1e-12\n"))
    assert main(["tails", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seeds", "1"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "check-failed"


def test_runtime_diagnostic_exit(tmp_path, capsys):
    cfg = tmp_path / "stiff.cfg"
    cfg.write_text("[solver]\ndt = 0.01\ninit_radius = 100\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seeds", "1"]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "runtime-diagnostic" and err["detail"]["suggested_dt"] > 0


def test_all_is_concatenation_and_deterministic(tmp_path, fast_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["all", "--config", str(fast_cfg), "--out", str(out), "--seeds", "5"]) == 0
    files = sorted(p.name for p in a.iterdir() if p.suffix == ".csv")
    assert len(files) == 9
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()
    runs = json.loads((a / "manifest.json").read_text())["runs"]
    assert [r["subcommand"] for r in runs] == [
        "noise-test", "ou-test", "simulate", "conjugacy", "absorb", "tempered", "tails", "attractor",
    ]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "fhn_levy", "--print-defaults"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == serialize(ExperimentConfig())

import subprocess
import sys

import pytest

from markovlab import cli

TRIMMED_SCENARIO = """\
name = "trimmed-cubic"
nvars = 2
seed = 7

[relation]
k = 2
d = 3
q = ["0", "1 + -1 * x1^2", "0"]

[sampling]
density = 64
boxes = [[[-1.0, 1.0]]]

[[sampling.branches]]
kind = "zero"

[[sampling.branches]]
kind = "sqrt"
sign = 1
poly = "1 + -1 * x1^2"

[[sampling.branches]]
kind = "sqrt"
sign = -1
poly = "1 + -1 * x1^2"

[markov]
alphas = [[0, 1]]
degree_max = 3

[[markov.bounds]]
alpha = [0, 1]
M = 2.0
m = 2.0
"""


@pytest.fixture()
def trimmed(tmp_path):
    path = tmp_path / "trimmed.toml"
    path.write_text(TRIMMED_SCENARIO)
    return str(path)


def test_run_trimmed_scenario(trimmed, tmp_path, capsys):
    out = tmp_path / "out"
    rc = cli.main(["run", trimmed, "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "bound M=2" in text
    for name in ("samples.csv", "markov_factors.csv", "markov_witnesses.json", "summary.txt"):
        assert (out / name).exists()


def test_run_is_byte_deterministic(trimmed, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", trimmed, "--out", str(out1)]) == 0
    assert cli.main(["run", trimmed, "--out", str(out2)]) == 0
    for name in ("samples.csv", "markov_factors.csv", "summary.txt"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_run_preset_counterexample(tmp_path, capsys):
    # the cube-root preset exercises the counterexample and determining blocks
    out = tmp_path / "cx"
    rc = cli.main(["run", "example-2-3", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "not-tends-to-zero" in text
    assert (out / "counterexample.csv").exists()
    assert (out / "determining.csv").exists()
    first = (out / "counterexample.csv").read_text().splitlines()
    assert first[0] == "n,norm,n10_norm,log_norm_over_n,derivative_ratio"


def test_malformed_scenario_reports_field(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(TRIMMED_SCENARIO.replace('q = ["0", "1 + -1 * x1^2", "0"]',
                                            'q = ["0", "1 + -1 * q7^2", "0"]'))
    rc = cli.main(["run", str(bad)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "relation.q[1]" in err


def test_reduce_command(capsys):
    rc = cli.main(["reduce", "--relation", "example-2-2", "--poly", "1*x2^3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "G_1 = -1.0 * x1^2 + 1.0" in out


def test_reduce_rejects_bad_poly(capsys):
    rc = cli.main(["reduce", "--relation", "example-2-2", "--poly", "1*zz"])
    assert rc == 2
    assert "configuration error" in capsys.readouterr().err


def test_markov_factor_command(trimmed, tmp_path, capsys):
    out = tmp_path / "mf"
    rc = cli.main(["markov-factor", "--scenario", trimmed, "--alpha", "0,1",
                   "--lmax", "4", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "fitted exponent" in text or "window too short" in text
    assert (out / "markov_factors.csv").exists()
    header = (out / "markov_factors.csv").read_text().splitlines()[0]
    assert header == "n,alpha,factor,bound,ratio,grid_change,grid_ok"


def test_approx_command(trimmed, tmp_path, capsys):
    out = tmp_path / "ap"
    rc = cli.main(["approx", "--scenario", trimmed, "--target", "exp-xy",
                   "--lmax", "5", "--out", str(out)])
    assert rc == 0
    assert (out / "approx_series.csv").exists()


def test_counterexample_command(tmp_path, capsys):
    out = tmp_path / "ce"
    rc = cli.main(["counterexample", "--nmax", "25", "--out", str(out)])
    assert rc == 0
    lines = (out / "counterexample.csv").read_text().splitlines()
    assert len(lines) == 26


def test_extend_command(trimmed, tmp_path, capsys):
    out = tmp_path / "ex"
    rc = cli.main(["extend", "--scenario", trimmed, "--r", "2", "--L", "3",
                   "--grid", "9", "--out", str(out)])
    assert rc == 0
    grid = (out / "extension_grid.csv").read_text().splitlines()
    assert grid[0] == "x1,x2,value"
    assert len(grid) == 1 + 9 * 9


def test_verify_paper_list(capsys):
    rc = cli.main(["verify-paper", "--list"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count(":") >= 10 and "C1" in out and "C10" in out


def test_verify_paper_single_pass(capsys):
    rc = cli.main(["verify-paper", "--only", "C4"])
    assert rc == 0
    assert "[PASS] C4" in capsys.readouterr().out


def test_verify_paper_failure_exit_code(capsys):
    # C10 is a deterministic red (errors hit the LP floor before level 16)
    rc = cli.main(["verify-paper", "--only", "C10"])
    assert rc == 1
    out = capsys.readouterr().out
    assert "FAILED criteria: C10" in out


def test_preset_emission_round_trips(tmp_path):
    from markovlab.scenario import preset_toml, load_scenario

    path = tmp_path / "preset.toml"
    path.write_text(preset_toml("example-2-2"))
    scn = load_scenario(str(path))
    assert scn.name == "example-2-2"
    assert scn.blocks["markov"]["bounds"][(1, 0)] == (6.0, 2.0)


def test_thread_budget_env_cap(monkeypatch):
    from markovlab._util import thread_map, worker_count

    monkeypatch.setenv("MARKOVLAB_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("MARKOVLAB_THREADS", "garbage")
    assert worker_count() >= 1
    monkeypatch.setenv("MARKOVLAB_THREADS", "4")
    assert thread_map(lambda v: v * v, [1, 2, 3]) == [1, 4, 9]


def test_extension_grid_block_validated(tmp_path):
    from markovlab.scenario import ScenarioError, load_scenario

    bad = TRIMMED_SCENARIO + "\n[extension]\nr = 2\nL = 3\n[extension.grid]\nper_axis = 5\n"
    path = tmp_path / "grid.toml"
    path.write_text(bad)
    with pytest.raises(ScenarioError, match="extension.grid.box"):
        load_scenario(str(path))


def test_console_script_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "markovlab.cli", "verify-paper", "--list"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "C1" in proc.stdout


def test_numerical_failure_names_block(tmp_path, capsys):
    from unittest import mock

    from markovlab.approx import ConsistencyError

    with mock.patch(
        "markovlab.scenario.approx_mod.counterexample_norm",
        side_effect=ConsistencyError("forced disagreement"),
    ):
        rc = cli.main(["run", "example-2-3", "--out", str(tmp_path / "x")])
    assert rc == 3
    err = capsys.readouterr().err
    assert "numerical failure" in err and "[counterexample]" in err

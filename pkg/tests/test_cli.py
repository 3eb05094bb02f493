import csv
import io
import json

import pytest

import hetjsq.cli as cli
from hetjsq.errors import NoConvergence


@pytest.fixture
def fig1_file(tmp_path):
    doc = {
        "lambda": 0.5,
        "mu": 1.0,
        "classes": [
            {"capacity": 4 / 3, "fraction": 0.5},
            {"capacity": 2 / 3, "fraction": 0.5},
        ],
    }
    path = tmp_path / "fig1.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def fig2_file(tmp_path):
    doc = {
        "lambda": 0.9,
        "mu": 1.0,
        "classes": [
            {"capacity": 5 / 3, "fraction": 0.5},
            {"capacity": 1 / 3, "fraction": 0.5},
        ],
    }
    path = tmp_path / "fig2.json"
    path.write_text(json.dumps(doc))
    return str(path)


def _rows(text):
    return list(csv.reader(io.StringIO(
        "\n".join(l for l in text.splitlines() if l and not l.startswith("#"))
    )))


def test_stability_command(fig1_file, capsys):
    assert cli.main(["stability", "--config", fig1_file, "--n", "4"]) == 0
    out = capsys.readouterr().out
    rows = _rows(out)
    assert rows[0] == ["metric", "value", "detail"]
    table = {r[0]: r for r in rows[1:]}
    assert float(table["static_limit"][1]) == pytest.approx(1.0)
    assert float(table["asymptotic_sq2_limit"][1]) == pytest.approx(1.0)
    assert table["asymptotic_sq2_limit"][2] == "1 2"
    assert float(table["finite_n_limit"][1]) == pytest.approx(1.0)


def test_stability_binding_subset_slow_class(fig2_file, capsys):
    assert cli.main(["stability", "--config", fig2_file]) == 0
    rows = _rows(capsys.readouterr().out)
    table = {r[0]: r for r in rows[1:]}
    assert float(table["asymptotic_sq2_limit"][1]) == pytest.approx(2 / 3)
    assert table["asymptotic_sq2_limit"][2] == "2"


def test_static_opt_command(fig1_file, capsys):
    assert cli.main(["static-opt", "--config", fig1_file, "--quiet"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0][0] == "j_star"
    vals = rows[1]
    assert int(vals[0]) == 2
    assert float(vals[1]) == pytest.approx(0.56066017, abs=1e-6)
    assert float(vals[5]) == pytest.approx(1.88561808, abs=1e-6)


def test_meanfield_command(fig1_file, capsys, tmp_path):
    out = tmp_path / "mf.csv"
    assert cli.main(["meanfield", "--config", fig1_file, "--levels", "32",
                     "--out", str(out)]) == 0
    text = out.read_text()
    assert "mean_sojourn=1.451037987" in text
    rows = _rows(text)
    assert rows[0] == ["k", "P_k_1", "P_k_2"]
    assert len(rows) == 2 + 32  # header + levels 0..32
    assert float(rows[1][1]) == 1.0
    assert float(rows[2][1]) == pytest.approx(0.4253391, abs=1e-6)


def test_meanfield_methods_agree(fig1_file, capsys):
    assert cli.main(["meanfield", "--config", fig1_file, "--method", "ode",
                     "--quiet"]) == 0
    ode_rows = _rows(capsys.readouterr().out)
    assert cli.main(["meanfield", "--config", fig1_file, "--method", "shooting",
                     "--quiet"]) == 0
    sh_rows = _rows(capsys.readouterr().out)
    for a, b in zip(ode_rows[1:6], sh_rows[1:6]):
        assert float(a[1]) == pytest.approx(float(b[1]), abs=1e-8)


def test_hybrid_opt_command(fig1_file, capsys):
    assert cli.main(["hybrid-opt", "--config", fig1_file, "--quiet"]) == 0
    rows = _rows(capsys.readouterr().out)
    vals = dict(zip(rows[0], rows[1]))
    assert int(vals["j_star"]) == 2
    assert float(vals["theta_star"]) == pytest.approx(1.8631598, abs=1e-6)
    assert float(vals["mean_sojourn"]) == pytest.approx(1.1710907, abs=1e-6)


def test_hybrid_opt_proportional_bias(fig1_file, capsys):
    assert cli.main(["hybrid-opt", "--config", fig1_file,
                     "--bias", "proportional", "--quiet"]) == 0
    rows = _rows(capsys.readouterr().out)
    vals = dict(zip(rows[0], rows[1]))
    assert float(vals["p_1"]) == pytest.approx(2 / 3, abs=1e-9)
    assert float(vals["p_2"]) == pytest.approx(1 / 3, abs=1e-9)
    assert float(vals["rho_1"]) == pytest.approx(0.5, abs=1e-9)


def test_simulate_command_and_determinism(fig1_file, capsys):
    argv = ["simulate", "--config", fig1_file, "--scheme", "sq2", "--n", "20",
            "--jobs", "3000", "--reps", "2", "--seed", "5", "--quiet"]
    assert cli.main(argv) == 0
    first = capsys.readouterr().out
    assert cli.main(argv) == 0
    assert capsys.readouterr().out == first
    rows = _rows(first)
    assert rows[0] == ["replication", "mean_sojourn", "ci_half_width"]
    assert rows[3][0] == "all"
    assert rows[4] == ["class", "level", "tail"]
    assert float(rows[5][2]) == 1.0  # class 1, level 0


def test_simulate_sqd_scheme(fig1_file, capsys):
    assert cli.main(["simulate", "--config", fig1_file, "--scheme", "sqd",
                     "--d", "5", "--n", "20", "--jobs", "2000", "--reps", "2",
                     "--quiet"]) == 0
    assert "all" in capsys.readouterr().out


def test_reproduce_smoke(fig1_file, tmp_path, capsys):
    assert cli.main(["reproduce", "table1", "--out", str(tmp_path),
                     "--jobs", "3000", "--reps", "2", "--n", "20"]) == 0
    text = (tmp_path / "table1.csv").read_text()
    assert text.startswith("# hetjsq reproduce table1 schema=1")
    rows = _rows(text)
    assert rows[0] == ["lambda", "scheme", "source", "dist", "n", "value",
                       "ci", "status"]
    lams = {r[0] for r in rows[1:]}
    assert lams == {"0.2", "0.3", "0.5", "0.7", "0.8", "0.9"}
    sources = {r[2] for r in rows[1:]}
    assert sources == {"meanfield", "simulation"}
    dists = {r[3] for r in rows[1:] if r[2] == "simulation"}
    assert dists == {"deterministic", "power_law"}


def test_reproduce_fig2_marks_divergence(tmp_path):
    assert cli.main(["reproduce", "custom", "--config",
                     _write_fig2_base(tmp_path), "--sweep", "0.5,0.8",
                     "--schemes", "sq2", "--out", str(tmp_path),
                     "--jobs", "2000", "--reps", "2", "--n", "12"]) == 0
    rows = _rows((tmp_path / "custom.csv").read_text())
    mf = {r[0]: r for r in rows[1:] if r[2] == "meanfield"}
    assert mf["0.5"][7] == "ok"
    assert mf["0.8"][7] == "diverged"
    assert mf["0.8"][5] == ""


def _write_fig2_base(tmp_path):
    doc = {"lambda": 0.1, "classes": [
        {"capacity": 5 / 3, "fraction": 0.5},
        {"capacity": 1 / 3, "fraction": 0.5}]}
    path = tmp_path / "base.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_exit_code_config_error(tmp_path, capsys):
    missing = str(tmp_path / "none.json")
    assert cli.main(["stability", "--config", missing]) == 2
    assert "error" in capsys.readouterr().err


def test_exit_code_unstable(tmp_path, capsys):
    doc = {"lambda": 1.5, "classes": [{"capacity": 1.0, "fraction": 1.0}]}
    path = tmp_path / "hot.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["static-opt", "--config", str(path)]) == 3
    assert cli.main(["hybrid-opt", "--config", str(path)]) == 3


def test_exit_code_unstable_meanfield(fig2_file):
    # lambda = 0.9 > 2/3: no summable equilibrium
    assert cli.main(["meanfield", "--config", fig2_file]) == 3


def test_exit_code_no_convergence(fig1_file, monkeypatch):
    def boom(*a, **k):
        raise NoConvergence("stub")

    monkeypatch.setattr(cli, "fixed_point", boom)
    assert cli.main(["meanfield", "--config", fig1_file]) == 4


def test_reproduce_rejects_unstable_sweep(tmp_path):
    base = _write_fig2_base(tmp_path)
    assert cli.main(["reproduce", "custom", "--config", base,
                     "--sweep", "1.2", "--schemes", "static",
                     "--out", str(tmp_path)]) == 2

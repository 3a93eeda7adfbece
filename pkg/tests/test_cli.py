import csv
import subprocess
import sys
import time

import pytest

from vsgsim.cli import main

from conftest import CANONICAL, CONFIGS


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


SHORT = """
[scenario]
duration = 0.4
events = [[0.1, 300.0]]
"""


def test_run_writes_trace_and_metrics(tmp_path, capsys):
    cfg = write(tmp_path, SHORT)
    assert main(["run", "--config", str(cfg), "--strategy", "proposed", "--out", str(tmp_path / "o")]) == 0
    trace = (tmp_path / "o" / "proposed" / "trace.csv").read_text().splitlines()
    assert trace[0] == "t,p_m,p_e,q_e,omega,delta_f_hz,delta,j,d_p,k_t,domega_dt,guard_flags"
    assert len(trace) == 2001 + 1
    with open(tmp_path / "o" / "proposed" / "metrics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["max_freq_dev_hz"]) >= 0
    assert "overshoot_pct" in capsys.readouterr().out


def test_compare_outputs(tmp_path, capsys):
    cfg = write(tmp_path, SHORT)
    out = tmp_path / "o"
    assert main(["compare", "--config", str(cfg), "--strategies", "constant,proposed", "--out", str(out)]) == 0
    for name in ("comparison.csv", "orderings.csv", "parameters.csv"):
        assert (out / name).is_file()
    params = (out / "parameters.csv").read_text().splitlines()
    assert params[0] == "t,j_constant,d_p_constant,k_t_constant,j_proposed,d_p_proposed,k_t_proposed"
    assert "proposed" in capsys.readouterr().out


def test_compare_parallel_matches_serial(tmp_path):
    cfg = write(tmp_path, SHORT)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["compare", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["compare", "--config", str(cfg), "--out", str(b), "--jobs", "2"]) == 0
    for name in ("comparison.csv", "orderings.csv", "parameters.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_analyze_canonical(tmp_path, capsys):
    out = tmp_path / "a.csv"
    assert main(["analyze", "--config", str(CANONICAL), "--csv", str(out)]) == 0
    rows = dict(csv.reader(out.open()))
    assert float(rows["zeta_open_loop"]) == pytest.approx(0.7381234072488, rel=1e-8)
    assert float(rows["k_t_zeta_1.1"]) == pytest.approx(0.00890365278817018, rel=1e-8)
    assert float(rows["k_t_min"]) == pytest.approx(-0.0181608721, rel=1e-8)
    assert rows["root_case"] == "conjugate_pair"


def test_analyze_resistive_line(tmp_path, capsys):
    assert main(["analyze", "--config", str(CONFIGS / "resistive.toml")]) == 0
    out = capsys.readouterr().out
    line = next(ln for ln in out.splitlines() if ln.startswith("alpha_rad,"))
    assert float(line.split(",")[1]) == 0.0


def test_sweep(tmp_path):
    cfg = write(tmp_path, "[scenario]\nduration = 1.5\nevents = [[0.1, 300.0]]\n")
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--points", "4"]) == 0
    rows = list(csv.DictReader((out / "sweep.csv").open()))
    assert len(rows) == 4
    assert all(r["agrees"] == "true" for r in rows)


def test_missing_file(tmp_path, capsys):
    assert main(["analyze", "--config", str(tmp_path / "nope.toml")]) == 2
    assert "file not found" in capsys.readouterr().err


def test_zero_dt(tmp_path, capsys):
    cfg = write(tmp_path, "[scenario]\ndt = 0.0\n")
    assert main(["run", "--config", str(cfg), "--strategy", "constant", "--out", str(tmp_path)]) == 2
    assert "scenario.dt" in capsys.readouterr().err


def test_nonpositive_inertia(tmp_path, capsys):
    cfg = write(tmp_path, "[vsg]\nj0 = 0.0\n")
    assert main(["analyze", "--config", str(cfg)]) == 2
    assert "vsg.j0" in capsys.readouterr().err


def test_unknown_strategy(tmp_path, capsys):
    cfg = write(tmp_path, SHORT)
    assert main(["run", "--config", str(cfg), "--strategy", "fuzzy", "--out", str(tmp_path)]) == 2
    assert "valid names" in capsys.readouterr().err


def test_unknown_key(tmp_path, capsys):
    cfg = write(tmp_path, "[grid]\nl_flter = 1e-3\n")
    assert main(["analyze", "--config", str(cfg)]) == 2
    assert "grid.l_flter" in capsys.readouterr().err


def test_parse_error(tmp_path, capsys):
    cfg = write(tmp_path, "[grid\n")
    assert main(["analyze", "--config", str(cfg)]) == 2
    assert "parse error" in capsys.readouterr().err


def test_integration_failure_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "[scenario]\nduration = 1.0\np_initial = 157.0\nevents = [[0.1, -1.0e9]]\nstrategy = \"constant\"\n")
    assert main(["run", "--config", str(cfg), "--strategy", "constant", "--out", str(tmp_path / "o")]) == 3
    assert "integration failure" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "vsgsim", "analyze", "--config", str(CANONICAL)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "h_pdelta_w_per_rad" in r.stdout


@pytest.mark.slow
@pytest.mark.parametrize("cfg", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_run_quickly(cfg, tmp_path):
    start = time.perf_counter()
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert time.perf_counter() - start < 60

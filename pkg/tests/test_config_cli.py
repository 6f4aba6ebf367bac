import math
import subprocess
import sys

import pytest

from rigidib.bench.common import BenchReport, rate
from rigidib.bench.config import ConfigError, bench_kwargs, parse_config
from rigidib.cli import EXIT_CONFIG, EXIT_OK, build_parser, cli_main

GOOD = """
[grid]
n = 16 16 16
h = 1.0
x = periodic
y = periodic
z = noslip

[body]
model = shell42
velocity = 1 0 0

[physics]
eta = 2
"""


def test_parse_good_config():
    cfg = parse_config(GOOD)
    assert cfg.grid.n == (16, 16, 16)
    g = cfg.grid_spec()
    assert g.periodic(0) and not g.periodic(2)
    assert cfg.stokes_params().eta == 2.0 and cfg.stokes_params().steady


@pytest.mark.parametrize("text,line,needle", [
    ("[grid]\nn = 16 16 x\n", 2, "n"),
    ("[grid]\nn = 8 8\n\n[physics]\neta = -1\n", 5, "eta"),
    ("[gird]\nn = 8\n", 1, "gird"),
    ("[grid]\nn = 8 8\nz = sideways\n", 3, "z"),
    ("[solver]\nprecond_variant = upper\n", 2, "precond_variant"),
])
def test_config_errors_report_line_numbers(text, line, needle):
    with pytest.raises(ConfigError) as e:
        parse_config(text, "run.ini")
    assert e.value.line == line
    assert str(e.value).startswith(f"run.ini:{line}:")
    assert needle in str(e.value)


def test_bench_kwargs_rejects_unknown_keys():
    cfg = parse_config("[bench]\nlevels = 2\nbogus = 1\n", "b.ini")
    from rigidib.bench.concentric import bench_concentric
    with pytest.raises(ConfigError) as e:
        bench_kwargs(cfg, bench_concentric)
    assert e.value.line == 3


def test_parser_has_all_subcommands():
    sub = build_parser()._subparsers._group_actions[0].choices
    for cmd in ("fit", "spectrum", "drag2d", "drag3d", "wake", "concentric", "slit", "nozzle", "solve"):
        assert cmd in sub


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\nn = 8 8 8\nh = zero\n")
    assert cli_main(["solve", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert f"{bad}:3:" in capsys.readouterr().err


def test_cli_solve_writes_outputs(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(GOOD)
    out = tmp_path / "out"
    assert cli_main(["solve", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    for name in ("markers.csv", "result.csv", "solve_log.csv", "summary.txt", "config_used.ini"):
        assert (out / name).exists()
    header = (out / "markers.csv").read_text().splitlines()[0]
    assert header.startswith("marker,x,y,z")
    assert "overall: PASS" in (out / "summary.txt").read_text()
    # the echoed configuration parses back
    parse_config((out / "config_used.ini").read_text())


def test_cli_fit_smoke(tmp_path):
    out = tmp_path / "fit"
    code = subprocess.run([sys.executable, "-m", "rigidib", "fit", "--n-steady", "16", "--n-markers", "12",
                           "--steady-only", "--out", str(out)], capture_output=True, text=True)
    assert code.returncode == 0, code.stderr
    assert (out / "fit_peskin4_3d.txt").exists() and (out / "fit_quality.csv").exists()


def test_report_and_rate(tmp_path):
    rep = BenchReport("demo")
    rep.check("value in band", 1.0, 0.5, 1.5)
    rep.check("value out of band", 2.0, 0.5, 1.5)
    rep.tables["t.csv"] = (["a[m]", "b"], [[1, 2.5]])
    rep.write(tmp_path)
    assert not rep.passed
    text = (tmp_path / "summary.txt").read_text()
    assert "PASS  value in band" in text and "FAIL  value out of band" in text
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "a[m],b"
    assert math.isclose(rate(0.4, 0.1), 2.0)

import shutil
import subprocess
import sys

import pytest

from limitset.cli import main
from limitset.report import dumps, loads, read_report

from conftest import EX12_TR, LINE, TWO_CIRCLES


@pytest.fixture(scope="module")
def ex12_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("ex12")
    spec = base / "ex12.yaml"
    spec.write_text(EX12_TR)
    out = base / "out"
    code = main(["realize", str(spec), "--lambda", "1e-3,1e-4", "--target", "0.25",
                 "--out", str(out), "-q"])
    return code, spec, out


def test_realize_writes_every_artifact(ex12_run):
    code, _, out = ex12_run
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["field.txt", "gamma_0.0001.csv", "gamma_0.001.csv", "plot.svg",
                     "report.json", "spec.yaml"]
    rep = read_report(out / "report.json")
    assert rep["verdict"] == "REALIZED"
    assert [e["certificate"]["verdict"] for e in rep["schedule"]] == ["LIMIT_CYCLE"] * 2
    assert rep["field"]["identity"] is True
    assert sorted(rep["special_points"]["gen"]) == [["-2", "0"], ["2", "0"]]


def test_report_round_trip(ex12_run):
    _, _, out = ex12_run
    text = (out / "report.json").read_text()
    assert dumps(loads(text)) == text


def test_realize_is_deterministic(ex12_run, tmp_path):
    _, spec, out = ex12_run
    again = tmp_path / "again"
    assert main(["realize", str(spec), "--lambda", "1e-3,1e-4", "--target", "0.25",
                 "--out", str(again), "-q", "--no-plot"]) == 0
    for name in ("report.json", "field.txt", "gamma_0.001.csv", "gamma_0.0001.csv", "spec.yaml"):
        assert (out / name).read_bytes() == (again / name).read_bytes(), name


def test_verify_round_trip(ex12_run, tmp_path, capsys):
    _, spec, out = ex12_run
    rep = tmp_path / "verify.json"
    assert main(["verify", str(spec), str(out / "field.txt"), "--lambda", "1e-3,1e-4",
                 "--out", str(rep), "-q"]) == 0
    assert "VERIFIED" in capsys.readouterr().out
    assert read_report(rep)["verdict"] == "VERIFIED"


def test_verify_partial_when_a_value_has_no_cycle(ex12_run, capsys):
    _, spec, out = ex12_run
    code = main(["verify", str(spec), str(out / "field.txt"), "--lambda", "1e-3,10", "-q"])
    text = capsys.readouterr().out
    assert code == 3
    assert "t=10: NO_CYCLE" in text and text.strip().endswith("PARTIAL")


def test_verify_rejects_a_tampered_field(ex12_run, tmp_path, capsys):
    _, spec, out = ex12_run
    lines = (out / "field.txt").read_text().splitlines()
    lines = [ln + " + 1" if ln.startswith("P = ") else ln for ln in lines]
    bad = tmp_path / "field.txt"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["verify", str(spec), str(bad), "--lambda", "1e-3", "-q"]) == 3
    assert "IDENTITY_FAILURE" in capsys.readouterr().out


def test_plot_command(ex12_run, tmp_path):
    _, _, out = ex12_run
    target = tmp_path / "fig.svg"
    assert main(["plot", str(out / "report.json"), "--out", str(target)]) == 0
    svg = target.read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") > 3


def test_disconnected_gamma_exit_code(tmp_path):
    spec = tmp_path / "two.yaml"
    spec.write_text(TWO_CIRCLES)
    assert main(["realize", str(spec), "--out", str(tmp_path / "o"), "-q"]) == 2


def test_io_errors_exit_code(tmp_path, ex12_run):
    assert main(["realize", str(tmp_path / "missing.yaml"), "-q"]) == 4
    _, spec, _ = ex12_run
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["realize", str(spec), "--lambda", "1e-3", "--out", str(blocker / "sub"),
                 "-q", "--no-plot"]) == 4
    assert main(["plot", str(tmp_path / "nope.json")]) == 4


def test_bad_spec_exit_code(tmp_path, capsys):
    spec = tmp_path / "bad.yaml"
    spec.write_text("clauses:\n  - f: x^2 +* y\n")
    assert main(["realize", str(spec), "-q"]) == 4
    assert "line 2" in capsys.readouterr().err


def test_argument_errors():
    with pytest.raises(SystemExit):
        main(["realize", "x.yaml", "--lambda", "0"])
    with pytest.raises(SystemExit):
        main(["realize", "x.yaml", "--bbox", "1:0:0:1"])
    with pytest.raises(SystemExit):
        main(["verify", "x.yaml", "f.txt"])


def test_unbounded_run_plots_two_panels(tmp_path):
    spec = tmp_path / "line.yaml"
    spec.write_text(LINE)
    out = tmp_path / "out"
    code = main(["realize", str(spec), "--lambda", "1e-3", "--bbox", "-10:10:-5:5",
                 "--out", str(out), "-q"])
    assert code == 3          # a single value cannot show convergence
    rep = read_report(out / "report.json")
    assert rep["unbounded"]["view_box"] == [-10.0, 10.0, -5.0, 5.0]
    assert rep["schedule"][0]["certificate"]["verdict"] == "LIMIT_CYCLE"
    svg = (out / "plot.svg").read_text()
    assert "compactified chart" in svg and "original plane" in svg


@pytest.mark.skipif(shutil.which("limitset") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["limitset", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "realize" in res.stdout


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "limitset.cli", "plot", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0

import csv
import io
import json

import pytest

from rabiq.cli import build_parser, run
from rabiq.output import data_section


def table(text):
    rows = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(rows))))


@pytest.fixture(autouse=True)
def fixed_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    monkeypatch.delenv("RABIQ_THREADS", raising=False)


def test_judd_example(capsys):
    assert run(["judd", "--model", "rabi", "--n", "1", "--delta", "0.6"]) == 0
    (row,) = table(capsys.readouterr().out)
    assert float(row["g_star"]) == pytest.approx(0.4, abs=1e-12)
    assert float(row["energy"]) == pytest.approx(0.84, abs=1e-12)
    assert float(row["degeneracy_gap"]) < 1e-8


def test_spectrum_header_and_rows(capsys):
    assert run(["spectrum", "--g", "0.3", "--delta", "0.4", "--levels", "6"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# rabiq-csv v1\n# generated: 1970-01-01T00:00:00Z\n")
    assert "# config: g=0.29999999999999999" in out
    assert "# tolerance: series_tol=1e-13" in out
    rows = table(out)
    assert len(rows) == 6
    assert {r["parity"] for r in rows} == {"1", "-1"}


def test_gfun_grid(capsys):
    assert run(["gfun", "--g", "0.3", "--delta", "0.4"]) == 0
    rows = table(capsys.readouterr().out)
    assert len(rows) == 2400
    assert float(rows[0]["x"]) == -1.0 and float(rows[-1]["x"]) == 5.0


def test_gfun_two_photon(capsys):
    assert run(["gfun", "--model", "twophoton", "--g", "0.25", "--delta", "1",
                "--samples", "3"]) == 0
    rows = table(capsys.readouterr().out)
    assert list(rows[0]) == ["E", "G_C=1", "G_C=-1", "G_C=i", "G_C=-i"]


def test_json_output(capsys):
    assert run(["judd", "--n", "1", "--delta", "0.6", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "rabiq-json v1"
    assert doc["config"]["delta"] == 0.6
    assert "series_tol" in doc["tolerance"]
    assert doc["columns"][1] == "g_star"


def test_dynamics_and_stats_and_berry(capsys, tmp_path):
    out = tmp_path / "d.csv"
    assert run(["dynamics", "--g", "0.05", "--delta", "0.5", "--alpha", "2", "--t-end", "10",
                "--samples", "5", "-o", str(out)]) == 0
    rows = table(out.read_text())
    assert float(rows[0]["inversion"]) == pytest.approx(1.0)
    assert run(["stats", "--g", "0.5", "--delta", "1.5", "--levels", "60"]) == 0
    text = capsys.readouterr().out
    assert sum(int(r["count"]) for r in table(text)) == 59
    assert "# meta: peaks=" in text
    assert run(["berry", "--delta", "0", "--n", "1", "--g-range", "0", "0.5",
                "--g-steps", "3"]) == 0
    rows = table(capsys.readouterr().out)
    assert float(rows[-1]["gamma_over_2pi"]) == pytest.approx(1.25, abs=1e-9)


def test_config_file_round_trip(tmp_path, capsys):
    first = tmp_path / "a.csv"
    assert run(["spectrum", "--g", "0.7", "--delta", "0.4", "--levels", "4", "-o", str(first)]) == 0
    cfg = tmp_path / "job.cfg"
    cfg.write_text("".join(l[len("# config: "):].replace("=", " = ", 1) + "\n"
                           for l in first.read_text().splitlines() if l.startswith("# config: ")))
    second = tmp_path / "b.csv"
    assert run(["--config", str(cfg), "-o", str(second)]) == 0
    assert data_section(first.read_text()) == data_section(second.read_text())
    # command-line flags override the file
    assert run(["spectrum", "--config", str(cfg), "--levels", "2"]) == 0
    assert len(table(capsys.readouterr().out)) == 2


def test_config_supplies_subcommand(tmp_path, capsys):
    cfg = tmp_path / "job.cfg"
    cfg.write_text("subcommand = judd\nn = 1\ndelta = 0.6\n")
    assert run(["--config", str(cfg)]) == 0
    assert table(capsys.readouterr().out)[0]["g_star"].startswith("0.4")
    cfg.write_text("n = 1\ndelta = 0.6\n")
    assert run(["--config", str(cfg)]) == 1


@pytest.mark.parametrize("argv", [
    ["spectrum", "--g", "-1", "--delta", "0.4"],
    ["spectrum", "--bogus"],
    [],
    ["spectrum", "--g", "0.3"],
    ["stats", "--g", "0.5", "--delta", "1.5", "--levels", "10"],
    ["gfun", "--g", "0.3", "--delta", "0.4", "--x-range", "2", "1"],
    ["spectrum", "--config", "/nonexistent/job.cfg"],
])
def test_domain_errors_exit_1(argv, capsys):
    assert run(argv) == 1
    assert capsys.readouterr().err.startswith("rabiq: DomainError")


def test_nonconvergence_exits_2(capsys):
    code = run(["dynamics", "--g", "2", "--delta", "0", "--fock", "0", "--level", "down",
                "--n-max", "6", "--t-end", "3", "--samples", "5"])
    assert code == 2
    assert "ConvergenceError" in capsys.readouterr().err


def test_bad_thread_count(monkeypatch, capsys):
    monkeypatch.setenv("RABIQ_THREADS", "zero")
    assert run(["judd", "--n", "1", "--delta", "0.6"]) == 1


def test_verify_subset(capsys):
    assert run(["verify", "--only", "5"]) == 0
    cap = capsys.readouterr()
    assert "[PASS]  5" in cap.err
    assert all(r["passed"] == "true" for r in table(cap.out))


def test_parser_lists_subcommands():
    text = build_parser().format_help()
    for sub in ("spectrum", "gfun", "judd", "dynamics", "stats", "berry", "verify"):
        assert sub in text

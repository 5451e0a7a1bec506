import csv
import json

import pytest

from heisenberg_qpe.domain.vo import RoundRecord, Spectrum, TrialRecord
from heisenberg_qpe.engine.circle import phase_dist
from heisenberg_qpe.engine.qeep import bin_count
from heisenberg_qpe.main import build_parser, main, read_version


def read_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def test_limits_json(capsys):
    assert main(["limits", "--K", "10", "--M", "5", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [row["strategy"] for row in data["rows"]] == ["sampling", "dense", "heisenberg"]


def test_limits_text(capsys):
    assert main(["limits"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("strategy")
    assert len(out.splitlines()) == 4


def test_limits_bad_arguments():
    assert main(["limits", "--K", "0"]) == 2


def test_fit_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    assert main(["fit", str(path)]) == 2


def test_fit_missing_file(tmp_path):
    assert main(["fit", str(tmp_path / "missing.csv")]) == 2


def test_fit_needs_cost_spread(tmp_path):
    path = tmp_path / "flat.csv"
    rows = [
        [s, "0.01", "pencil", 1, "1000.0", 0, "1.0", "1.001", "0.001", "none"]
        for s in range(4)
    ]
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TrialRecord.CSV_HEADER)
        writer.writerows(rows)
    assert main(["fit", str(path)]) == 3


def test_fit_rejects_unparsable_numbers(tmp_path):
    path = tmp_path / "garbled.csv"
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TrialRecord.CSV_HEADER)
        writer.writerow([0, "0.01", "pencil", 1, "lots", 0, "1.0", "1.001", "0.001", "none"])
    assert main(["fit", str(path)]) == 2


def test_fit_rejects_unknown_failure_mode(tmp_path):
    path = tmp_path / "mode.csv"
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TrialRecord.CSV_HEADER)
        writer.writerow([0, "0.01", "pencil", 1, "10.0", 0, "1.0", "1.001", "0.001", "exploded"])
    assert main(["fit", str(path)]) == 2


def test_pencil_rejects_empty_signal(spectrum_file, three_lines, tmp_path):
    args = ["pencil", "--spectrum", str(spectrum_file(three_lines)), "--out", str(tmp_path / "p.json")]
    assert main([*args, "--K", "0"]) == 2
    assert main([*args, "--K", "5", "--M", "0"]) == 2


def test_malformed_delta_list():
    assert main(["run", "--nphi", "1", "--eps", "0.05", "--delta-c", "0.01,abc"]) == 2


def test_pencil_noiseless(spectrum_file, three_lines, tmp_path):
    out = tmp_path / "pencil.json"
    dump = tmp_path / "series.csv"
    code = main(
        [
            "pencil",
            "--spectrum", str(spectrum_file(three_lines)),
            "--K", "30",
            "--M", "10",
            "--noiseless",
            "--out", str(out),
            "--dump", str(dump),
        ]
    )
    assert code == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert len(data["selected"]) == 3
    for phi, est in zip(three_lines.phases, data["selected"]):
        assert phase_dist(phi, est) < 1e-9
    assert data["total_cost"] == pytest.approx(2 * 10 * 30 * 31 / 2)
    rows = read_rows(dump)
    assert len(rows) == 31
    assert rows[0] == {"k": "0", "re": "1.0", "im": "0.0"}


def test_pencil_bad_spectrum(tmp_path):
    path = tmp_path / "spectrum.json"
    path.write_text(json.dumps({"lines": [{"phase": 1.0, "prob": 0.4}]}), encoding="utf-8")
    assert main(["pencil", "--spectrum", str(path), "--K", "5"]) == 2


def test_qeep_bins_rows(spectrum_file, three_lines, tmp_path):
    out = tmp_path / "bins.csv"
    code = main(
        [
            "qeep-bins",
            "--spectrum", str(spectrum_file(three_lines)),
            "--eps", "0.5",
            "--K", "10",
            "--M", "20",
            "--out", str(out),
        ]
    )
    assert code == 0
    rows = read_rows(out)
    assert len(rows) == bin_count(0.5)
    assert [int(r["l"]) for r in rows] == list(range(len(rows)))
    assert sum(float(r["b"]) for r in rows) == pytest.approx(1.0, abs=1e-9)


def test_run_writes_trace(spectrum_file, tmp_path):
    spectrum = Spectrum.equal_weight([1.0, 4.0])
    out = tmp_path / "run.json"
    code = main(
        [
            "run",
            "--spectrum", str(spectrum_file(spectrum)),
            "--eps", "0.05",
            "--delta-c", "0.01",
            "--noiseless",
            "--out", str(out),
        ]
    )
    assert code == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["config"]["n_phi"] == 2
    assert data["result"]["failure"] == "none"
    rounds = RoundRecord.from_list(data["rounds"])
    assert len(rounds) >= 2
    assert rounds[-1].cost_so_far == pytest.approx(data["result"]["total_cost"])
    assert [row["phase_index"] for row in data["result"]["errors"]] == [0, 1]
    assert max(row["error"] for row in data["result"]["errors"]) <= 2 * 0.01


def test_invalid_phase_count():
    assert main(["run", "--nphi", "0", "--eps", "0.05"]) == 2


def test_delta_c_must_descend():
    assert main(["sweep", "--delta-c", "0.001,0.01", "--eps", "0.05"]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.strip() == read_version()
    assert read_version().startswith("heisenberg_qpe")


def test_sweep_is_byte_reproducible(tmp_path):
    args = ["sweep", "--nphi", "1", "--seeds", "2", "--delta-c", "0.01", "--eps", "0.05", "--seed", "5"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([*args, "--out", str(first)]) == 0
    assert main([*args, "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert len(read_rows(first)) == 2


@pytest.mark.slow
def test_sweep_then_fit(tmp_path):
    sweep_csv = tmp_path / "sweep.csv"
    fit_json = tmp_path / "fit.json"
    code = main(
        [
            "sweep",
            "--nphi", "1",
            "--seeds", "10",
            "--delta-c", "0.01,0.001,0.0001",
            "--eps", "0.05",
            "--out", str(sweep_csv),
        ]
    )
    assert code == 0
    assert main(["fit", str(sweep_csv), "--bins", "3", "--out", str(fit_json)]) == 0
    fit = json.loads(fit_json.read_text(encoding="utf-8"))
    assert -1.4 <= fit["exponent"] <= -0.6

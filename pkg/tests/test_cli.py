from __future__ import annotations

import csv
import io
import json

import pytest

from ljexact.cli import (
    EXIT_OK,
    EXIT_PARTIAL,
    EXIT_USAGE,
    build_config,
    build_parser,
    main,
    render,
)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "state", "--lambda", "40")[0] == EXIT_USAGE
    code, _, err = run(capsys, "state", "--lambda", "40", "--l", "0", "--eps-lo", "-1", "--eps-hi", "-2")
    assert code == EXIT_USAGE and "eps-lo" in err
    assert run(capsys, "critical", "--l", "0", "--count", "-1")[0] == EXIT_USAGE
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    args = ["state", "--lambda", "40", "--l", "0", "--eps-lo", "-13", "--eps-hi", "-11", "--config", str(bad)]
    assert run(capsys, *args)[0] == EXIT_USAGE
    args = ["state", "--lambda", "40", "--l", "0", "--eps-lo", "-13", "--eps-hi", "-11", "--precision", "8"]
    assert run(capsys, *args)[0] == EXIT_USAGE


def test_config_precedence(tmp_path):
    cfg = tmp_path / "solver.cfg"
    cfg.write_text("# settings\nprecision = 150\nM = 400  # wider window\nthome-terms = '500'\n")
    parse = build_parser().parse_args
    base = ["state", "--lambda", "40", "--l", "0", "--eps-lo", "-13", "--eps-hi", "-11"]
    from_file = build_config(parse(base + ["--config", str(cfg)]))
    assert (from_file.precision_bits, from_file.M, from_file.thome_terms) == (150, 400, 500)
    flagged = build_config(parse(base + ["--config", str(cfg), "--M", "420"]))
    assert (flagged.precision_bits, flagged.M) == (150, 420)
    default = build_config(parse(base))
    assert default.precision_bits == 113


def test_render_json_and_csv_carry_the_same_rows():
    rows = [{"l": 0, "index": 1, "lambda_crit": "7.04"}, {"l": 0, "index": 2, "lambda_crit": "46.6"}]
    as_json = json.loads(render("critical", None, rows, "json"))
    as_csv = list(csv.DictReader(io.StringIO(render("critical", None, rows, "csv"))))
    assert as_json["meta"]["command"] == "critical"
    assert [{k: str(v) for k, v in r.items()} for r in as_json["rows"]] == as_csv


def test_partial_results_are_flagged_in_csv():
    text = render("state", None, [{"eps": "-1"}], "csv", {"partial": True, "failures": [["-2", "boom"]]})
    assert text.splitlines()[-2:] == ["# partial: true", '# failures: [["-2", "boom"]]']


def test_critical_command(capsys):
    code, out, _ = run(capsys, "critical", "--l", "3", "--count", "1")
    assert code == EXIT_OK
    (row,) = json.loads(out)["rows"]
    assert abs(float(row["lambda_crit"]) - 31.60949) < 1e-4


def test_critical_command_is_deterministic_and_formats_agree(capsys):
    argv = ["critical", "--l", "0", "--count", "1", "--lambda-max", "10"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
    code, text, _ = run(capsys, *argv, "--format", "csv")
    assert code == EXIT_OK
    rows = [{k: str(v) for k, v in r.items()} for r in json.loads(first[1])["rows"]]
    assert list(csv.DictReader(io.StringIO(text))) == rows


def test_critical_command_reports_partial_results(capsys):
    code, out, _ = run(capsys, "critical", "--l", "0", "--count", "2", "--lambda-max", "10")
    assert code == EXIT_PARTIAL
    assert len(json.loads(out)["rows"]) == 1
    code, out, _ = run(capsys, "critical", "--l", "0", "--count", "0")
    assert code == EXIT_OK and json.loads(out)["rows"] == []


@pytest.mark.slow
def test_state_and_wavefunction_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "state", "--lambda", "40", "--l", "0", "--eps-lo", "-12.5", "--eps-hi", "-11.5")
    assert code == EXIT_OK
    (row,) = json.loads(out)["rows"]
    assert abs(float(row["eps"]) + 11.909183) < 5e-7
    assert row["index"] == 0
    assert abs(float(row["T13_c0_re"]) + 102.75762) < 1e-4
    target = tmp_path / "w.csv"
    args = ["wavefunction", "--lambda", "40", "--l", "0", "--eps-lo", "-12.5", "--eps-hi", "-11.5",
            "--points", "12", "--z-min", "0.3", "--z-max", "20", "--format", "csv", "--out", str(target)]
    assert run(capsys, *args)[0] == EXIT_OK
    rows = [r for r in csv.DictReader(io.StringIO(target.read_text())) if not r["z"].startswith("#")]
    assert len(rows) == 12
    assert {r["tag"] for r in rows} == {"inner", "middle", "outer"}
    assert all(float(r["w"]) >= -1e-12 for r in rows)

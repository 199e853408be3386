from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from tiesec.cli import main
from tiesec.io import (
    CaseError,
    bundled_case,
    bundled_case_path,
    canonical_json,
    case_from_dict,
    case_to_dict,
    parse_case,
    rows_to_csv,
)
from tiesec.pipeline import RegionArtifact, compute_region_artifact
from tiesec.synthetic import case9


def test_bundled_cases_parse():
    for name in ("case9_1p", "case9_2p", "two_region", "five_region"):
        case = bundled_case(name)
        assert case.schema_version == 1 and case.regions
    assert bundled_case("case9_2p").n_T == 2
    assert len(bundled_case("two_region").interconnection.links) == 2
    with pytest.raises(FileNotFoundError):
        bundled_case_path("nope")


def test_missing_reference_bus_points_at_the_region():
    raw = bundled_case("two_region").to_dict()
    del raw["regions"][1]["reference_bus"]
    with pytest.raises(CaseError) as err:
        case_from_dict(raw)
    assert any(p.startswith("/regions/1") and "reference_bus" in p for p in err.value.problems)


def test_model_errors_are_located():
    raw = bundled_case("case9_1p").to_dict()
    raw["regions"][0]["branches"][2]["susceptance"] = -1.0
    with pytest.raises(CaseError, match="branches\\[2\\]"):
        case_from_dict(raw)


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"n_T": 1,\n "regions": [}\n')
    with pytest.raises(CaseError, match="bad.json:2"):
        parse_case(p)


def test_case_round_trip():
    net = case9(2)
    raw = case_to_dict([net])
    back = case_from_dict(raw)
    assert canonical_json(case_to_dict(back.regions)) == canonical_json(raw)
    assert back.sha256() == case_from_dict(json.loads(json.dumps(raw))).sha256()


def test_scenario_overrides_profiles():
    case = bundled_case("two_region")
    scen = case.scenarios[0]
    low = case.with_scenario(scen["name"])
    want = scen["regions"]["A"]["renewables"][0]
    assert list(low.region("A").renewables[0].profile) == pytest.approx(want)
    assert low.sha256() != case.sha256()
    with pytest.raises(KeyError):
        case.with_scenario("calm")


def test_artifact_write_is_idempotent():
    art = compute_region_artifact(case9(1))
    d = art.deterministic_dict()
    again = RegionArtifact.from_dict(json.loads(json.dumps(art.to_dict()))).deterministic_dict()
    assert canonical_json(again) == canonical_json(d)
    with pytest.raises(ValueError):
        RegionArtifact.from_dict({"format": "other"})


def test_csv_keeps_full_precision():
    text = rows_to_csv(["a", "b"], [(0.1 + 0.2, -0.0)])
    row = list(csv.reader(text.splitlines()))[1]
    assert float(row[0]) == 0.1 + 0.2 and row[1] == "0.0"


# --- command line ------------------------------------------------------------------


@pytest.fixture(scope="module")
def region_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    case = bundled_case_path("case9_1p")
    out = d / "arts" / "R9.json"
    assert main(["compute-region", "--case", str(case), "--region", "R9", "--out", str(out)]) == 0
    return case, out


def test_cli_check_passes(region_file, capsys):
    case, art = region_file
    assert main(["check", "--artifact", str(art), "--case", str(case), "--samples", "200", "--seed", "7"]) == 0
    assert "Infeasible point" in capsys.readouterr().out


def test_cli_coordinate_single_region(region_file, tmp_path, capsys):
    case, art = region_file
    out = tmp_path / "coord.json"
    assert main(["coordinate", "--case", str(case), "--artifacts", str(art.parent), "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    lowest = min(v[-1] for v in json.loads(art.read_text())["periods"][0]["region"]["vertices"])
    assert res["objective"] == pytest.approx(lowest, abs=1e-6)


def test_cli_rejects_artifact_from_another_case(region_file, tmp_path):
    _, art = region_file
    other = bundled_case_path("case9_2p")
    assert main(["check", "--artifact", str(art), "--case", str(other), "--samples", "5"]) == 1


def test_cli_report_slice(region_file, tmp_path):
    _, art = region_file
    out = tmp_path / "slice.csv"
    assert main(["report", "--artifact", str(art), "--slice", "0,2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert list(rows[0]) == ["t", "vertex", "y0", "y2"]
    V = np.array(json.loads(art.read_text())["periods"][0]["region"]["vertices"])
    for r in rows:
        k = int(r["vertex"])
        assert float(r["y0"]) == V[k, 0] and float(r["y2"]) == V[k, 2]


def test_cli_usage_errors_exit_2(region_file, capsys):
    _, art = region_file
    assert main(["frobnicate"]) == 2
    assert main(["check", "--bogus"]) == 2
    assert main(["report", "--artifact", str(art), "--slice", "x"]) == 2
    assert main(["report", "--artifact", str(art), "--slice", "0,9"]) == 2
    assert main(["oracle", "minmax", "--a", "1,2", "--box-max", "1"]) == 2


def test_cli_domain_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["oracle", "op1", "--case", str(bad)]) == 1
    assert "n_T" in capsys.readouterr().err
    assert main(["oracle", "op1", "--case", str(tmp_path / "missing.json")]) == 1


def test_cli_oracles(tmp_path, capsys):
    assert main(["oracle", "minmax", "--a", "1,2,3"]) == 0
    out = capsys.readouterr().out
    assert "closed form  2" in out
    sys_file = tmp_path / "sys.json"
    sys_file.write_text(json.dumps({"A": [[0, 1], [0, -1], [1, -1]], "b": [1, 0, 0], "keep": 1}))
    assert main(["oracle", "fme", "--system", str(sys_file)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["b"][0] / res["A"][0][0] == pytest.approx(1.0)
    assert main(["oracle", "op1", "--case", str(bundled_case_path("two_region"))]) == 0


def test_console_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "tiesec.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("tiesec")
    res = subprocess.run([sys.executable, "-m", "tiesec.cli", "nope"], capture_output=True, text=True)
    assert res.returncode == 2 and "usage" in res.stderr

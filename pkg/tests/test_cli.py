import csv
import json
import os

import numpy as np
import pytest

from finsler_penergy import cli
from finsler_penergy import curve as fc


def write_cfg(path, text):
    path.write_text(text)
    return str(path)


SPHERE_ARC_CFG = """
metric.name   = sphere
metric.radius = 1.0
p.list        = -1,0.5,2
grid.N        = 100
curve.x0      = 1.5707963267948966,0
curve.x1      = 1.5707963267948966,{phi1}
seed          = 0
output.path   = {out}
output.format = json
"""


def test_validate_pass_and_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "v.cfg", f"""
metric.name = euclidean
metric.dim  = 3
seed        = 1
validate.samples = 300
output.path = {tmp_path}/val
""")
    assert cli.main(["validate", "--config", cfg, "--quiet"]) == 0
    rep = json.load(open(tmp_path / "val.json"))
    assert rep["schema_version"] == 1
    assert rep["results"]["passed"] is True


def test_validate_broken_randers_exits_2(tmp_path):
    cfg = write_cfg(tmp_path / "v.cfg", f"""
metric.name = randers
metric.a    = 1,0;0,1
metric.b    = 1.2,0
seed        = 1
validate.samples = 500
output.path = {tmp_path}/bad
""")
    assert cli.main(["validate", "--config", cfg, "--quiet"]) == 2
    rep = json.load(open(tmp_path / "bad.json"))
    failing = {c["check"] for c in rep["results"]["checks"] if not c["passed"]}
    assert "F3_positive_definite" in failing


def test_config_errors_exit_1_without_output(tmp_path, capsys):
    bad_metric = write_cfg(tmp_path / "a.cfg", "metric.name = minkowski\n")
    assert cli.main(["validate", "--config", bad_metric]) == 1
    odd_n = write_cfg(tmp_path / "b.cfg",
                      "metric.name = euclidean\ngrid.N = 33\n")
    assert cli.main(["validate", "--config", odd_n]) == 1
    zero_p = write_cfg(tmp_path / "c.cfg",
                       "metric.name = euclidean\np.list = 0,2\n")
    assert cli.main(["validate", "--config", zero_p]) == 1
    missing = str(tmp_path / "nope.cfg")
    assert cli.main(["validate", "--config", missing]) == 1
    # no partial outputs appear on config failures
    leftovers = [f for f in os.listdir(tmp_path)
                 if f.endswith(".json") or f.endswith(".tmp")]
    assert leftovers == []


def test_geodesic_bvp_writes_curve_and_report(tmp_path):
    out = tmp_path / "geo"
    cfg = write_cfg(tmp_path / "g.cfg", SPHERE_ARC_CFG.format(
        phi1=2.0, out=out))
    assert cli.main(["geodesic", "--config", cfg, "--quiet"]) == 0
    rep = json.load(open(f"{out}.json"))
    assert rep["results"]["length"] == pytest.approx(2.0, rel=1e-9)
    for entry in rep["results"]["per_p"]:
        assert entry["first_variation_norm"] < 1e-6
    curve = fc.read_csv(f"{out}.curve.csv")
    assert curve.nodes.shape == (101, 2)
    # 12+ significant digits in the CSV
    with open(f"{out}.curve.csv") as fh:
        row = fh.readlines()[50].split(",")
    assert len(row[1]) >= 12


def test_geodesic_shoot_echoes_endpoint(tmp_path):
    out = tmp_path / "shot"
    cfg = write_cfg(tmp_path / "s.cfg", f"""
metric.name   = sphere
metric.radius = 1.0
p.list        = 2
grid.N        = 100
curve.x0      = 1.5707963267948966,0
shoot.y0      = 0,1
shoot.t_end   = 3.141592653589793
shoot.steps   = 200
output.path   = {out}
""")
    assert cli.main(["geodesic", "--config", cfg, "--quiet"]) == 0
    rep = json.load(open(f"{out}.json"))
    assert rep["results"]["source"]["mode"] == "shoot"
    assert rep["results"]["source"]["t_end"] == pytest.approx(np.pi)
    final = rep["results"]["source"]["final_point"]
    assert final[1] == pytest.approx(np.pi, abs=1e-9)


def test_geodesic_from_curve_file_init(tmp_path):
    init = fc.from_function(
        lambda t: np.stack([t + 0.1 * np.sin(np.pi * t),
                            t - 0.1 * np.sin(np.pi * t)], axis=1), 100)
    fc.write_csv(init, tmp_path / "init.csv")
    out = tmp_path / "fromfile"
    cfg = write_cfg(tmp_path / "f.cfg", f"""
metric.name = euclidean
p.list      = 2
grid.N      = 100
curve.file  = {tmp_path}/init.csv
output.path = {out}
""")
    assert cli.main(["geodesic", "--config", cfg, "--quiet"]) == 0
    rep = json.load(open(f"{out}.json"))
    assert rep["results"]["length"] == pytest.approx(np.sqrt(2), rel=1e-9)


def test_classify_verdicts_and_bounds(tmp_path):
    out = tmp_path / "cls"
    cfg = write_cfg(tmp_path / "c.cfg", SPHERE_ARC_CFG.format(
        phi1=4.71238898038469, out=out))  # arc length 1.5 pi
    assert cli.main(["classify", "--config", cfg, "--quiet"]) == 0
    rep = json.load(open(f"{out}.json"))
    per_p = {e["p"]: e for e in rep["results"]["per_p"]}
    assert per_p[-1.0]["verdict"] == "not-max"
    assert per_p[0.5]["verdict"] == "not-min"
    assert per_p[2.0]["verdict"] == "neither-min-nor-max"
    assert per_p[0.5]["bounds"]["in_bounds"] is True
    assert "bounds" not in per_p[2.0]


def test_classify_rejects_non_geodesic_shot(tmp_path):
    # a tilted-circle shot is a true geodesic of the sphere but its chart
    # discretization misses the strict residual gate: prerequisites fail
    out = tmp_path / "ng"
    cfg = write_cfg(tmp_path / "n.cfg", f"""
metric.name   = sphere
metric.radius = 1.0
p.list        = 2
grid.N        = 100
curve.x0      = 1.0,0
shoot.y0      = 0.3,1.0
shoot.t_end   = 1.0
shoot.steps   = 100
tol.geodesic  = 1e-10
output.path   = {out}
""")
    assert cli.main(["classify", "--config", cfg, "--quiet"]) == 3
    assert not os.path.exists(f"{out}.json")


def test_survey_table(tmp_path):
    out = tmp_path / "sv"
    cfg = write_cfg(tmp_path / "s.cfg", f"""
metric.name   = sphere
metric.radius = 1.0
p.list        = 0.5,-1
grid.N        = 400
curve.x0      = 1.5707963267948966,0
curve.x1      = 1.5707963267948966,1.5707963267948966
survey.wraps  = 2
output.path   = {out}
""")
    assert cli.main(["survey", "--config", cfg, "--quiet"]) == 0
    with open(f"{out}.table.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["m"]) for r in rows] == [0, 2, 4]
    e_half = [float(r["E_p=0.5"]) for r in rows]
    assert e_half == sorted(e_half)


def test_csv_format_output(tmp_path):
    out = tmp_path / "vcsv"
    cfg = write_cfg(tmp_path / "v.cfg", f"""
metric.name = euclidean
validate.samples = 200
output.path = {out}
""")
    assert cli.main(["validate", "--config", cfg, "--quiet",
                     "--format", "csv"]) == 0
    with open(f"{out}.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["check"] for r in rows} >= {"F1_positivity", "energy_identity"}


def test_figures_rendered(tmp_path):
    out = tmp_path / "fig"
    cfg = write_cfg(tmp_path / "c.cfg", SPHERE_ARC_CFG.format(phi1=2.0, out=out))
    assert cli.main(["classify", "--config", cfg, "--quiet", "--figures"]) == 0
    assert os.path.getsize(f"{out}.png") > 1000


def test_strict_metric_construction_error_exits_1(tmp_path):
    cfg = write_cfg(tmp_path / "g.cfg", f"""
metric.name = randers
metric.a    = 1,0;0,1
metric.b    = 0.97,0
p.list      = 2
curve.x0    = 0,0
curve.x1    = 1,1
output.path = {tmp_path}/strict
""")
    assert cli.main(["geodesic", "--config", cfg, "--quiet"]) == 1
    assert not os.path.exists(f"{tmp_path}/strict.json")


def test_fpe_log_env_controls_stderr(tmp_path, capsys, monkeypatch):
    cfg = write_cfg(tmp_path / "v.cfg", f"""
metric.name = euclidean
p.list      = 2
curve.x0    = 0,0
curve.x1    = 1,0
grid.N      = 40
output.path = {tmp_path}/log
""")
    monkeypatch.setenv("FPE_LOG", "info")
    assert cli.main(["geodesic", "--config", cfg, "--quiet"]) == 0
    err = capsys.readouterr().err
    assert "BVP solve" in err
    monkeypatch.setenv("FPE_LOG", "")
    assert cli.main(["geodesic", "--config", cfg, "--quiet"]) == 0
    assert "BVP solve" not in capsys.readouterr().err


def test_seed_override_changes_validation_stream(tmp_path):
    cfg = write_cfg(tmp_path / "v.cfg", f"""
metric.name = euclidean
validate.samples = 100
output.path = {tmp_path}/seeded
""")
    assert cli.main(["validate", "--config", cfg, "--quiet", "--seed", "9"]) == 0
    rep = json.load(open(tmp_path / "seeded.json"))
    assert rep["results"]["seed"] == 9
    assert rep["config"]["seed"] == "9"

import csv
import json
import math

import numpy as np
import pytest

from skewevo.cli import main
from skewevo.config import ConfigError, load_config, parse_config
from skewevo.dynamics import evaluate_skew, norm1
from skewevo.grid import build_grid
from skewevo.report import AnalysisReport, PLOT_HEADER, build_system, plot_rows, run_config

SMALL_GRID = {"t0": [0, 1], "dt": [0, 0.5, 2, 8], "s_offsets": [0, 2], "shifts": [0, 3], "n_random_vectors": 3}


def cfg(**overrides):
    data = {"system": {"example": "ued"}, "command": "certify", "grid": SMALL_GRID, "n_axiom_samples": 50}
    data.update(overrides)
    return data


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def errors_of(data):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    return info.value.errors


def test_defaults_filled_in():
    c = parse_config({"system": {"example": "uet", "mu": 3}, "command": "verify-axioms"})
    assert c.seed == 42
    assert c.tolerances == {"closed_form": 1e-9, "quadrature": 1e-6, "tabulated": 1e-5}
    assert c.projectors.partition == ((0,), (1,), (2,))
    assert c.grid.dt == (0.0, 0.25, 1.0, 5.0, 20.0)
    assert c.cocycle_tol == 1e-9


def test_aliases():
    c = parse_config(cfg(command="integral-criterion", system={"example": "uet", "mu": 3},
                         criterion={"kind": "scaled_exp", "params": {"N": 1, "nu": 2}}))
    assert c.command == "criterion-3-2"


@pytest.mark.parametrize("data,field", [
    ({"command": "certify"}, "system: required"),
    (cfg(system={"example": "lorenz"}), "system.example"),
    (cfg(system={"example": "uet", "mu": 2.0}), "system.mu: must exceed f(0) = 2"),
    (cfg(system={"example": "uet"}), "system.mu: required"),
    (cfg(system={"example": "ued", "mu": 4}), "system.mu: only applies"),
    (cfg(system={"example": "ued", "profile": {"kind": "exp_plus_const", "b": -1}}), "system.profile"),
    (cfg(system={"example": "ses", "p": 0}), "system.p"),
    (cfg(system={"example": "custom_diagonal"}), "system.exponents: required"),
    (cfg(command="solve"), "command"),
    (cfg(grid={"dt": [0, -1]}), "grid.dt[1]"),
    (cfg(grid={"n_random_vectors": 1.5}), "grid.n_random_vectors"),
    (cfg(tolerances={"closed_form": "tight"}), "tolerances.closed_form"),
    (cfg(projectors={"kind": "coordinate", "partition": [[0], [0]]}), "projectors.partition"),
    (cfg(projectors={"kind": "matrices", "matrices": [[[1, 0]], [[0, 1]]]}), "projectors.matrices[0]"),
    (cfg(projectors={"kind": "spectral"}), "projectors.kind"),
    (cfg(system={"example": "ses"}), "projectors: required"),
    (cfg(command="criterion-3-1"), "criterion: required"),
    (cfg(command="criterion-3-2"), "projectors: command criterion-3-2 needs 3"),
    (cfg(criterion={"kind": "cubic"}), "criterion"),
    (cfg(constants={"gains": [1, 1], "rates": [2, 0]}), "constants"),
    (cfg(seed=-4), "seed"),
    (cfg(colour="blue"), "colour: unknown field"),
])
def test_field_level_errors(data, field):
    errs = errors_of(data)
    assert any(e.startswith(field) for e in errs), errs


def test_errors_are_collected():
    errs = errors_of({"system": {"example": "uet", "mu": 1}, "command": "nope", "seed": "x"})
    assert len(errs) == 3


def test_load_config_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(path)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_verify_axioms_translation():
    report = run_config(parse_config({"system": {"example": "ses", "p": 2}, "command": "verify-axioms",
                                      "n_axiom_samples": 200}))
    assert report.passed and report.verdict == "axioms_hold"
    assert report.axioms["semiflow"]["residuals"] == {"composition": 0.0, "identity": 0.0}
    assert report.axioms["cocycle"]["residuals"]["composition"] <= 1e-9


def test_certify_dichotomy_report():
    report = run_config(parse_config(cfg(grid=None)))
    assert report.verdict == "dichotomic"
    nu1, nu2 = report.result["constants"]["rates"]
    assert nu1 >= 1.9 and nu2 >= 2.85
    assert report.rate_table and report.rate_table[0]["state"] == "uniform"
    assert report.violations == []


def test_criterion_3_2_report():
    report = run_config(parse_config(cfg(system={"example": "uet", "mu": 3}, command="criterion-3-2",
                                         criterion={"kind": "scaled_exp", "params": {"N": 1, "nu": 2}})))
    assert report.passed
    extracted = report.result["extracted"]
    assert set(extracted) == {"N", "M", "N3", "nu3"}
    assert report.derived["verdict"] == "trichotomic"


def test_criterion_3_1_report():
    report = run_config(parse_config(cfg(command="criterion-3-1",
                                         criterion={"kind": "affine_over_const", "params": {"c": 0.9}, "delta": 2})))
    assert report.passed
    assert report.result["extracted"]["N"] == pytest.approx(3 / 0.9)
    assert report.derived["verdict"] == "dichotomic"


def test_classify_with_constants():
    report = run_config(parse_config(cfg(command="classify", constants={"gains": [1, 1], "rates": [2, 3]})))
    assert report.verdict == "dichotomic"
    report = run_config(parse_config(cfg(command="classify", constants={"gains": [1, 1], "rates": [4, 3]})))
    assert report.verdict == "rejected" and report.violations


def test_report_round_trip():
    report = run_config(parse_config(cfg(system={"example": "uet", "mu": 3})))
    text = report.to_json()
    assert AnalysisReport.from_json(text).to_json() == text
    assert AnalysisReport.from_json(text) == report


def test_nonfinite_values_serialize():
    report = AnalysisReport(config={}, command="certify", passed=False, verdict="rejected",
                            result={"a": math.inf, "b": [math.nan, -math.inf, np.float64(1.5)]})
    data = json.loads(report.to_json())
    assert data["result"] == {"a": "inf", "b": ["nan", "-inf", 1.5]}


def test_determinism():
    c = parse_config(cfg())
    assert run_config(c).to_json() == run_config(c).to_json()


def test_seed_changes_random_parts():
    a = run_config(parse_config(cfg(seed=1))).to_json()
    b = run_config(parse_config(cfg(seed=2))).to_json()
    assert a != b


def test_plot_rows_match_direct_evaluation():
    c = parse_config(cfg(system={"example": "uet", "mu": 3}))
    system, families = build_system(c)
    grid = build_grid(c.grid, c.system.profile, system.dim, seed=c.seed)
    rows = plot_rows(system, families, grid)
    assert len(rows) == 3 * len(grid.points)
    points = {(p.t, p.s, p.t0, p.x_shift): p for p in grid.points}
    for t, s, t0, shift, k, norm, log_norm in rows:
        p = points[(t, s, t0, shift)]
        v = families[k - 1](p.x) @ np.ones(3)
        _, w = evaluate_skew(system, t, t0, p.x, v)
        assert norm == norm1(w)
        assert log_norm == math.log(norm)


def test_cli_writes_report_and_plot(tmp_path):
    out, plot = tmp_path / "r.json", tmp_path / "p.csv"
    code = main(["--config", str(write(tmp_path, cfg())), "--out", str(out), "--plot-data", str(plot)])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["verdict"] == "dichotomic"
    with plot.open() as fh:
        reader = csv.reader(fh)
        assert tuple(next(reader)) == PLOT_HEADER
        first = next(reader)
    assert len(first) == 7
    assert plot.read_text().splitlines()[0] == "t,s,t0,x_shift,component,norm,log_norm"


def test_cli_stdout(tmp_path, capsys):
    assert main(["--config", str(write(tmp_path, cfg()))]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["command"] == "certify"
    assert "certify: dichotomic" in captured.err


def test_cli_strict_rejected(tmp_path):
    swapped = cfg(system={"example": "ued", "exponents": [2, -3]})
    path = write(tmp_path, swapped)
    assert main(["--config", str(path), "--out", str(tmp_path / "r.json")]) == 0
    assert main(["--config", str(path), "--out", str(tmp_path / "r.json"), "--strict"]) == 1


def test_cli_config_error(tmp_path, capsys):
    code = main(["--config", str(write(tmp_path, {"system": {"example": "uet", "mu": 1}, "command": "certify"}))])
    assert code == 2
    assert "system.mu" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "absent.json")]) == 2


def test_cli_seed_override(tmp_path):
    path = write(tmp_path, cfg(seed=5))
    main(["--config", str(path), "--out", str(tmp_path / "a.json"), "--seed", "9"])
    main(["--config", str(write(tmp_path, cfg(seed=9), "b.json")), "--out", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()
    assert json.loads((tmp_path / "a.json").read_text())["config"]["seed"] == 9


def test_config_output_paths(tmp_path):
    out = tmp_path / "from_config.json"
    c = parse_config(cfg(output={"report": str(out)}))
    run_config(c)
    assert out.exists()
    assert "output" not in json.loads(out.read_text())["config"]

import csv
import json

import pytest

from toaops.cli import load_config, main
from toaops.errors import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_catalog(tmp_path, capsys):
    code, out, _ = run(capsys, "catalog", "--out", str(tmp_path))
    assert code == 0
    table = rows(tmp_path / "catalog.csv")
    assert len(table) == 11
    cosine = next(r for r in table if r["name"] == "cosine")
    assert cosine["G"] == "-2*V0*sin(k*v/2)"
    free = next(r for r in table if r["name"] == "free")
    assert "u/4" in free["note"]
    assert (tmp_path / "effective_config.txt").exists()


def test_check_separability_all(tmp_path, capsys):
    code, out, _ = run(capsys, "check-separability", "--all", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "separability.json").read_text())
    assert len(rep) == 11 and all(e["passed"] for e in rep.values())


def test_kernel_eval_and_residual(tmp_path, capsys):
    code, _, _ = run(capsys, "kernel", "eval", "--out", str(tmp_path),
                     "--override", "points.u=[1.0, 0.0]", "--override", "points.v=[1.0, 2.0]")
    assert code == 0
    assert header(tmp_path / "kernel.csv") == ["u", "v", "T"]
    vals = rows(tmp_path / "kernel.csv")
    assert float(vals[0]["T"]) == pytest.approx(0.24016969892289339, abs=1e-15)
    assert float(vals[1]["T"]) == 0.0
    code, _, _ = run(capsys, "kernel", "residual", "--out", str(tmp_path))
    assert code == 0
    res = [float(r["residual"]) for r in rows(tmp_path / "residual.csv")]
    assert 3.5 <= res[0] / res[1] <= 4.5


def test_kernel_eval_series_and_weyl(tmp_path, capsys):
    for kind in ("series", "weyl"):
        code, out, _ = run(capsys, "kernel", "eval", "--out", str(tmp_path / kind),
                           "--override", f"kernel.kind={kind}")
        assert code == 0


def test_spectrum_outputs_and_determinism(tmp_path, capsys):
    args = ["spectrum", "--override", "confinement.n_quad=60", "--override", "eigen.write_indices=[0, 1]"]
    assert run(capsys, *args, "--out", str(tmp_path / "a"))[0] == 0
    assert run(capsys, *args, "--out", str(tmp_path / "b"))[0] == 0
    assert header(tmp_path / "a" / "spectrum.csv") == ["index", "tau", "parity", "nodal"]
    modes = sorted(p.name for p in (tmp_path / "a").glob("mode_*.csv"))
    assert "mode_0000.csv" in modes and len(modes) >= 2
    assert header(tmp_path / "a" / modes[0]) == ["q", "re_phi", "im_phi", "abs2_phi"]
    for name in ["spectrum.csv", *modes, "effective_config.txt"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "spectrum_summary.json").read_text())
    assert len(summary["smallest"]) == 10
    assert summary["classes"]["nodal"] > 0 and summary["classes"]["nonnodal"] > 0


def test_effective_config_round_trip(tmp_path, capsys):
    first = tmp_path / "first"
    assert run(capsys, "spectrum", "--out", str(first), "--override", "confinement.n_quad=40",
               "--override", "potential.params.k=2.0")[0] == 0
    second = tmp_path / "second"
    assert run(capsys, "spectrum", "--config", str(first / "effective_config.txt"), "--out", str(second))[0] == 0
    assert (first / "spectrum.csv").read_bytes() == (second / "spectrum.csv").read_bytes()


def test_free_two_point_spectrum(tmp_path, capsys):
    code, _, _ = run(capsys, "spectrum", "--out", str(tmp_path), "--override", "potential.name=free",
                     "--override", "confinement.n_quad=2")
    assert code == 0
    assert [float(r["tau"]) for r in rows(tmp_path / "spectrum.csv")] == [0.0, 0.0]


def test_evolve(tmp_path, capsys):
    code, out, _ = run(capsys, "evolve", "--out", str(tmp_path), "--override", "confinement.n_quad=120")
    assert code == 0
    summary = json.loads(out)
    assert abs(summary["t_max_prob"] - summary["tau"]) <= max(5 * summary["dt"], 0.15 * summary["tau"])
    assert header(tmp_path / "dynamics.csv") == ["t", "mean_q", "var_q", "prob_eps", "norm"]
    assert header(tmp_path / "snapshots.csv") == ["q", "t", "abs2_psi"]


def test_compare_small_regime(tmp_path, capsys):
    code, out, _ = run(capsys, "compare", "--out", str(tmp_path), "--override", "confinement.n_quad=120")
    assert code == 0
    rep = json.loads((tmp_path / "compare.json").read_text())
    assert rep["sharpness_ratio"] == pytest.approx(1.0, rel=0.1)
    assert (tmp_path / "supra" / "dynamics.csv").exists() and (tmp_path / "weyl" / "dynamics.csv").exists()


def test_verify_and_negative_control(tmp_path, capsys):
    code, _, _ = run(capsys, "verify", "--out", str(tmp_path / "ok"))
    assert code == 0
    rep = json.loads((tmp_path / "ok" / "verify.json").read_text())
    weyl = next(c for c in rep["checks"] if c["name"] == "weyl_tke_residual")
    assert weyl["expected_fail"] and not weyl["passed"] and weyl["ok"]
    code, _, _ = run(capsys, "verify", "--out", str(tmp_path / "bad"), "--override", "verify.corrupt_divisor=True")
    assert code == 3


def test_config_errors_carry_line_numbers(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\npotential.name = 'cosine'\n\nconfinement.l = -2\n")
    code, _, err = run(capsys, "spectrum", "--config", str(cfg))
    assert code == 1 and "line 4" in err
    cfg.write_text("kernel.nonsense = 3\n")
    code, _, err = run(capsys, "spectrum", "--config", str(cfg))
    assert code == 1 and "line 1" in err
    cfg.write_text("just words\n")
    assert run(capsys, "spectrum", "--config", str(cfg))[0] == 1


def test_empty_trajectory_is_a_config_error(capsys):
    code, _, err = run(capsys, "evolve", "--override", "evolve.t_max=0")
    assert code == 1 and "t_max" in err


def test_selection_failure_is_numeric_error(tmp_path, capsys):
    code, _, err = run(capsys, "evolve", "--out", str(tmp_path), "--override", "potential.name=free",
                       "--override", "confinement.n_quad=2")
    assert code == 2


def test_load_config_validation():
    with pytest.raises(ConfigError):
        load_config(overrides=["potential.params={'V0': 1.0}"])
    with pytest.raises(ConfigError):
        load_config(overrides=["kernel.kind=magic"])
    with pytest.raises(ConfigError):
        load_config(overrides=["evolve.N=1000"])
    cfg = load_config(overrides=["potential.name=exp", "potential.params.V0=2", "potential.params.kappa=0.5"])
    assert cfg["potential.params"] == {"V0": 2, "kappa": 0.5}

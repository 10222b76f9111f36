import json
from pathlib import Path

import numpy as np
import pytest

from fracpx import modular as md
from fracpx.cli import main, read_function, UsageError
from fracpx.config import ConfigError, SolverSettings, config_hash, load_config, parse_config
from fracpx.grid import Problem

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def edited(tmp_path, name, old, new, target="edited.toml"):
    text = (CONFIGS / name).read_text()
    assert old in text
    path = tmp_path / target
    path.write_text(text.replace(old, new, 1))
    return path


# -- configuration ----------------------------------------------------------------------


@pytest.mark.parametrize("name", ["constant.toml", "dip.toml", "spike.toml", "growth.toml"])
def test_shipped_configs_load(name):
    config, solver = load_config(CONFIGS / name, environ={})
    assert config.dimension == 1 and isinstance(solver, SolverSettings)
    assert len(config_hash(config)) == 64


def test_config_hash_deterministic_and_sensitive(tmp_path):
    a, _ = load_config(CONFIGS / "constant.toml", environ={})
    b, _ = load_config(CONFIGS / "constant.toml", environ={})
    assert config_hash(a) == config_hash(b)
    c, _ = load_config(edited(tmp_path, "constant.toml", "s = 0.25", "s = 0.3"), environ={})
    assert config_hash(c) != config_hash(a)


def test_missing_s_names_field(tmp_path):
    path = edited(tmp_path, "constant.toml", "s = 0.25\n", "")
    with pytest.raises(ConfigError, match="domain.s"):
        load_config(path, environ={})


def test_unknown_field_rejected():
    data = {"domain": {"dimension": 1, "s": 0.25, "omega": [[0, 1]], "sigma": 1},
            "exponents": {"p": {"family": "constant", "value": 2}, "r": {"family": "constant", "value": 2}}}
    with pytest.raises(ConfigError, match="domain.sigma"):
        parse_config(data)


def test_syntax_error_reports_line(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[domain]\ndimension = 1\ns = = 0.25\n")
    with pytest.raises(ConfigError, match="line 3"):
        load_config(path, environ={})


def test_samples_family_from_file(tmp_path):
    config, _ = load_config(CONFIGS / "constant.toml", environ={})
    n = config.nodes_per_axis ** config.dimension
    (tmp_path / "r.txt").write_text("# r samples\n" + "\n".join(["2.5"] * n) + "\n")
    path = edited(tmp_path, "constant.toml", '[exponents.r]\nfamily = "constant"\nvalue = 2.0',
                  '[exponents.r]\nfamily = "samples"\nfile = "r.txt"')
    cfg, _ = load_config(path, environ={})
    pr = Problem.from_config(cfg)
    assert np.all(pr.r_node == 2.5)


def test_environment_overrides():
    _, solver = load_config(CONFIGS / "constant.toml",
                            environ={"FRACPX_LUXEMBURG_TOL": "1e-20", "FRACPX_RESTARTS": "3",
                                     "FRACPX_T_VALUES": "1,2"})
    assert solver.luxemburg_tol == 1e-20 and solver.restarts == 3 and solver.t_values == (1.0, 2.0)
    with pytest.raises(ConfigError, match="restarts"):
        SolverSettings().with_env({"FRACPX_RESTARTS": "many"})


# -- validate ----------------------------------------------------------------------------------


def test_validate_constant_passes(capsys):
    code, out, _ = run(capsys, "validate", "--config", CONFIGS / "constant.toml")
    assert code == 0
    for tag in ("P", "Q", "R", "G", "A1", "A2"):
        assert any(line.startswith(tag + " ") for line in out.splitlines())


def test_validate_q_violation_names_node(capsys, tmp_path):
    path = edited(tmp_path, "constant.toml", "[exponents.q]\nfamily = \"constant\"\nvalue = 2.0",
                  "[exponents.q]\nfamily = \"constant\"\nvalue = 5.0")
    code, out, _ = run(capsys, "validate", "--config", path)
    assert code == 1
    qline = next(line for line in out.splitlines() if line.startswith("Q "))
    assert "FAIL" in qline and "node" in qline


def test_validate_missing_field_exit_code(capsys, tmp_path):
    path = edited(tmp_path, "constant.toml", "s = 0.25\n", "")
    code, _, err = run(capsys, "validate", "--config", path)
    assert code == 2 and "domain.s" in err


@pytest.mark.parametrize("name, witness", [("dip.toml", "A1"), ("spike.toml", "A2")])
def test_validate_reports_witness(capsys, name, witness):
    code, out, _ = run(capsys, "validate", "--config", CONFIGS / name)
    assert code == 0
    line = next(line for line in out.splitlines() if line.startswith(witness + " "))
    assert "witness ball" in line


# -- norms ---------------------------------------------------------------------------------------


def constant_problem():
    config, _ = load_config(CONFIGS / "constant.toml", environ={})
    return Problem.from_config(config)


def write_column(path, values):
    path.write_text("value\n" + "\n".join(format(v, ".17g") for v in values) + "\n")
    return path


def norms(capsys, path, *extra):
    code, out, err = run(capsys, "norms", "--config", CONFIGS / "constant.toml", "--function", path, *extra)
    return code, (json.loads(out)["outputs"] if code == 0 else err)


def test_norms_zero_function(capsys, tmp_path):
    pr = constant_problem()
    code, out = norms(capsys, write_column(tmp_path / "u.csv", np.zeros(pr.grid.n_nodes)))
    assert code == 0
    for key in ("rho", "M", "I", "I0", "J", "J0", "norm_1", "norm_0", "lebesgue_p", "lebesgue_r"):
        assert out[key] == 0.0


def test_norms_unit_rho(capsys, tmp_path, rng):
    pr = constant_problem()
    v = rng.uniform(-1, 1, pr.m)
    v = v / md.norm_rho(v, pr)
    assert md.rho(v, pr) == pytest.approx(1.0, abs=1e-9)
    code, out = norms(capsys, write_column(tmp_path / "u.csv", pr.extend(v).values))
    assert code == 0 and out["norm_1"] == pytest.approx(1.0, abs=1e-9)


def test_norms_doubling(capsys, tmp_path, rng):
    pr = constant_problem()
    u = pr.extend(rng.uniform(-1, 1, pr.m)).values
    _, a = norms(capsys, write_column(tmp_path / "a.csv", u))
    (tmp_path / "b.json").write_text(json.dumps((2 * u).tolist()))
    _, b = norms(capsys, tmp_path / "b.json")
    for key in ("norm_1", "norm_0", "lebesgue_p", "lebesgue_r"):
        assert b[key] == pytest.approx(2 * a[key], rel=1e-9)


def test_norms_length_mismatch(capsys, tmp_path):
    pr = constant_problem()
    code, err = norms(capsys, write_column(tmp_path / "u.csv", np.zeros(pr.grid.n_nodes - 1)))
    assert code == 2 and "nodes" in err


def test_norms_rejects_support_outside_omega(capsys, tmp_path):
    pr = constant_problem()
    u = np.zeros(pr.grid.n_nodes)
    u[0] = 1.0
    code, err = norms(capsys, write_column(tmp_path / "u.csv", u))
    assert code == 2 and "outside" in err


def test_read_function_formats(tmp_path):
    (tmp_path / "u.csv").write_text("# hash\nnode,x,u\n0,0.1,1.5\n1,0.2,-2\n")
    assert read_function(tmp_path / "u.csv", 2).tolist() == [1.5, -2.0]
    with pytest.raises(UsageError):
        read_function(tmp_path / "u.csv", 3)


# -- scan / eigen / gamma ---------------------------------------------------------------------------


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    header = lines[1].split(",")
    return lines[0], header, [dict(zip(header, line.split(","))) for line in lines[2:]]


def test_scan_single_level(capsys, tmp_path):
    code, _, _ = run(capsys, "scan", "--config", CONFIGS / "constant.toml", "--t", "0.5", "--out", tmp_path,
                     "--restarts", "2")
    assert code == 0
    _, header, rows = read_csv(tmp_path / "scan.csv")
    assert header == ["t", "c1", "mu1", "lambda_star_t", "converged"]
    assert len(rows) == 1
    r = rows[0]
    assert float(r["mu1"]) * float(r["c1"]) == pytest.approx(0.5, rel=1e-15)
    summary = json.loads((tmp_path / "summary.json").read_text())
    record = json.loads((tmp_path / "run.json").read_text())
    assert summary["config_hash"] == record["config_hash"]
    assert sorted(record["outputs"]["files"]) == sorted(str(tmp_path / n) for n in ("scan.csv", "summary.json", "run.json"))


def test_scan_a1_four_levels_decreasing(capsys, tmp_path):
    code, _, _ = run(capsys, "scan", "--config", CONFIGS / "dip.toml", "--out", tmp_path, "--restarts", "4")
    assert code == 0
    _, _, rows = read_csv(tmp_path / "scan.csv")
    assert len(rows) == 4
    by_t = sorted(rows, key=lambda r: float(r["t"]), reverse=True)
    mu = [float(r["mu1"]) for r in by_t]
    assert all(b < a for a, b in zip(mu, mu[1:]))


def test_scan_empty_list_is_usage_error(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("FRACPX_T_VALUES", "")
    code, _, err = run(capsys, "scan", "--config", CONFIGS / "constant.toml", "--out", tmp_path)
    assert code == 2 and "empty" in err


def test_scan_needs_out(capsys):
    code, _, err = run(capsys, "scan", "--config", CONFIGS / "constant.toml", "--t", "1")
    assert code == 2 and "--out" in err


@pytest.mark.parametrize("expr, verdict", [("2*gamma1", "eigenpair"), ("0.5*gamma0", "trivial")])
def test_eigen_verdicts(capsys, tmp_path, expr, verdict):
    code, out, _ = run(capsys, "eigen", "--config", CONFIGS / "growth.toml", "--lambda", expr, "--out", tmp_path)
    assert code == 0
    rec = json.loads((tmp_path / "eigen.json").read_text())
    assert rec["verdict"] == verdict == json.loads(out)["verdict"]
    _, header, rows = read_csv(tmp_path / "u.csv")
    assert header == ["node", "x", "u"]
    u = np.array([float(r["u"]) for r in rows])
    if verdict == "eigenpair":
        assert rec["energy"] < 0 and rec["residual"] <= 1e-6 and np.all(u >= 0) and u.max() > 0
    else:
        assert np.all(u == 0)


@pytest.mark.parametrize("lam", ["0", "-1.5"])
def test_eigen_nonpositive_lambda(capsys, tmp_path, lam):
    code, _, err = run(capsys, "eigen", "--config", CONFIGS / "growth.toml", f"--lambda={lam}", "--out", tmp_path)
    assert code == 2 and "positive" in err


def test_eigen_bad_expression(capsys, tmp_path):
    code, _, err = run(capsys, "eigen", "--config", CONFIGS / "growth.toml", "--lambda", "gamma7", "--out", tmp_path)
    assert code == 2


def test_gamma_command(capsys, tmp_path):
    code, out, _ = run(capsys, "gamma", "--config", CONFIGS / "growth.toml", "--out", tmp_path)
    assert code == 0
    rec = json.loads(out)
    assert 0 < rec["gamma0"] and 0 < rec["gamma1"]
    _, header, rows = read_csv(tmp_path / "gamma_argmin.csv")
    assert header[-2:] == ["u_gamma0", "u_gamma1"]
    code, _, err = run(capsys, "gamma", "--config", CONFIGS / "growth.toml", "--starts", "4")
    assert code == 2


# -- selftest ---------------------------------------------------------------------------------------


def test_selftest_constant_passes(capsys):
    code, out, _ = run(capsys, "selftest", "--config", CONFIGS / "constant.toml", "--samples", "200")
    assert code == 0
    assert "FAIL" not in out


def test_selftest_broken_tolerance_fails(capsys, monkeypatch):
    monkeypatch.setenv("FRACPX_LUXEMBURG_TOL", "1e-20")
    code, out, _ = run(capsys, "selftest", "--config", CONFIGS / "constant.toml", "--samples", "200")
    assert code == 1
    solver_line = next(line for line in out.splitlines() if line.startswith("luxemburg-solver"))
    assert "FAIL" in solver_line


def test_selftest_seed_changes_samples_not_verdicts(capsys):
    verdicts = []
    for seed in (1, 2, 3):
        code, out, _ = run(capsys, "selftest", "--config", CONFIGS / "dip.toml", "--samples", "200",
                           "--seed", seed)
        verdicts.append((code, [line.split()[1] for line in out.splitlines() if not line.startswith(" ")]))
    assert verdicts[0] == verdicts[1] == verdicts[2]
    assert verdicts[0][0] == 0


# -- reproducibility ----------------------------------------------------------------------------------


def test_deterministic_outputs_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        code, _, _ = run(capsys, "scan", "--config", CONFIGS / "dip.toml", "--t", "0.01", "0.1",
                         "--restarts", "2", "--deterministic", "--out", d)
        assert code == 0
        outs.append({n: (d / n).read_bytes() for n in ("scan.csv", "summary.json")})
        run_json = json.loads((d / "run.json").read_text())
        assert "wall_time_s" not in run_json["metadata"]
    assert outs[0] == outs[1]


def test_every_output_declares_hash(capsys, tmp_path):
    run(capsys, "eigen", "--config", CONFIGS / "growth.toml", "--lambda", "40", "--out", tmp_path, "--deterministic")
    config, _ = load_config(CONFIGS / "growth.toml", environ={})
    digest = config_hash(config)
    assert (tmp_path / "u.csv").read_text().splitlines()[0] == f"# config_hash={digest}"
    for name in ("eigen.json", "run.json"):
        assert json.loads((tmp_path / name).read_text())["config_hash"] == digest
    text = (tmp_path / "u.csv").read_text()
    assert "\r" not in text and text.endswith("\n")

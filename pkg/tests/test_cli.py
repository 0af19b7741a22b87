"""Command line driver: exit codes, CSV artifacts, reproducibility."""

import numpy as np
import pytest

from musielak import read_field_csv
from musielak.cli import ConfigError, load_config, main

PI = "3.141592653589793"

P2_SOLVE = f"""
[domain]
kind = "interval"

[nfunction]
family = "constant-power"
p = 2.0
scale = 0.5

[operator]
kind = "p-laplacian"

[source]
kind = "trig"
amplitude = [{PI}]
mode = [1]

[mesh]
resolution = 16

[output]
prefix = "p2"
"""

LIGHT_PROBE = """
[probe]
ball_count = 8
xi_per_ball = 24
x_samples = 3
y_samples = 32
refine_steps = 8
"""

BAD_BALANCE = """
[domain]
kind = "rectangle"

[nfunction]
family = "double-phase"
p = 2.0
q = 4.0
weight = { const = 0.0, slope = [1.0, 0.0] }

[output]
prefix = "dp"
""" + LIGHT_PROBE

UNIQUE = f"""
[domain]
kind = "interval"

[nfunction]
family = "constant-power"
p = 2.0
scale = 0.5

[operator]
kind = "p-laplacian"

[phi]
kind = "trig"
scale = 0.1

[b]
kind = "arctan"

[source]
kind = "trig"
amplitude = [{PI}]
mode = [1]

[mesh]
resolution = 12

[output]
prefix = "uq"
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def converge_config():
    return P2_SOLVE.replace("resolution = 16",
                            "resolutions = [4, 8, 16]")


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------


def test_load_config_rejects_unknown_sections_and_keys(tmp_path):
    with pytest.raises(ConfigError, match="unknown section"):
        load_config(write(tmp_path, "a.toml", "[extra]\nx = 1\n"))
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(write(tmp_path, "b.toml", "[mesh]\nresolutoin = 4\n"))
    with pytest.raises(ConfigError, match="no such config"):
        load_config(tmp_path / "missing.toml")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(write(tmp_path, "c.toml", "[[[broken"))


def test_config_errors_exit_with_two(tmp_path, capsys):
    cases = [
        "[domain]\nkind = \"ball\"\n",
        "[nfunction]\nfamily = \"mystery\"\n",
        "[nfunction]\nfamily = \"constant-power\"\n",  # missing p
        "[domain]\nkind = \"interval\"\n",             # missing [nfunction]
    ]
    for i, text in enumerate(cases):
        code = main(["check-nfunction", "--config",
                     write(tmp_path, f"cfg{i}.toml", text)])
        assert code == 2, text
        assert "config error:" in capsys.readouterr().err


def test_solver_section_is_validated(tmp_path, capsys):
    cfg = P2_SOLVE + "\n[solver]\nwarm_start = \"sideways\"\n"
    assert main(["solve", "--config", write(tmp_path, "w.toml", cfg)]) == 2
    assert "warm_start" in capsys.readouterr().err


def test_solve_rejects_dimension_mismatch(tmp_path, capsys):
    cfg = P2_SOLVE.replace("kind = \"interval\"", "kind = \"rectangle\"") \
                  .replace("family = \"constant-power\"",
                           "family = \"constant-power\"\ndim = 1")
    assert main(["solve", "--config", write(tmp_path, "d.toml", cfg)]) == 2
    assert "must match domain dim" in capsys.readouterr().err


def test_operator_mismatch_is_a_config_error(tmp_path, capsys):
    cfg = """
[domain]
kind = "interval"

[nfunction]
family = "variable-exponent"
exponent = { const = 2.0, slope = 0.5 }

[operator]
kind = "p-laplacian"

[mesh]
resolution = 8
"""
    assert main(["solve", "--config", write(tmp_path, "op.toml", cfg)]) == 2
    assert "constant-power" in capsys.readouterr().err


def test_converge_requires_resolutions(tmp_path, capsys):
    assert main(["converge", "--config", write(tmp_path, "c.toml", P2_SOLVE)]) == 2
    assert "resolutions" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# Commands end to end
# ---------------------------------------------------------------------------


def test_check_nfunction_passes_and_writes_margins(tmp_path, capsys):
    cfg = write(tmp_path, "nf.toml", BAD_BALANCE)  # the integrand itself is fine
    out = tmp_path / "out"
    assert main(["check-nfunction", "--config", cfg, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "RESULT: PASS" in text
    assert "fenchel-young: PASS" in text
    assert "biconjugation: PASS" in text
    rows = (out / "dp_margins.csv").read_text().strip().splitlines()
    assert rows[0] == "x1,x2,xi1,xi2,eta1,eta2,margin"
    assert len(rows) == 129
    assert all(float(r.rsplit(",", 1)[1]) >= -1e-10 for r in rows[1:])


def test_check_balance_finds_the_violation(tmp_path, capsys):
    cfg = write(tmp_path, "bal.toml", BAD_BALANCE)
    out = tmp_path / "out"
    assert main(["check-balance", "--config", cfg, "--out", str(out)]) == 1
    text = capsys.readouterr().out
    assert "RESULT: FAIL" in text
    assert "violated" in text
    witness_rows = (out / "dp_witnesses.csv").read_text().strip().splitlines()
    assert witness_rows[0].startswith("center1,center2,radius")
    assert len(witness_rows) >= 2


def test_check_balance_scan_reports_smallest_constant(tmp_path, capsys):
    cfg_text = BAD_BALANCE.replace("q = 4.0", "q = 3.0") \
        + "scan = true\nschedule = [2.0]\n"
    assert main(["check-balance", "--config",
                 write(tmp_path, "scan.toml", cfg_text)]) == 0
    text = capsys.readouterr().out
    assert "smallest passing constant: 2" in text
    assert "RESULT: PASS" in text


def test_validate_problem_passes(tmp_path, capsys):
    cfg = write(tmp_path, "vp.toml", P2_SOLVE.replace(
        "kind = \"p-laplacian\"", "kind = \"canonical\""))
    assert main(["validate-problem", "--config", cfg]) == 0
    text = capsys.readouterr().out
    assert "coercivity: PASS" in text
    assert "gradient consistency: PASS" in text
    assert "RESULT: PASS" in text


def test_solve_writes_solution_csvs(tmp_path, capsys):
    cfg = write(tmp_path, "p2.toml", P2_SOLVE)
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "RESULT: PASS" in text
    assert "dual norm bound: PASS" in text
    alpha_rows = (out / "p2_alpha.csv").read_text().strip().splitlines()
    assert alpha_rows[0] == "index,alpha"
    assert len(alpha_rows) == 16  # 15 interior nodes
    u = read_field_csv(out / "p2_u.csv")
    grad = read_field_csv(out / "p2_grad.csv")
    assert u.values.shape[0] == grad.values.shape[0] == 16 * 3
    # the discrete solution tracks sin(pi x) at quadrature points
    assert np.max(np.abs(u.values - np.sin(np.pi * u.points[:, 0]))) < 5e-3


def test_quiet_mode_prints_only_the_result(tmp_path, capsys):
    cfg = write(tmp_path, "p2.toml", P2_SOLVE)
    assert main(["solve", "--config", cfg, "--quiet"]) == 0
    assert capsys.readouterr().out == "RESULT: PASS\n"


def test_converge_writes_study_tables(tmp_path, capsys):
    cfg = write(tmp_path, "conv.toml", converge_config())
    out = tmp_path / "out"
    assert main(["converge", "--config", cfg, "--out", str(out)]) == 0
    assert "RESULT: PASS" in capsys.readouterr().out
    for suffix in ("levels", "modular", "weak", "truncation"):
        assert (out / f"p2_{suffix}.csv").is_file()
    levels = (out / "p2_levels.csv").read_text().strip().splitlines()
    assert len(levels) == 4
    modular = (out / "p2_modular.csv").read_text().strip().splitlines()
    assert len(modular) == 1 + 2 * 4
    # distances shrink from the first ladder rung to the second
    first = float(modular[1].rsplit(",", 1)[1])
    second = float(modular[5].rsplit(",", 1)[1])
    assert second < first


def test_unique_probe_confirms_agreement(tmp_path, capsys):
    cfg = write(tmp_path, "uq.toml", UNIQUE)
    out = tmp_path / "out"
    assert main(["unique-probe", "--config", cfg, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "RESULT: PASS" in text
    assert "principal_nonnegative=True" in text
    rows = (out / "uq_uniqueness.csv").read_text().strip().splitlines()
    assert rows[0] == "delta,principal,convection,zero_order,band_grad_l1"
    assert len(rows) == 4


def test_unique_probe_needs_a_strict_zero_order_term(tmp_path, capsys):
    cfg_text = UNIQUE.replace("kind = \"arctan\"", "kind = \"zero\"")
    assert main(["unique-probe", "--config",
                 write(tmp_path, "uqz.toml", cfg_text)]) == 2
    assert "strictly increasing" in capsys.readouterr().err


def test_starved_solver_exits_three(tmp_path, capsys):
    cfg_text = """
[domain]
kind = "interval"

[nfunction]
family = "constant-power"
p = 3.0

[operator]
kind = "p-laplacian"

[source]
kind = "signed-power"
const = 1.0
slope = -2.0
power = 2.0

[mesh]
resolution = 8

[solver]
max_iterations = 1
fallback_max_iterations = 2
"""
    assert main(["solve", "--config", write(tmp_path, "p3.toml", cfg_text)]) == 3
    err = capsys.readouterr().err
    assert "solver did not converge" in err
    assert "best residual seen" in err


# ---------------------------------------------------------------------------
# Reproducibility
# ---------------------------------------------------------------------------


def run_twice(tmp_path, command, cfg_text, names):
    cfg = write(tmp_path, "cfg.toml", cfg_text)
    outs = []
    for tag in ("one", "two"):
        out = tmp_path / tag
        main([command, "--config", cfg, "--out", str(out), "--quiet"])
        outs.append(out)
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


def test_solve_reruns_are_byte_identical(tmp_path):
    run_twice(tmp_path, "solve", P2_SOLVE,
              ["p2_alpha.csv", "p2_u.csv", "p2_grad.csv"])


def test_converge_reruns_are_byte_identical(tmp_path):
    run_twice(tmp_path, "converge", converge_config(),
              ["p2_levels.csv", "p2_modular.csv", "p2_weak.csv",
               "p2_truncation.csv"])


def test_margin_reruns_are_byte_identical(tmp_path):
    run_twice(tmp_path, "check-nfunction", BAD_BALANCE, ["dp_margins.csv"])

"""TOML-driven command line: checks, solves and sequence studies.

    musielak COMMAND --config RUN.toml [--out DIR] [--seed N] [--quiet]

Commands
    check-nfunction   Young validation, Fenchel-Young and biconjugation
    check-balance     ball-balance condition probe (optionally a scan)
    validate-problem  structural assumptions of (A, Phi, b, F)
    solve             one Galerkin solve with lemma diagnostics
    converge          resolution ladder with sequence diagnostics
    unique-probe      two-start solve and the uniqueness band terms

Exit codes: 0 all checks passed, 1 a check failed or a witness was
found, 2 configuration error, 3 solver non-convergence. All floats in
CSV output are written with repr-faithful precision so identical
configurations reproduce identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .balance import BalanceProbe, check_balance, smallest_passing_cm
from .fem import BasisSet, UnsupportedDomain, build_domain, build_mesh
from .galerkin import (GalerkinSystem, NotConverged, SolverSettings,
                       convergence_study, solve_galerkin, uniqueness_probe)
from .modular import write_field_csv
from .nfunction import (AffineCoefficient, AnisotropicDoublePhase,
                        AnisotropicVariable, ConstantPower, ConstructionFailure,
                        DoublePhase, ExpGrowth, VariableExponent,
                        check_biconjugation, check_fenchel_young,
                        sample_vectors, validate_young)
from .problem import (b_catalog, canonical_operator, check_gradient_consistency,
                      p_laplacian_operator, phi_catalog, source_catalog,
                      validate_structure)


class ConfigError(ValueError):
    """A configuration file problem; reported with its key path."""


def _fmt(v):
    return "%.17g" % float(v)


_SECTION_KEYS = {
    "domain": {"kind", "lo", "hi"},
    "nfunction": {"family", "dim", "p", "q", "scale", "scale_p", "scale_q",
                  "exponent", "exponents", "weight", "weights", "bounds",
                  "holder_alpha", "ps", "qs"},
    "operator": {"kind", "eps", "sample_budget", "seed"},
    "phi": {"kind", "scale"},
    "b": {"kind", "scale", "dead_zone"},
    "source": {"kind", "amplitude", "mode", "const", "slope", "power", "axis"},
    "mesh": {"resolution", "resolutions"},
    "solver": {"max_iterations", "residual_tol", "fd_step", "damping_min",
               "warm_start", "fallback_max_iterations", "sphere_samples",
               "sphere_growths", "seed"},
    "probe": {"c_m", "ball_count", "radius_schedule", "xi_per_ball",
              "x_samples", "y_samples", "refine_steps", "scan", "schedule",
              "samples", "tol", "seed"},
    "study": {"lambdas", "truncation_levels", "weak_modes"},
    "uniqueness": {"deltas"},
    "output": {"prefix"},
}


def load_config(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"no such config file: {path}")
    try:
        with open(p, "rb") as fh:
            cfg = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    for section, table in cfg.items():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"section [{section}] must be a table")
        extra = set(table) - _SECTION_KEYS[section]
        if extra:
            raise ConfigError(
                f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}")
    return cfg


def _need(table, key, section):
    if key not in table:
        raise ConfigError(f"missing required key '{key}' in [{section}]")
    return table[key]


def _affine(spec, space_dim, path):
    """Affine coefficient from a number or a {const, slope} table."""
    if isinstance(spec, (int, float)):
        return AffineCoefficient(float(spec), (0.0,) * space_dim)
    if not isinstance(spec, dict):
        raise ConfigError(f"{path} must be a number or a {{const, slope}} table")
    const = float(spec.get("const", 0.0))
    slope = spec.get("slope", 0.0)
    if isinstance(slope, (int, float)):
        slope = (float(slope),) * space_dim
    else:
        slope = tuple(float(s) for s in slope)
        if len(slope) != space_dim:
            raise ConfigError(f"{path}.slope needs {space_dim} entries")
    return AffineCoefficient(const, slope)


def build_domain_from(cfg):
    sec = cfg.get("domain", {})
    try:
        return build_domain(sec.get("kind", "interval"), sec.get("lo"), sec.get("hi"))
    except UnsupportedDomain as exc:
        raise ConfigError(f"[domain]: {exc}") from exc


def build_nfunction_from(cfg, domain):
    sec = cfg.get("nfunction")
    if sec is None:
        raise ConfigError("missing section [nfunction]")
    family = _need(sec, "family", "nfunction")
    dim = int(sec.get("dim", domain.dim))
    sd = domain.dim
    try:
        if family == "constant-power":
            return ConstantPower(float(_need(sec, "p", "nfunction")), dim=dim,
                                 scale=float(sec.get("scale", 1.0)), domain=domain)
        if family == "variable-exponent":
            bounds = sec.get("bounds")
            return VariableExponent(
                _affine(_need(sec, "exponent", "nfunction"), sd, "nfunction.exponent"),
                domain, dim=dim,
                bounds=tuple(float(b) for b in bounds) if bounds else None)
        if family == "double-phase":
            return DoublePhase(
                float(_need(sec, "p", "nfunction")), float(_need(sec, "q", "nfunction")),
                _affine(_need(sec, "weight", "nfunction"), sd, "nfunction.weight"),
                domain, dim=dim, holder_alpha=float(sec.get("holder_alpha", 1.0)),
                scale_p=float(sec.get("scale_p", 1.0)),
                scale_q=float(sec.get("scale_q", 1.0)))
        if family == "anisotropic-variable":
            exps = _need(sec, "exponents", "nfunction")
            return AnisotropicVariable(
                [_affine(e, sd, f"nfunction.exponents[{i}]") for i, e in enumerate(exps)],
                domain)
        if family == "anisotropic-double-phase":
            ws = _need(sec, "weights", "nfunction")
            return AnisotropicDoublePhase(
                [float(p) for p in _need(sec, "ps", "nfunction")],
                [float(q) for q in _need(sec, "qs", "nfunction")],
                [_affine(w, sd, f"nfunction.weights[{i}]") for i, w in enumerate(ws)],
                domain, holder_alpha=float(sec.get("holder_alpha", 1.0)))
        if family == "custom-exp":
            return ExpGrowth(dim=dim, domain=domain)
    except ConstructionFailure as exc:
        raise ConfigError(f"[nfunction]: {exc}") from exc
    raise ConfigError(f"unknown nfunction family '{family}'")


def build_operator_from(cfg, nf, domain, seed):
    sec = cfg.get("operator", {})
    kind = sec.get("kind", "canonical")
    eps = sec.get("eps")
    try:
        if kind == "canonical":
            return canonical_operator(nf, eps=float(eps) if eps is not None else None,
                                      domain=domain,
                                      rng=np.random.default_rng(int(sec.get("seed", seed))),
                                      sample_budget=int(sec.get("sample_budget", 400)))
        if kind == "p-laplacian":
            return p_laplacian_operator(nf, eps=float(eps) if eps is not None else 0.0)
    except ConstructionFailure as exc:
        raise ConfigError(f"[operator]: {exc}") from exc
    raise ConfigError(f"unknown operator kind '{kind}'")


def build_terms_from(cfg, dim):
    psec = cfg.get("phi", {})
    bsec = cfg.get("b", {})
    ssec = cfg.get("source", {})
    try:
        phi = phi_catalog(psec.get("kind", "zero"), dim,
                          scale=float(psec.get("scale", 0.1)))
        b = b_catalog(bsec.get("kind", "zero"), scale=float(bsec.get("scale", 1.0)),
                      dead_zone=float(bsec.get("dead_zone", 1.0)))
        src = {k: v for k, v in ssec.items() if k != "kind"}
        F = source_catalog(ssec.get("kind", "zero"), dim, **src)
    except ConstructionFailure as exc:
        raise ConfigError(f"problem terms: {exc}") from exc
    return phi, b, F


def build_settings_from(cfg, seed):
    sec = cfg.get("solver", {})
    st = SolverSettings()
    st.max_iterations = int(sec.get("max_iterations", st.max_iterations))
    st.residual_tol = float(sec.get("residual_tol", st.residual_tol))
    st.fd_step = float(sec.get("fd_step", st.fd_step))
    st.damping_min = float(sec.get("damping_min", st.damping_min))
    st.warm_start = str(sec.get("warm_start", st.warm_start))
    if st.warm_start not in ("linear", "zero"):
        raise ConfigError("[solver].warm_start must be 'linear' or 'zero'")
    st.fallback_max_iterations = int(sec.get("fallback_max_iterations",
                                             st.fallback_max_iterations))
    st.sphere_samples = int(sec.get("sphere_samples", st.sphere_samples))
    st.sphere_growths = int(sec.get("sphere_growths", st.sphere_growths))
    st.seed = int(sec.get("seed", seed))
    return st


def build_system_from(cfg, seed, resolution=None):
    domain = build_domain_from(cfg)
    nf = build_nfunction_from(cfg, domain)
    if nf.dim != domain.dim:
        raise ConfigError(
            f"nfunction dim {nf.dim} must match domain dim {domain.dim} for solves")
    A = build_operator_from(cfg, nf, domain, seed)
    phi, b, F = build_terms_from(cfg, nf.dim)
    if resolution is None:
        resolution = int(_need(cfg.get("mesh", {}), "resolution", "mesh"))
    try:
        mesh = build_mesh(domain, resolution)
    except (UnsupportedDomain, ValueError) as exc:
        raise ConfigError(f"[mesh]: {exc}") from exc
    basis = BasisSet(mesh)
    return GalerkinSystem(basis, A, phi, b, F, settings=build_settings_from(cfg, seed))


class Reporter:
    def __init__(self, quiet):
        self.quiet = quiet

    def line(self, text=""):
        if not self.quiet:
            print(text)

    def result(self, passed):
        print("RESULT: %s" % ("PASS" if passed else "FAIL"))
        return 0 if passed else 1


def _outdir(args):
    if args.out is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _prefix(cfg):
    return cfg.get("output", {}).get("prefix", "run")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check_nfunction(cfg, args, rep):
    domain = build_domain_from(cfg)
    nf = build_nfunction_from(cfg, domain)
    probe = cfg.get("probe", {})
    samples = int(probe.get("samples", 128))
    tol = float(probe.get("tol", 1e-10))
    seed = args.seed if args.seed is not None else int(probe.get("seed", 0))
    rng = np.random.default_rng(seed)
    rep.line(f"check-nfunction family={nf.family} dim={nf.dim} space_dim={nf.space_dim}")
    ok = True
    for label, young in (("m1", nf.m1), ("m2", nf.m2)):
        yr = validate_young(young)
        ok &= yr.passed
        rep.line(f"  young {label}: {'PASS' if yr.passed else 'FAIL'}"
                 + ("" if yr.passed else f" ({'; '.join(yr.failures)})"))
    X = domain.sample(samples, rng)
    XI = sample_vectors(nf.dim, samples, rng)
    ETA = sample_vectors(nf.dim, samples, rng)
    fy = check_fenchel_young(nf, X, XI, ETA, tol=tol)
    ok &= fy.passed
    rep.line(f"  fenchel-young: {'PASS' if fy.passed else 'FAIL'} "
             f"worst margin {fy.worst:.3e} ({samples} samples)")
    nbi = max(8, samples // 4)
    bi = check_biconjugation(nf, X[:nbi], XI[:nbi])
    ok &= bi.passed
    rep.line(f"  biconjugation: {'PASS' if bi.passed else 'FAIL'} "
             f"worst gap {bi.worst:.3e} ({nbi} samples)")
    out = _outdir(args)
    if out is not None:
        sx, d = domain.dim, nf.dim
        header = ([f"x{i+1}" for i in range(sx)] + [f"xi{i+1}" for i in range(d)]
                  + [f"eta{i+1}" for i in range(d)] + ["margin"])
        rows = [[_fmt(v) for v in (*x, *xi, *eta, m)]
                for x, xi, eta, m in zip(X, XI, ETA, fy.margins)]
        _write_rows(out / f"{_prefix(cfg)}_margins.csv", header, rows)
    return rep.result(ok)


def _probe_from(cfg, seed):
    sec = cfg.get("probe", {})
    kw = {}
    if "c_m" in sec:
        kw["c_m"] = float(sec["c_m"])
    for key in ("ball_count", "xi_per_ball", "x_samples", "y_samples",
                "refine_steps"):
        if key in sec:
            kw[key] = int(sec[key])
    if "radius_schedule" in sec:
        kw["radius_schedule"] = tuple(float(r) for r in sec["radius_schedule"])
    try:
        probe = BalanceProbe(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[probe]: {exc}") from exc
    return probe, int(sec.get("seed", seed))


def cmd_check_balance(cfg, args, rep):
    domain = build_domain_from(cfg)
    nf = build_nfunction_from(cfg, domain)
    seed = args.seed if args.seed is not None else 0
    probe, seed = _probe_from(cfg, seed)
    sec = cfg.get("probe", {})
    out = _outdir(args)
    if sec.get("scan", False):
        schedule = tuple(float(c) for c in sec.get("schedule", (2.0, 4.0, 8.0, 16.0)))
        scan = smallest_passing_cm(nf, schedule=schedule, probe=probe, seed=seed)
        for cm in schedule:
            r = scan.reports[cm]
            rep.line(f"  c_m={cm:g}: {'PASS' if r.passed else 'FAIL'} "
                     f"({len(r.witnesses)} witnesses, {r.pairs_tested} pairs)")
        if scan.smallest_passing is None:
            rep.line("  no constant in the schedule passes")
            return rep.result(False)
        rep.line(f"  smallest passing constant: {scan.smallest_passing:g}")
        report = scan.reports[scan.smallest_passing]
    else:
        report = check_balance(nf, probe, seed=seed)
        margin = report.prescreen_margin
        if margin is not None:
            rep.line(f"  exponent gap pre-screen margin: {margin:.3e} "
                     f"({'holds' if margin >= 0 else 'violated'})")
        rep.line(f"  c_m={report.c_m:g}: {'PASS' if report.passed else 'FAIL'} "
                 f"({report.balls_tested} balls, {report.pairs_tested} pairs, "
                 f"{report.empty_windows} empty windows)")
        for note in report.notes:
            rep.line(f"  note: {note}")
    for w in report.witnesses[:5]:
        rep.line(f"  witness: |xi|={np.linalg.norm(w.xi):.4g} target={w.target:.6g} "
                 f"sup={w.sup_value:.6g} excess={w.excess:.3e}")
    if out is not None and report.witnesses:
        sx, d = domain.dim, nf.dim
        header = ([f"center{i+1}" for i in range(sx)] + ["radius"]
                  + [f"x{i+1}" for i in range(sx)] + [f"xi{i+1}" for i in range(d)]
                  + ["target", "sup_value"])
        rows = [[_fmt(v) for v in (*w.center, w.radius, *w.x, *w.xi, w.target, w.sup_value)]
                for w in report.witnesses]
        _write_rows(out / f"{_prefix(cfg)}_witnesses.csv", header, rows)
    return rep.result(report.passed)


def cmd_validate_problem(cfg, args, rep):
    domain = build_domain_from(cfg)
    nf = build_nfunction_from(cfg, domain)
    seed = args.seed if args.seed is not None else 0
    A = build_operator_from(cfg, nf, domain, seed)
    phi, b, F = build_terms_from(cfg, nf.dim)
    rep.line(f"validate-problem family={nf.family} operator={A.description}")
    rep.line(f"  constants c1={A.c1:g} c2={A.c2:g} c3={A.c3:g} c4={A.c4:g} eps={A.eps:g}")
    resolution = int(cfg.get("mesh", {}).get("resolution", 16))
    try:
        basis = BasisSet(build_mesh(domain, resolution))
    except (UnsupportedDomain, ValueError) as exc:
        raise ConfigError(f"[mesh]: {exc}") from exc
    report = validate_structure(A, phi, b, F, domain,
                                rng=np.random.default_rng(seed),
                                quad=(basis.quad_points, basis.quad_weights))
    for name, chk in report.checks.items():
        rep.line(f"  {name}: {'PASS' if chk['ok'] else 'FAIL'} margin={chk['margin']:.3e}")
    grad_ok, worst = check_gradient_consistency(A, domain,
                                                rng=np.random.default_rng(seed))
    rep.line(f"  gradient consistency: {'PASS' if grad_ok else 'FAIL'} "
             f"worst rel err={worst:.3e}")
    return rep.result(report.passed and grad_ok)


def _print_solution(rep, sol):
    rep.line(f"  iterations={sol.iterations} residual_inf={sol.residual_inf:.3e} "
             f"fallback={sol.used_fallback}")
    e = sol.energy
    rep.line(f"  pairings: A={e.energy_pairing:.6g} Phi={e.convection_pairing:.3e} "
             f"b={e.zero_order_pairing:.6g} F={e.source_pairing:.6g}")
    rep.line(f"  C0={e.c0:.6g} modular(c1 grad)={e.coercivity_modular:.6g} "
             f"|grad|_LM={e.gradient_norm:.6g} defect={e.identity_defect:.3e}")
    for name, bd in e.bounds.items():
        rep.line(f"  energy bound {name}: {'PASS' if bd['ok'] else 'FAIL'} "
                 f"{bd['value']:.6g} <= {bd['bound']:.6g}")
    d = sol.dual
    rep.line(f"  dual norm bound: {'PASS' if d.passed else 'FAIL'} "
             f"{d.stress_norm:.6g} <= {d.bound:.6g}")
    o = sol.convection_orthogonality
    rep.line(f"  convection orthogonality: {'PASS' if o.passed else 'FAIL'} "
             f"|{o.value:.3e}| <= {o.tolerance:.3e}")


def _solution_ok(sol):
    return (sol.converged and sol.energy.passed and sol.dual.passed
            and sol.convection_orthogonality.passed)


def cmd_solve(cfg, args, rep):
    seed = args.seed if args.seed is not None else 0
    system = build_system_from(cfg, seed)
    rep.line(f"solve n={system.n} h={system.basis.mesh.h:g} "
             f"family={system.nfunction.family}")
    sol = solve_galerkin(system)
    _print_solution(rep, sol)
    out = _outdir(args)
    if out is not None:
        prefix = _prefix(cfg)
        _write_rows(out / f"{prefix}_alpha.csv", ["index", "alpha"],
                    [[i, _fmt(a)] for i, a in enumerate(sol.alpha)])
        write_field_csv(sol.u_field, out / f"{prefix}_u.csv")
        write_field_csv(sol.grad_field, out / f"{prefix}_grad.csv")
    return rep.result(_solution_ok(sol))


def cmd_converge(cfg, args, rep):
    seed = args.seed if args.seed is not None else 0
    mesh_sec = cfg.get("mesh", {})
    resolutions = mesh_sec.get("resolutions")
    if not resolutions:
        raise ConfigError("converge needs [mesh].resolutions")
    resolutions = [int(r) for r in resolutions]
    study_sec = cfg.get("study", {})
    lambdas = tuple(float(v) for v in study_sec.get("lambdas", (1.0, 2.0, 4.0, 8.0)))
    trunc = tuple(float(v) for v in study_sec.get("truncation_levels",
                                                  (1.0, 2.0, 4.0, 8.0, 16.0)))
    modes = int(study_sec.get("weak_modes", 5))

    def make_system(res):
        return build_system_from(cfg, seed, resolution=res)

    study = convergence_study(make_system, resolutions, lambdas=lambdas,
                              truncation_levels=trunc, weak_modes=modes)
    for lv in study.levels:
        rep.line(f"  res={lv.resolution} n={lv.n} h={lv.h:.4g} it={lv.iterations} "
                 f"residual={lv.residual_inf:.2e} "
                 f"|weak|max={np.max(np.abs(lv.weak_residuals)):.3e}")
    for i in range(study.modular_table.shape[0]):
        cells = "  ".join(f"{v:.3e}" for v in study.modular_table[i])
        rep.line(f"  modular dist {study.levels[i].resolution}->"
                 f"{study.levels[i+1].resolution}: {cells}")
    rep.line("  truncation distances: "
             + "  ".join(f"{v:.3e}" for v in study.truncation_distances))
    rep.line(f"  flags: modular_nonincreasing={study.modular_nonincreasing} "
             f"weak_decrease={study.weak_residuals_decrease} "
             f"trunc_nonincreasing={study.truncation_nonincreasing} "
             f"trunc_vanishes={study.truncation_vanishes}")
    out = _outdir(args)
    if out is not None:
        prefix = _prefix(cfg)
        _write_rows(
            out / f"{prefix}_levels.csv",
            ["resolution", "n", "h", "iterations", "residual_inf",
             "energy_pairing", "coercivity_modular", "gradient_norm",
             "dual_norm", "dual_bound"],
            [[lv.resolution, lv.n, _fmt(lv.h), lv.iterations, _fmt(lv.residual_inf),
              _fmt(lv.energy.energy_pairing), _fmt(lv.energy.coercivity_modular),
              _fmt(lv.energy.gradient_norm), _fmt(lv.dual.stress_norm),
              _fmt(lv.dual.bound)] for lv in study.levels])
        _write_rows(
            out / f"{prefix}_modular.csv",
            ["res_coarse", "res_fine", "lambda", "distance"],
            [[study.levels[i].resolution, study.levels[i + 1].resolution,
              _fmt(lam), _fmt(study.modular_table[i, j])]
             for i in range(study.modular_table.shape[0])
             for j, lam in enumerate(lambdas)])
        _write_rows(
            out / f"{prefix}_weak.csv",
            ["resolution", "mode", "residual"],
            [[lv.resolution, k + 1, _fmt(r)]
             for lv in study.levels for k, r in enumerate(lv.weak_residuals)])
        _write_rows(
            out / f"{prefix}_truncation.csv",
            ["level", "distance"],
            [[_fmt(k), _fmt(v)]
             for k, v in zip(study.truncation_levels, study.truncation_distances)])
    ok = (study.modular_nonincreasing and study.weak_residuals_decrease
          and study.truncation_nonincreasing and study.truncation_vanishes
          and all(_solution_ok(s) for s in study.solutions))
    return rep.result(ok)


def cmd_unique_probe(cfg, args, rep):
    seed = args.seed if args.seed is not None else 0
    deltas = tuple(float(d) for d in cfg.get("uniqueness", {}).get(
        "deltas", (0.5, 0.1, 0.02)))
    system = build_system_from(cfg, seed)
    import dataclasses
    other = build_system_from(cfg, seed)
    other.settings = dataclasses.replace(
        other.settings,
        warm_start="zero" if system.settings.warm_start == "linear" else "linear")
    sol_a = solve_galerkin(system)
    sol_b = solve_galerkin(other)
    gap = float(np.max(np.abs(sol_a.alpha - sol_b.alpha))) if sol_a.alpha.size else 0.0
    rep.line(f"unique-probe n={system.n} starts=({system.settings.warm_start}, "
             f"{other.settings.warm_start}) coefficient gap={gap:.3e}")
    try:
        probe = uniqueness_probe(system, sol_a, sol_b, deltas=deltas)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for i, delta in enumerate(probe.deltas):
        rep.line(f"  delta={delta:g}: principal={probe.principal_part[i]:.3e} "
                 f"convection={probe.convection_part[i]:.3e} "
                 f"zero_order={probe.zero_order_part[i]:.3e} "
                 f"band|grad|_1={probe.band_gradient_l1[i]:.3e}")
    rep.line(f"  sup|u1-u2|={probe.sup_diff:.3e} L1 diff={probe.l1_diff:.3e}")
    rep.line(f"  flags: principal_nonnegative={probe.principal_nonnegative} "
             f"convection_dominated={probe.convection_dominated} "
             f"convection_fades={probe.convection_fades}")
    out = _outdir(args)
    if out is not None:
        _write_rows(
            out / f"{_prefix(cfg)}_uniqueness.csv",
            ["delta", "principal", "convection", "zero_order", "band_grad_l1"],
            [[_fmt(probe.deltas[i]), _fmt(probe.principal_part[i]),
              _fmt(probe.convection_part[i]), _fmt(probe.zero_order_part[i]),
              _fmt(probe.band_gradient_l1[i])] for i in range(len(probe.deltas))])
    ok = (probe.principal_nonnegative and probe.convection_dominated
          and probe.convection_fades)
    return rep.result(ok)


_COMMANDS = {
    "check-nfunction": cmd_check_nfunction,
    "check-balance": cmd_check_balance,
    "validate-problem": cmd_validate_problem,
    "solve": cmd_solve,
    "converge": cmd_converge,
    "unique-probe": cmd_unique_probe,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="musielak",
        description="Musielak-Orlicz N-function checks and Galerkin solves")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--out", default=None, help="directory for CSV output")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured random seed")
        p.add_argument("--quiet", action="store_true",
                       help="print only the RESULT line")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    rep = Reporter(args.quiet)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](cfg, args, rep)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NotConverged as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        if exc.history:
            print(f"best residual seen: {min(exc.history):.3e} "
                  f"over {len(exc.history)} evaluations", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

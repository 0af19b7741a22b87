"""End-to-end acceptance suite: one test per shipped guarantee.

Each test prints a single `criterion N ... PASS` line on success (visible
with `pytest -v -s`); the pytest verdict itself is the pass/fail record.
Stated runtime budgets are asserted with wall-clock timers.
"""

import time

import numpy as np
import pytest
from scipy.integrate import simpson
from scipy.linalg import solve_banded

from musielak import (AffineCoefficient, AnisotropicVariable, BalanceProbe,
                      BasisSet, ConjugateEvaluator, ConstantPower,
                      DiscreteField, DoublePhase, GalerkinSystem, LowerOrderB,
                      VariableExponent, b_catalog, build_mesh,
                      canonical_operator, check_balance, check_biconjugation,
                      check_fenchel_young, check_gradient_consistency,
                      convergence_study, luxemburg_norm, p_laplacian_operator,
                      phi_catalog, sample_vectors, solve_galerkin,
                      source_catalog, uniqueness_probe, validate_structure)
from musielak.cli import main
from conftest import INTERVAL, SQUARE, FAMILY_IDS, catalog_families


def stamp(n, label, detail):
    print(f"criterion {n} ({label}): PASS [{detail}]")


def interval_system(resolution, p=2.0, scale=None, F=None, phi=None, b=None,
                    settings=None):
    kw = {} if scale is None else {"scale": scale}
    nf = ConstantPower(p=p, dim=1, domain=INTERVAL, **kw)
    basis = BasisSet(build_mesh(INTERVAL, resolution))
    return GalerkinSystem(basis, p_laplacian_operator(nf),
                          phi or phi_catalog("zero", 1),
                          b or b_catalog("zero"),
                          F or source_catalog("zero", 1), settings)


def sine_source():
    return source_catalog("trig", 1, amplitude=[np.pi], mode=[1])


def p3_picard_oracle(resolution, theta=0.7, dense=801):
    """Dense-grid damped Picard fixed point for the p = 3 problem,
    independent of the package assembly."""
    h = 1.0 / resolution
    cell_load = np.zeros(resolution)
    for i in range(resolution):
        xs = np.linspace(i * h, (i + 1) * h, dense)
        t = 1.0 - 2.0 * xs
        cell_load[i] = simpson(np.abs(t) * t, x=xs)
    rhs = (cell_load[:-1] - cell_load[1:]) / h
    n = resolution - 1

    def tri_solve(a):
        ab = np.zeros((3, n))
        ab[1] = (a[:-1] + a[1:]) / h
        ab[0, 1:] = -a[1:-1] / h
        ab[2, :-1] = -a[1:-1] / h
        return solve_banded((1, 1), ab, rhs)

    alpha = tri_solve(np.ones(resolution))
    for _ in range(500):
        pad = np.concatenate([[0.0], alpha, [0.0]])
        new = theta * tri_solve(np.abs(np.diff(pad) / h)) + (1.0 - theta) * alpha
        if np.max(np.abs(new - alpha)) < 1e-13:
            return new
        alpha = new
    return alpha


def test_criterion_1_convex_duality_suite():
    start = time.perf_counter()
    closed_form_families = 0
    for idx, nf in enumerate(catalog_families()):
        rng = np.random.default_rng(1000 + idx)
        X = SQUARE.sample(100, rng)
        XI = sample_vectors(nf.dim, 100, rng)
        ETA = sample_vectors(nf.dim, 100, rng)
        fy = check_fenchel_young(nf, X, XI, ETA)
        assert fy.passed, (FAMILY_IDS[idx], fy.violations[:3])
        assert fy.worst >= -1e-10, (FAMILY_IDS[idx], fy.worst)
        bc = check_biconjugation(nf, X, XI)
        assert bc.passed, (FAMILY_IDS[idx], bc.worst)
        assert bc.worst <= 1e-5, (FAMILY_IDS[idx], bc.worst)
        closed = nf.closed_form_conjugate(X, ETA)
        if closed is not None:
            closed_form_families += 1
            numeric = ConjugateEvaluator(nf, use_closed_form=False).value_batch(X, ETA)
            dev = np.max(np.abs(numeric - closed) / np.maximum(1.0, np.abs(closed)))
            assert dev <= 1e-6, (FAMILY_IDS[idx], dev)
    assert closed_form_families >= 4
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, elapsed
    stamp(1, "convex duality", f"6 families x 100 samples, {elapsed:.1f}s")


def test_criterion_2_luxemburg_oracle():
    basis = BasisSet(build_mesh(INTERVAL, 16))
    pts, w = basis.quad_points, basis.quad_weights
    worst = 0.0
    for p in (1.5, 2.0, 3.0, 4.0):
        nf = ConstantPower(p=p, dim=1, domain=INTERVAL)
        for c in (0.25, 1.0, 2.0, 3.7):
            # modular of the constant field c at scale lam is (c/lam)^p,
            # so the Luxemburg norm is exactly c on the unit interval
            field = DiscreteField(pts, w, np.full(pts.shape[0], c))
            err = abs(luxemburg_norm(nf, field) - c)
            worst = max(worst, err)
            assert err <= 1e-9, (p, c, err)
    nf = ConstantPower(p=2.5, dim=1, domain=INTERVAL)
    rng = np.random.default_rng(7)
    for _ in range(50):
        f = rng.normal(size=pts.shape[0]) * rng.uniform(0.1, 3.0)
        g = rng.normal(size=pts.shape[0]) * rng.uniform(0.1, 3.0)
        nf_f = luxemburg_norm(nf, DiscreteField(pts, w, f))
        nf_g = luxemburg_norm(nf, DiscreteField(pts, w, g))
        scaled = luxemburg_norm(nf, DiscreteField(pts, w, 2.5 * f))
        assert abs(scaled - 2.5 * nf_f) <= 1e-8 * (1.0 + nf_f)
        nf_sum = luxemburg_norm(nf, DiscreteField(pts, w, f + g))
        assert nf_sum <= nf_f + nf_g + 1e-8
    stamp(2, "Luxemburg oracle", f"closed-form worst {worst:.1e}, 50 axiom pairs")


def test_criterion_3_balance_examples():
    start = time.perf_counter()
    probe = BalanceProbe(c_m=2.0, ball_count=12, xi_per_ball=32, x_samples=4,
                         y_samples=48, refine_steps=10)
    passing = [
        ("constant-power", ConstantPower(p=2.5, dim=2, domain=SQUARE)),
        ("variable-exponent",
         VariableExponent(AffineCoefficient(2.0, (0.5, 0.5)), SQUARE)),
        ("anisotropic-variable",
         AnisotropicVariable([AffineCoefficient(2.0, (0.3, 0.3)),
                              AffineCoefficient(3.0, (-0.5, -0.5))], SQUARE)),
    ]
    for name, nf in passing:
        report = check_balance(nf, probe)
        assert report.passed, name
        assert report.witnesses == [], name
    # q/p = 2 exceeds 1 + alpha/d = 1.5 for the affine weight in 2D
    violating = DoublePhase(2.0, 4.0, AffineCoefficient(0.0, (1.0, 0.0)), SQUARE)
    report = check_balance(violating, probe)
    assert not report.passed
    assert len(report.witnesses) >= 1
    assert report.prescreen_holds is False
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, elapsed
    stamp(3, "balance examples",
          f"3 pass clean, violator has {len(report.witnesses)} witnesses, {elapsed:.1f}s")


def test_criterion_4_structure_validators():
    phi = phi_catalog("trig", 2, scale=0.1)
    b = b_catalog("arctan")
    F = source_catalog("trig", 2, amplitude=[0.5, 0.5])
    basis = BasisSet(build_mesh(SQUARE, 4))
    quad = (basis.quad_points, basis.quad_weights)
    worst_fd = 0.0
    for idx, nf in enumerate(catalog_families()):
        A = canonical_operator(nf)
        report = validate_structure(A, phi, b, F, SQUARE, sample_budget=150,
                                    quad=quad)
        assert report.passed, (FAMILY_IDS[idx], report.violations)
        ok, worst = check_gradient_consistency(A, SQUARE, samples=100)
        assert ok and worst <= 1e-6, (FAMILY_IDS[idx], worst)
        worst_fd = max(worst_fd, worst)
    nf = ConstantPower(p=2.0, dim=2, scale=0.5, domain=SQUARE)
    bad = LowerOrderB(lambda X, S: -np.asarray(S, dtype=float))
    report = validate_structure(p_laplacian_operator(nf), phi, bad, F, SQUARE)
    assert not report.passed
    assert not report.checks["b nondecreasing"]["ok"]
    assert not report.checks["b sign condition"]["ok"]
    stamp(4, "structure validators",
          f"6 operators pass, FD worst {worst_fd:.1e}, broken b rejected")


def test_criterion_5_manufactured_convergence():
    start = time.perf_counter()
    errors = []
    hs = []
    for res in (8, 16, 32, 64):
        system = interval_system(res, scale=0.5, F=sine_source())
        sol = solve_galerkin(system, diagnostics=False)
        x = system.basis.quad_points[:, 0]
        diff = sol.u_field.values - np.sin(np.pi * x)
        errors.append(np.sqrt(system.basis.quad_weights @ diff**2))
        hs.append(1.0 / res)
    slope = np.polyfit(np.log(hs), np.log(errors), 1)[0]
    assert 1.8 <= slope <= 2.2, slope
    p3 = GalerkinSystem(BasisSet(build_mesh(INTERVAL, 32)),
                        p_laplacian_operator(ConstantPower(p=3.0, dim=1,
                                                           domain=INTERVAL)),
                        phi_catalog("zero", 1), b_catalog("zero"),
                        source_catalog("signed-power", 1, const=1.0,
                                       slope=-2.0, power=2.0))
    sol = solve_galerkin(p3, diagnostics=False)
    assert sol.converged
    gap = np.max(np.abs(sol.alpha - p3_picard_oracle(32)))
    assert gap <= 1e-6, gap
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, elapsed
    stamp(5, "manufactured solutions",
          f"L2 slope {slope:.3f}, p=3 oracle gap {gap:.1e}, {elapsed:.1f}s")


def test_criterion_6_lemma_diagnostics_at_every_solve():
    dp = DoublePhase(2.0, 3.0, AffineCoefficient(0.0, (1.0, 0.0)), SQUARE)
    solves = [
        interval_system(16, scale=0.5, F=sine_source()),
        interval_system(16, scale=0.5, F=sine_source(),
                        phi=phi_catalog("trig", 1, scale=0.1),
                        b=b_catalog("arctan")),
        interval_system(16, p=3.0, F=source_catalog("signed-power", 1,
                                                    const=1.0, slope=-2.0,
                                                    power=2.0)),
        GalerkinSystem(BasisSet(build_mesh(SQUARE, 4)), canonical_operator(dp),
                       phi_catalog("trig", 2, scale=0.1), b_catalog("arctan"),
                       source_catalog("trig", 2, amplitude=[1.0, 0.5],
                                      mode=[1, 2])),
    ]
    for k, system in enumerate(solves):
        sol = solve_galerkin(system)
        assert sol.converged, k
        assert sol.energy.passed, (k, sol.energy.bounds)
        for name in ("energy_pairing", "zero_order_pairing",
                     "coercivity_modular", "gradient_norm", "zero_order_sign"):
            assert sol.energy.bounds[name]["ok"], (k, name)
        orth = sol.convection_orthogonality
        assert orth.passed and abs(orth.value) <= orth.tolerance, k
        assert sol.energy.zero_order_pairing >= -1e-12, k
        assert sol.dual.passed and sol.dual.margin > 0.0, k
    stamp(6, "lemma diagnostics",
          f"{len(solves)} solves, all energy/orthogonality/sign/dual checks hold")


def test_criterion_7_double_phase_study():
    start = time.perf_counter()

    def dp_system(res):
        nf = DoublePhase(2.0, 3.0, AffineCoefficient(0.0, (1.0, 0.0)), SQUARE)
        basis = BasisSet(build_mesh(SQUARE, res))
        return GalerkinSystem(basis, canonical_operator(nf),
                              phi_catalog("trig", 2, scale=0.1),
                              b_catalog("arctan"),
                              source_catalog("trig", 2, amplitude=[1.0, 0.5],
                                             mode=[1, 2]))

    report = convergence_study(dp_system, (4, 8, 16))
    assert report.modular_nonincreasing
    assert np.all(report.modular_table[1] < report.modular_table[0])
    assert report.weak_residuals_decrease
    first = np.abs(report.levels[0].weak_residuals)
    last = np.abs(report.levels[-1].weak_residuals)
    assert np.all(last < first)
    for lvl in report.levels:
        assert lvl.energy.passed and lvl.dual.passed
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0, elapsed
    ratio = float(np.max(report.modular_table[1] / report.modular_table[0]))
    stamp(7, "double-phase study",
          f"modular contraction <= {ratio:.2f} per halving, {elapsed:.1f}s")


def test_criterion_8_uniqueness_probe():
    system = interval_system(16, scale=0.5, F=sine_source(),
                             phi=phi_catalog("trig", 1, scale=0.1),
                             b=b_catalog("arctan"))
    sol_a = solve_galerkin(system)
    rng = np.random.default_rng(11)
    sol_b = solve_galerkin(system, alpha0=sol_a.alpha + rng.normal(size=system.n))
    report = uniqueness_probe(system, sol_a, sol_b)
    assert report.sup_diff <= 1e-8, report.sup_diff
    assert report.deltas == (0.5, 0.1, 0.02)
    assert np.all(report.principal_part >= -1e-10)
    assert report.principal_nonnegative
    assert report.convection_dominated
    assert report.convection_fades
    stamp(8, "uniqueness probe",
          f"sup diff {report.sup_diff:.1e}, J1 min {report.principal_part.min():.1e}")


def test_criterion_9_reproducibility(tmp_path):
    cfg_text = """
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
amplitude = [3.141592653589793]
mode = [1]

[mesh]
resolutions = [4, 8, 16]

[output]
prefix = "rep"
"""
    cfg = tmp_path / "rep.toml"
    cfg.write_text(cfg_text)
    outs = []
    for tag in ("one", "two"):
        out = tmp_path / tag
        code = main(["converge", "--config", str(cfg), "--out", str(out),
                     "--seed", "7", "--quiet"])
        assert code == 0
        outs.append(out)
    names = ["rep_levels.csv", "rep_modular.csv", "rep_weak.csv",
             "rep_truncation.csv"]
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    stamp(9, "reproducibility", f"{len(names)} CSVs byte-identical across reruns")

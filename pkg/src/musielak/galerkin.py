"""Galerkin residuals, the damped-Newton solver and solution probes.

For a P1 hat basis {w_j} the residual of the coefficient vector alpha
is

    s_j(alpha) = int_Omega [ A(x, grad u) + Phi(u) - F ] . grad w_j
                 + b(x, u) w_j dx,       u = sum_k alpha_k w_k.

A zero of s is a discrete solution. The solver runs damped Newton with
a central finite-difference Jacobian and falls back to projected
gradient descent on |s|^2 inside a ball certified by the sign condition
s(alpha) . alpha >= 0 on its sphere. Every solve evaluates the energy
bookkeeping and dual-norm diagnostics that mirror the a-priori bounds
of the continuous theory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .modular import luxemburg_norm, modular, modular_distance, truncate_pair
from .nfunction import ConjugateEvaluator, ConjugateIntegrand


class NonfiniteIntegrand(RuntimeError):
    """The assembled residual contains NaN or infinity."""


class NotConverged(RuntimeError):
    """Solver budget exhausted; carries the best iterate and history."""

    def __init__(self, message, alpha, history):
        super().__init__(message)
        self.alpha = alpha
        self.history = history


@dataclass
class SolverSettings:
    max_iterations: int = 40
    residual_tol: float = 1e-10
    fd_step: float = 1e-6
    damping_min: float = 2.0**-14
    warm_start: str = "linear"  # "linear" or "zero"
    fallback_max_iterations: int = 500
    sphere_samples: int = 64
    sphere_growths: int = 40
    seed: int = 0


class GalerkinSystem:
    """Problem data bound to a basis: everything the residual needs."""

    def __init__(self, basis, A, phi, b, F, settings=None):
        self.basis = basis
        self.A = A
        self.phi = phi
        self.b = b
        self.F = F
        self.settings = settings or SolverSettings()
        self.X = basis.quad_points
        self.weights = basis.quad_weights
        self.F_vals = F(self.X)
        self.nfunction = A.nfunction
        self._conj = None

    @property
    def n(self):
        return self.basis.n

    @property
    def conjugate(self):
        if self._conj is None:
            self._conj = ConjugateEvaluator(self.nfunction)
        return self._conj

    def residual(self, alpha):
        u, grad = self.basis.interpolate(alpha)
        vec = self.A(self.X, grad) + self.phi(u) - self.F_vals
        out = self.basis.load_vector(vec) + self.basis.load_vector(self.b(self.X, u))
        if not np.all(np.isfinite(out)):
            raise NonfiniteIntegrand("residual assembly produced nonfinite entries")
        return out

    def fd_jacobian(self, alpha, residual_fn=None):
        """Central finite-difference Jacobian, column by column."""
        r = residual_fn or self.residual
        n = alpha.size
        J = np.zeros((n, n))
        for j in range(n):
            h = self.settings.fd_step * (1.0 + abs(alpha[j]))
            up = alpha.copy()
            up[j] += h
            dn = alpha.copy()
            dn[j] -= h
            J[:, j] = (r(up) - r(dn)) / (2.0 * h)
        return J

    def linear_warm_start(self):
        """Solve the linear stiffness system K alpha = int F . grad w_j."""
        K = self.basis.stiffness_matrix()
        f = self.basis.load_vector(self.F_vals)
        try:
            return np.linalg.solve(K, f)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(K, f, rcond=None)[0]


def assemble_residual(system, alpha):
    """Residual vector s(alpha) of the Galerkin system."""
    return system.residual(np.asarray(alpha, dtype=float))


def sphere_condition(system, radius, rng=None, samples=None):
    """Minimum of s(alpha) . alpha over random alpha with |alpha| = radius.

    A nonnegative minimum certifies (by the topological zero lemma) that
    a residual zero exists inside the ball.
    """
    rng = rng or np.random.default_rng(system.settings.seed)
    samples = samples or system.settings.sphere_samples
    n = system.n
    worst = np.inf
    for _ in range(samples):
        d = rng.normal(size=n)
        d *= radius / np.linalg.norm(d)
        worst = min(worst, float(system.residual(d) @ d))
    return worst >= 0.0, worst


def certified_radius(system, rng=None, start=1.0):
    """Grow a radius geometrically until the sphere condition holds."""
    rng = rng or np.random.default_rng(system.settings.seed)
    R = start
    for _ in range(system.settings.sphere_growths):
        ok, _ = sphere_condition(system, R, rng)
        if ok:
            return R
        R *= 2.0
    raise NotConverged("no certified radius found", None, [])


@dataclass
class GalerkinSolution:
    alpha: np.ndarray
    converged: bool
    iterations: int
    residual_inf: float
    history: list
    u_field: object = None
    grad_field: object = None
    energy: object = None
    dual: object = None
    convection_orthogonality: object = None
    used_fallback: bool = False


def solve_galerkin(system, alpha0=None, diagnostics=True):
    """Solve s(alpha) = 0 by damped Newton with a descent fallback.

    Raises NotConverged when both stages exhaust their budgets. On
    success the solution carries the energy/dual-norm diagnostics.
    """
    st = system.settings
    if alpha0 is not None:
        alpha = np.asarray(alpha0, dtype=float).copy()
    elif st.warm_start == "linear":
        alpha = system.linear_warm_start()
    else:
        alpha = np.zeros(system.n)
    s = system.residual(alpha)
    r = float(np.max(np.abs(s))) if s.size else 0.0
    history = [r]
    iterations = 0
    used_fallback = False
    while True:
        alpha, s, r, steps = _newton_rounds(system, alpha, s, r, history)
        iterations += steps
        if r <= st.residual_tol or used_fallback:
            break
        # Newton stalled or ran out of budget: improve the iterate by
        # descent on |s|^2 inside a certified ball, then let Newton polish.
        alpha, r, history = _descent_fallback(system, alpha, history)
        s = system.residual(alpha)
        used_fallback = True
    if r > st.residual_tol:
        raise NotConverged(
            f"residual {r:.3e} above tolerance {st.residual_tol:g} after budget",
            alpha, history)
    sol = GalerkinSolution(alpha, True, iterations, r, history,
                           used_fallback=used_fallback)
    u, grad = system.basis.interpolate(alpha)
    sol.u_field = system.basis.field(u)
    sol.grad_field = system.basis.field(grad)
    if diagnostics:
        sol.energy = energy_diagnostics(system, sol)
        sol.dual = dual_bound_check(system, sol)
        sol.convection_orthogonality = convection_orthogonality(system, sol)
    return sol


def _newton_rounds(system, alpha, s, r, history):
    """Damped Newton steps until tolerance, stall, or budget."""
    st = system.settings
    steps = 0
    while steps < st.max_iterations and r > st.residual_tol:
        J = system.fd_jacobian(alpha)
        try:
            step = np.linalg.solve(J, -s)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -s, rcond=None)[0]
        t = 1.0
        accepted = False
        while t >= st.damping_min:
            cand = alpha + t * step
            s_new = system.residual(cand)
            r_new = float(np.max(np.abs(s_new)))
            if np.isfinite(r_new) and r_new <= (1.0 - 1e-4 * t) * r:
                alpha, s, r = cand, s_new, r_new
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        steps += 1
        history.append(r)
    return alpha, s, r, steps


def _descent_fallback(system, alpha, history):
    """Projected gradient descent on 0.5 |s|^2 inside a certified ball."""
    st = system.settings
    rng = np.random.default_rng(st.seed)
    radius = certified_radius(system, rng, start=max(1.0, 2.0 * float(np.linalg.norm(alpha))))
    if np.linalg.norm(alpha) > radius:
        alpha = alpha * (radius / np.linalg.norm(alpha))
    s = system.residual(alpha)
    r = float(np.max(np.abs(s)))
    value = 0.5 * float(s @ s)
    for _ in range(st.fallback_max_iterations):
        if r <= st.residual_tol:
            break
        J = system.fd_jacobian(alpha)
        grad = J.T @ s
        gn = float(np.linalg.norm(grad))
        if gn == 0.0:
            break
        t = 1.0 / (1.0 + gn)
        accepted = False
        for _ in range(60):
            cand = alpha - t * grad
            cn = float(np.linalg.norm(cand))
            if cn > radius:
                cand = cand * (radius / cn)
            s_new = system.residual(cand)
            v_new = 0.5 * float(s_new @ s_new)
            if v_new <= value - 1e-4 * t * gn * gn:
                alpha, s, value = cand, s_new, v_new
                r = float(np.max(np.abs(s)))
                history.append(r)
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
    return alpha, r, history


# ---------------------------------------------------------------------------
# Solution diagnostics
# ---------------------------------------------------------------------------


@dataclass
class EnergyReport:
    """Discrete mirror of the a-priori energy bookkeeping.

    With C0 = int M*(x, 4F/c1) dx + 0.5 ||h1||_1 the chain
    (1/4) I_M + (1/2) I_A + I_Phi + I_b <= C0 (I_M the modular of
    c1 grad u, I_A the energy pairing) yields the asserted bounds, each
    padded by the measured defect of the discrete identity
    I_A + I_Phi + I_b = int F . grad u and a small conjugation slack.
    """

    energy_pairing: float          # int A(x, grad u) . grad u
    convection_pairing: float      # int Phi(u) . grad u
    zero_order_pairing: float      # int b(x, u) u
    source_pairing: float          # int F . grad u
    coercivity_modular: float      # int M(x, c1 grad u)
    gradient_norm: float           # Luxemburg norm of grad u
    c0: float
    h1_l1: float
    h2_l1: float
    identity_defect: float
    bounds: dict
    passed: bool


def energy_diagnostics(system, sol):
    nf = system.nfunction
    A = system.A
    w = system.weights
    X = system.X
    u = sol.u_field.values
    grad = sol.grad_field.values
    A_vals = A(X, grad)
    i_a = float(w @ np.sum(A_vals * grad, axis=1))
    i_phi = float(w @ np.sum(system.phi(u) * grad, axis=1))
    i_b = float(w @ (system.b(X, u) * u))
    f_pair = float(w @ np.sum(system.F_vals * grad, axis=1))
    i_m = float(w @ nf.evaluate(X, A.c1 * grad))
    h1_l1 = float(w @ np.abs(A.offset_values(1, X)))
    h2_l1 = float(w @ np.abs(A.offset_values(2, X)))
    conj_f = system.conjugate.value_batch(X, (4.0 / A.c1) * system.F_vals)
    c0 = float(w @ conj_f) + 0.5 * h1_l1
    norm = luxemburg_norm(nf, sol.grad_field)
    defect = abs(i_a + i_phi + i_b - f_pair)
    slack = 1e-8 * (1.0 + c0) + defect
    aphi = abs(i_phi)
    bounds = {}

    def put(name, value, bound):
        bounds[name] = {"value": value, "bound": bound, "ok": value <= bound}

    put("energy_pairing", i_a, 2.0 * c0 + 2.0 * aphi + slack)
    put("zero_order_pairing", i_b, c0 + 0.5 * h1_l1 + aphi + slack)
    m_bound = (4.0 / 3.0) * (c0 + 0.5 * h1_l1 + aphi) + slack
    put("coercivity_modular", i_m, m_bound)
    put("gradient_norm", norm, (m_bound + 1.0) / A.c1 + slack)
    put("zero_order_sign", -i_b, 1e-12 * (1.0 + abs(i_b)))
    passed = all(v["ok"] for v in bounds.values())
    return EnergyReport(i_a, i_phi, i_b, f_pair, i_m, norm, c0, h1_l1, h2_l1,
                        defect, bounds, passed)


@dataclass
class DualBoundReport:
    """Luxemburg norm of the stress A(., grad u) in the conjugate space
    against the closed-form constant of the a-priori dual bound."""

    stress_norm: float
    bound: float
    margin: float
    passed: bool


def dual_bound_check(system, sol, energy=None):
    A = system.A
    nf = system.nfunction
    energy = energy or sol.energy or energy_diagnostics(system, sol)
    stress = system.basis.field(A(system.X, sol.grad_field.values))
    wrapper = ConjugateIntegrand(nf, system.conjugate)
    lhs = luxemburg_norm(wrapper, stress)
    c1, c2, c3, c4 = A.c1, A.c2, A.c3, A.c4
    bracket = (1.0 / c2 + 1.0) + (c1 * c3 / 2.0 + 1.0) * (
        energy.energy_pairing + energy.h1_l1 + energy.h2_l1 / c2)
    rhs = (2.0 * max(c1, c4) / (c1 * c3)) * bracket
    slack = 1e-8 * (1.0 + rhs)
    return DualBoundReport(lhs, rhs, rhs - lhs, lhs <= rhs + slack)


@dataclass
class OrthogonalityReport:
    """int Phi(u) . grad u dx vanishes for trace-zero u; the quadrature
    defect is compared against 1e-8 ||Phi||_inf ||grad u||_L1."""

    value: float
    tolerance: float
    passed: bool


def convection_orthogonality(system, sol):
    i_phi = float(system.weights
                  @ np.sum(system.phi(sol.u_field.values) * sol.grad_field.values, axis=1))
    grad_l1 = float(system.weights @ np.linalg.norm(sol.grad_field.values, axis=1))
    tol = 1e-8 * max(system.phi.bound, 1e-30) * max(grad_l1, 1e-30) + 1e-14
    return OrthogonalityReport(i_phi, tol, abs(i_phi) <= tol)


def heaviside_ramp(t, delta):
    """Piecewise ramp: 0 below 0, t/delta on [0, delta], 1 beyond."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    t = np.asarray(t, dtype=float)
    return np.clip(t / delta, 0.0, 1.0)


@dataclass
class UniquenessReport:
    """Band decomposition of the difference of two solutions.

    For each delta the three terms integrate the monotone pairing, the
    convection pairing and the zero-order pairing of the two solutions
    over the band {0 < u1 - u2 < delta} (ramp-weighted for the zero
    order part). principal_part must be nonnegative; convection_part is
    dominated by lipschitz * band_gradient_l1 and must fade as delta
    shrinks when the solutions coincide.
    """

    deltas: tuple
    principal_part: np.ndarray
    convection_part: np.ndarray
    zero_order_part: np.ndarray
    band_gradient_l1: np.ndarray
    sup_diff: float
    l1_diff: float
    principal_nonnegative: bool
    convection_dominated: bool
    convection_fades: bool


def uniqueness_probe(system, sol_a, sol_b, deltas=(0.5, 0.1, 0.02), tol=1e-10):
    """Evaluate the uniqueness band identities for a solution pair.

    Requires a strictly increasing zero-order term and a declared
    convection Lipschitz constant, mirroring the hypotheses under which
    the band argument closes.
    """
    if not getattr(system.b, "strictly_increasing", False):
        raise ValueError("uniqueness probe needs a strictly increasing zero-order term")
    lip = getattr(system.phi, "lipschitz", None)
    if lip is None:
        raise ValueError("uniqueness probe needs a convection Lipschitz constant")
    w = system.weights
    X = system.X
    u1, g1 = sol_a.u_field.values, sol_a.grad_field.values
    u2, g2 = sol_b.u_field.values, sol_b.grad_field.values
    diff = u1 - u2
    gdiff = g1 - g2
    A1 = system.A(X, g1)
    A2 = system.A(X, g2)
    phi1 = system.phi(u1)
    phi2 = system.phi(u2)
    b1 = system.b(X, u1)
    b2 = system.b(X, u2)
    j1, j2, j3, band_l1 = [], [], [], []
    for delta in deltas:
        band = ((diff > 0.0) & (diff < delta)).astype(float)
        ramp = heaviside_ramp(diff, delta)
        j1.append(float(w @ (band / delta * np.sum((A1 - A2) * gdiff, axis=1))))
        j2.append(float(w @ (band / delta * np.sum((phi1 - phi2) * gdiff, axis=1))))
        j3.append(float(w @ ((b1 - b2) * ramp)))
        band_l1.append(float(w @ (band * np.linalg.norm(gdiff, axis=1))))
    j1 = np.asarray(j1)
    j2 = np.asarray(j2)
    j3 = np.asarray(j3)
    band_l1 = np.asarray(band_l1)
    sup_diff = float(np.max(np.abs(diff))) if diff.size else 0.0
    l1_diff = float(w @ np.abs(diff))
    nonneg = bool(np.all(j1 >= -tol))
    dominated = bool(np.all(np.abs(j2) <= lip * band_l1 + tol))
    fades = bool(abs(j2[np.argmin(deltas)]) <= max(0.1 * abs(j2[np.argmax(deltas)]), 1e-12))
    return UniquenessReport(tuple(deltas), j1, j2, j3, band_l1, sup_diff, l1_diff,
                            nonneg, dominated, fades)


# ---------------------------------------------------------------------------
# Convergence study
# ---------------------------------------------------------------------------


def sine_test_function(domain, points, mode):
    """Product-of-sines test function vanishing on the box boundary."""
    lo = np.asarray(domain.lo)
    hi = np.asarray(domain.hi)
    L = hi - lo
    t = (points - lo) / L
    k = float(mode) * math.pi
    sines = np.sin(k * t)
    coss = np.cos(k * t)
    v = np.prod(sines, axis=1)
    grad = np.empty_like(points)
    for j in range(points.shape[1]):
        others = np.prod(np.delete(sines, j, axis=1), axis=1) if points.shape[1] > 1 \
            else np.ones(points.shape[0])
        grad[:, j] = (k / L[j]) * coss[:, j] * others
    return v, grad


def weak_form_residual(system, sol, mode):
    """Residual pairing against a smooth sine test function."""
    v, gradv = sine_test_function(system.basis.mesh.domain, system.X, mode)
    u = sol.u_field.values
    grad = sol.grad_field.values
    vec = system.A(system.X, grad) + system.phi(u) - system.F_vals
    return float(system.weights @ (np.sum(vec * gradv, axis=1)
                                   + system.b(system.X, u) * v))


@dataclass
class StudyLevel:
    resolution: int
    n: int
    h: float
    iterations: int
    residual_inf: float
    energy: EnergyReport
    dual: DualBoundReport
    weak_residuals: np.ndarray


@dataclass
class StudyReport:
    levels: list
    lambdas: tuple
    modular_table: np.ndarray       # (n_levels - 1, n_lambdas)
    truncation_levels: tuple
    truncation_distances: np.ndarray
    modular_nonincreasing: bool
    weak_residuals_decrease: bool
    truncation_nonincreasing: bool
    truncation_vanishes: bool
    solutions: list = field(default_factory=list)
    systems: list = field(default_factory=list)


def convergence_study(make_system, resolutions, lambdas=(1.0, 2.0, 4.0, 8.0),
                      truncation_levels=(1.0, 2.0, 4.0, 8.0, 16.0), weak_modes=5):
    """Solve on a resolution ladder and tabulate sequence diagnostics.

    Reported: per-level weak-form residuals against sine test functions,
    modular distances between consecutive gradient fields (per lambda),
    and the truncation distances on the finest level. The study reports
    finite-ladder trends only; the limit bookkeeping of the continuous
    argument has no finite counterpart here.
    """
    levels = []
    sols = []
    systems = []
    for res in resolutions:
        system = make_system(res)
        sol = solve_galerkin(system)
        weak = np.array([weak_form_residual(system, sol, k)
                         for k in range(1, weak_modes + 1)])
        levels.append(StudyLevel(res, system.n, system.basis.mesh.h, sol.iterations,
                                 sol.residual_inf, sol.energy, sol.dual, weak))
        sols.append(sol)
        systems.append(system)
    nf = systems[0].nfunction
    table = np.zeros((max(len(resolutions) - 1, 0), len(lambdas)))
    for i in range(len(resolutions) - 1):
        coarse_sys, fine_sys = systems[i], systems[i + 1]
        _, g_coarse = coarse_sys.basis.evaluate_at(sols[i].alpha, fine_sys.X)
        coarse_field = fine_sys.basis.field(g_coarse)
        for j, lam in enumerate(lambdas):
            table[i, j] = modular_distance(nf, coarse_field, sols[i + 1].grad_field, lam)
    fine_sys = systems[-1]
    fine_sol = sols[-1]
    trunc = []
    for k in truncation_levels:
        _, g_t = truncate_pair(fine_sol.u_field, fine_sol.grad_field, k)
        trunc.append(modular_distance(nf, g_t, fine_sol.grad_field, 1.0))
    trunc = np.asarray(trunc)
    mono = bool(np.all(np.diff(table, axis=0) <= 1e-12 + 0.05 * table[:-1])) \
        if table.shape[0] > 1 else True
    weak_dec = True
    if len(levels) > 1:
        first = np.abs(levels[0].weak_residuals)
        last = np.abs(levels[-1].weak_residuals)
        weak_dec = bool(np.all(last <= first + 1e-12))
    trunc_mono = bool(np.all(np.diff(trunc) <= 1e-14))
    sup_u = float(np.max(np.abs(fine_sol.u_field.values)))
    covered = [t for t in truncation_levels if t >= sup_u]
    trunc_zero = True
    if covered:
        idx = list(truncation_levels).index(covered[0])
        trunc_zero = bool(np.all(trunc[idx:] <= 1e-14))
    return StudyReport(levels, tuple(lambdas), table, tuple(truncation_levels),
                       trunc, mono, weak_dec, trunc_mono, trunc_zero, sols, systems)

"""Problem data for the monotone elliptic equation and its validators.

The equation couples a monotone vector field A(x, xi) controlled by an
N-function M, a bounded continuous convection term Phi(s), a
nondecreasing zero-order term b(x, s) with the sign condition, and a
divergence-form source F. ``validate_structure`` probes the structural
assumptions by sampling; ``canonical_operator`` builds A as the
gradient of a smoothed M and fits the control constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nfunction import ConjugateEvaluator, ConstructionFailure, _as_batch, _pair_batches


@dataclass
class VectorFieldA:
    """Monotone vector field with its N-function control data.

    fn(X, XI) -> (N, d); the constants witness
      coercivity: A(x, xi) . xi >= M(x, c1 xi) - h1(x)
      growth:     c2 M*(x, c3 A(x, xi)) <= M(x, c4 xi) + h2(x)
    with nonnegative integrable offsets h1, h2 (floats mean constants).
    """

    fn: callable
    nfunction: object
    c1: float
    c2: float
    c3: float
    c4: float
    h1: object = 0.0
    h2: object = 0.0
    eps: float = 0.0
    description: str = ""

    def __call__(self, x, xi):
        X, XI = _pair_batches(x, xi, self.nfunction.space_dim, self.nfunction.dim)
        return self.fn(X, XI)

    def offset_values(self, which, X):
        h = self.h1 if which == 1 else self.h2
        if callable(h):
            return np.asarray(h(X), dtype=float)
        return np.full(X.shape[0], float(h))


@dataclass
class ConvectionPhi:
    """Bounded continuous convection term Phi : R -> R^d.

    fn(S) -> (N, d); ``bound`` dominates |Phi| and ``lipschitz`` (when
    known) dominates the difference quotient, enabling the uniqueness
    probe.
    """

    fn: callable
    dim: int
    bound: float
    lipschitz: float | None = None
    description: str = ""

    def __call__(self, s):
        S = np.atleast_1d(np.asarray(s, dtype=float))
        out = self.fn(S)
        return out


@dataclass
class LowerOrderB:
    """Zero-order term b(x, s): nondecreasing in s, b(x, s) sign(s) >= 0,
    integrable in x for each fixed s."""

    fn: callable
    strictly_increasing: bool = False
    description: str = ""

    def __call__(self, x, s):
        X = np.asarray(x, dtype=float)
        S = np.asarray(s, dtype=float)
        return self.fn(X, S)


@dataclass
class SourceF:
    """Divergence-form source; fn(X) -> (N, d)."""

    fn: callable
    dim: int
    description: str = ""

    def __call__(self, x):
        X = np.asarray(x, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        return self.fn(X)


# ---------------------------------------------------------------------------
# Canonical operator
# ---------------------------------------------------------------------------


def canonical_operator(nf, eps=None, domain=None, rng=None, sample_budget=400,
                       h_cap=2.0):
    """A(x, xi) = grad_xi M_eps(x, xi) with auto-fitted constants.

    The constants are fitted over a sample cloud: candidate tuples on a
    power-of-2 grid are screened for nonnegative coercivity and growth
    margins, with the offsets h1, h2 set to the observed deficit (plus
    safety margin). For gradients of convex integrands the tuple
    (c1, c2, c3, c4) = (1, 1, 1, 2) with tiny offsets always fits.

    eps defaults to 1e-8 when any exponent of the family drops below 2
    (the gradient would be unbounded near xi = 0 otherwise), else 0.
    """
    if eps is None:
        eps = 1e-8 if _needs_smoothing(nf) else 0.0
    domain = domain or nf.domain
    if domain is None:
        raise ConstructionFailure("canonical operator fitting needs a domain")
    rng = rng or np.random.default_rng(0)

    def A_fn(X, XI):
        return nf.canonical_gradient(X, XI, eps)

    X = domain.sample(sample_budget, rng)
    dirs = rng.normal(size=(sample_budget, nf.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.exp(rng.uniform(math.log(1e-2), math.log(10.0), size=sample_budget))
    XI = radii[:, None] * dirs
    A_vals = A_fn(X, XI)
    pairing = np.sum(A_vals * XI, axis=1)

    c1 = None
    h1 = 0.0
    for cand in (1.0, 0.5, 0.25, 0.125, 0.0625):
        deficit = nf.evaluate(X, cand * XI) - pairing
        need = float(np.max(deficit))
        if need <= h_cap:
            c1 = cand
            h1 = max(0.0, 1.25 * need) + 1e-9
            break
    if c1 is None:
        raise ConstructionFailure("no coercivity constant found on the sample cloud")

    conj = ConjugateEvaluator(nf)
    fit = None
    for c4 in (2.0, 4.0, 8.0):
        for c3 in (1.0, 0.5, 0.25):
            for c2 in (1.0, 0.5, 0.25):
                lhs = c2 * conj.value_batch(X, c3 * A_vals)
                deficit = lhs - nf.evaluate(X, c4 * XI)
                need = float(np.max(deficit))
                if need <= h_cap:
                    fit = (c2, c3, c4, max(0.0, 1.25 * need) + 1e-9)
                    break
            if fit:
                break
        if fit:
            break
    if fit is None:
        raise ConstructionFailure("no growth constants found on the sample cloud")
    c2, c3, c4, h2 = fit
    return VectorFieldA(A_fn, nf, c1, c2, c3, c4, h1, h2, eps,
                        description=f"gradient of {nf.family} (eps={eps:g})")


def _needs_smoothing(nf):
    for attr in ("p", "p_lo"):
        v = getattr(nf, attr, None)
        if v is not None and np.min(v) < 2.0:
            return True
    for attr in ("ps",):
        v = getattr(nf, attr, None)
        if v is not None and np.min(v) < 2.0:
            return True
    return nf.family == "custom"


def p_laplacian_operator(nf, eps=0.0):
    """A(x, xi) = |xi|^(p-2) xi paired with M = scale |xi|^p.

    Exact algebra: A . xi = |xi|^p, so coercivity holds with equality at
    c1 = scale^(-1/p) and h1 = 0 (for scale = 1/p this is p^(1/p), e.g.
    sqrt(2) at p = 2). Growth holds with c2 = c3 = 1, h2 = 0 once
    c4^p >= ((p-1)/p) (scale p)^(-1/(p-1)) / scale.
    """
    if getattr(nf, "family", None) != "constant-power":
        raise ConstructionFailure("the p-laplacian pairs with a constant-power integrand")
    p = nf.p
    s = nf.scale

    def A_fn(X, XI):
        t = np.sqrt(np.sum(XI * XI, axis=1) + eps * eps)
        fac = np.where(t > 0.0, t ** (p - 2.0), 0.0)
        return fac[:, None] * XI

    c1 = s ** (-1.0 / p)
    c4 = max(1.0, (((p - 1.0) / p) * (s * p) ** (-1.0 / (p - 1.0)) / s) ** (1.0 / p))
    return VectorFieldA(A_fn, nf, c1, 1.0, 1.0, c4, 0.0, 0.0, eps,
                        description=f"p-laplacian p={p:g}")


# ---------------------------------------------------------------------------
# Structure validation
# ---------------------------------------------------------------------------


@dataclass
class StructureReport:
    """Sampled margins of the structural assumptions; violations are
    content, not errors."""

    passed: bool
    checks: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    def record(self, name, margin, ok, detail=None):
        self.checks[name] = {"margin": margin, "ok": bool(ok)}
        if not ok:
            self.passed = False
            self.violations.append({"check": name, "margin": margin,
                                    "detail": detail})


def validate_structure(A, phi, b, F, domain, rng=None, sample_budget=200,
                       quad=None, tol=1e-9):
    """Probe the structural assumptions on sample clouds.

    Checks: A(x, 0) = 0; coercivity and growth margins of A;
    monotonicity of A on point pairs; boundedness (and declared
    Lipschitz bound) of Phi; monotonicity, sign condition and
    integrability of b; finite modular of scaled F under M*.
    """
    rng = rng or np.random.default_rng(0)
    nf = A.nfunction
    report = StructureReport(True)
    X = domain.sample(sample_budget, rng)
    dirs = rng.normal(size=(sample_budget, nf.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.exp(rng.uniform(math.log(1e-2), math.log(10.0), size=sample_budget))
    XI = radii[:, None] * dirs

    zero_vals = A(X, np.zeros_like(XI))
    worst_zero = float(np.max(np.linalg.norm(zero_vals, axis=1)))
    report.record("A(x,0)=0", worst_zero, worst_zero <= 1e-7)

    A_vals = A(X, XI)
    pairing = np.sum(A_vals * XI, axis=1)
    h1 = A.offset_values(1, X)
    coer = pairing - nf.evaluate(X, A.c1 * XI) + h1
    scale = 1.0 + np.abs(pairing)
    worst = float(np.min(coer / scale))
    report.record("coercivity", worst, bool(np.all(coer >= -tol * scale)))

    conj = ConjugateEvaluator(nf)
    h2 = A.offset_values(2, X)
    grow = nf.evaluate(X, A.c4 * XI) + h2 - A.c2 * conj.value_batch(X, A.c3 * A_vals)
    scale = 1.0 + np.abs(nf.evaluate(X, A.c4 * XI))
    worst = float(np.min(grow / scale))
    report.record("growth", worst, bool(np.all(grow >= -tol * scale)))

    ETA = np.exp(rng.uniform(math.log(1e-2), math.log(10.0), size=sample_budget))[:, None] \
        * _unit(rng, sample_budget, nf.dim)
    diff = np.sum((A_vals - A(X, ETA)) * (XI - ETA), axis=1)
    scale = 1.0 + np.abs(diff)
    worst = float(np.min(diff / scale))
    report.record("monotonicity", worst, bool(np.all(diff >= -1e-12 * scale)))

    s_grid = np.concatenate([np.linspace(-50.0, 50.0, 101),
                             rng.normal(scale=10.0, size=100)])
    phi_vals = phi(s_grid)
    norms = np.linalg.norm(phi_vals, axis=1)
    worst = float(np.max(norms) - phi.bound)
    report.record("convection bound", worst, bool(np.all(norms <= phi.bound + tol)))
    if phi.lipschitz is not None:
        t_grid = s_grid + rng.uniform(-1.0, 1.0, size=s_grid.size)
        num = np.linalg.norm(phi(s_grid) - phi(t_grid), axis=1)
        den = np.abs(s_grid - t_grid) + 1e-300
        worst = float(np.max(num / den) - phi.lipschitz)
        report.record("convection lipschitz", worst,
                      bool(np.all(num <= phi.lipschitz * np.abs(s_grid - t_grid) + tol)))

    s_pairs = np.sort(rng.normal(scale=5.0, size=(sample_budget, 2)), axis=1)
    Xb = domain.sample(sample_budget, rng)
    lo_vals = b(Xb, s_pairs[:, 0])
    hi_vals = b(Xb, s_pairs[:, 1])
    mono = hi_vals - lo_vals
    report.record("b nondecreasing", float(np.min(mono)),
                  bool(np.all(mono >= -1e-12 * (1.0 + np.abs(hi_vals)))))
    s_sign = rng.normal(scale=5.0, size=sample_budget)
    sign_vals = b(Xb, s_sign) * np.sign(s_sign)
    report.record("b sign condition", float(np.min(sign_vals)),
                  bool(np.all(sign_vals >= -1e-12)))
    if quad is not None:
        qp, qw = quad
        for s in (-10.0, -1.0, 1.0, 10.0):
            integral = float(qw @ np.abs(b(qp, np.full(qp.shape[0], s))))
            report.record(f"b integrable s={s:g}", integral, np.isfinite(integral))
        F_vals = F(qp)
        for lam in (1.0, 10.0):
            mod = float(qw @ conj.value_batch(qp, lam * F_vals))
            report.record(f"F dual modular lam={lam:g}", mod, np.isfinite(mod))
    return report


def _unit(rng, n, d):
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def check_gradient_consistency(A, domain, rng=None, samples=100, step=1e-4,
                               tol=1e-6):
    """Central finite differences of M_eps against the analytic gradient.

    Relative agreement over samples with |xi| in [0.1, 10]; returns
    (passed, worst relative error).
    """
    rng = rng or np.random.default_rng(0)
    nf = A.nfunction
    X = domain.sample(samples, rng)
    dirs = _unit(rng, samples, nf.dim)
    radii = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=samples))
    XI = radii[:, None] * dirs
    grad = A(X, XI)
    fd = np.zeros_like(grad)
    for j in range(nf.dim):
        h = step * (1.0 + np.abs(XI[:, j]))
        up = XI.copy()
        up[:, j] += h
        dn = XI.copy()
        dn[:, j] -= h
        fd[:, j] = (nf.smoothed_evaluate(X, up, A.eps)
                    - nf.smoothed_evaluate(X, dn, A.eps)) / (2.0 * h)
    err = np.linalg.norm(fd - grad, axis=1) / (1.0 + np.linalg.norm(grad, axis=1))
    worst = float(np.max(err))
    return worst <= tol, worst


# ---------------------------------------------------------------------------
# Catalogs for CLI configuration
# ---------------------------------------------------------------------------


def phi_catalog(kind, dim, scale=0.1):
    """Bounded convection terms; components alternate sin/cos ('trig')
    or share arctan ('arctan')."""
    if kind == "zero":
        return ConvectionPhi(lambda s: np.zeros((s.size, dim)), dim, 0.0, 0.0, "zero")
    if kind == "trig":
        def fn(s):
            comps = [np.sin(s) if k % 2 == 0 else np.cos(s) for k in range(dim)]
            return scale * np.stack(comps, axis=1)
        bound = scale * math.sqrt(dim)
        return ConvectionPhi(fn, dim, bound, scale * math.sqrt(dim),
                             f"{scale:g}*(sin,cos,...)")
    if kind == "arctan":
        def fn(s):
            return scale * np.stack([np.arctan(s)] * dim, axis=1)
        bound = scale * math.pi / 2.0 * math.sqrt(dim)
        return ConvectionPhi(fn, dim, bound, scale * math.sqrt(dim),
                             f"{scale:g}*arctan componentwise")
    raise ConstructionFailure(f"unknown convection kind '{kind}'")


def b_catalog(kind, scale=1.0, weight=None, dead_zone=1.0):
    """Zero-order terms: 'zero', 'linear' (s), 'cubic' (s^3), 'arctan',
    'piecewise' (sign-preserving with a dead zone). ``weight`` is an
    optional nonnegative spatial factor w(X) -> (N,)."""
    w = weight or (lambda X: np.ones(X.shape[0] if X.ndim == 2 else 1))

    def wrap(g, strict, desc):
        def fn(X, S):
            if X.ndim == 1:
                X = X.reshape(1, -1)
            return w(X) * g(np.asarray(S, dtype=float))
        return LowerOrderB(fn, strict and weight is None, desc)

    if kind == "zero":
        return LowerOrderB(lambda X, S: np.zeros(np.shape(S)), False, "zero")
    if kind == "linear":
        return wrap(lambda s: scale * s, True, f"{scale:g}*s")
    if kind == "cubic":
        return wrap(lambda s: scale * s**3, True, f"{scale:g}*s^3")
    if kind == "arctan":
        return wrap(lambda s: scale * np.arctan(s), True, f"{scale:g}*arctan(s)")
    if kind == "piecewise":
        def g(s):
            return scale * np.sign(s) * np.maximum(np.abs(s) - dead_zone, 0.0)
        return wrap(g, False, f"{scale:g}*ramp beyond |s|={dead_zone:g}")
    raise ConstructionFailure(f"unknown zero-order kind '{kind}'")


def source_catalog(kind, dim, **params):
    """Divergence-form sources.

    'zero'; 'affine' (const + slope x, componentwise); 'trig'
    (amplitude cos(k pi x_c) per component); 'signed-power'
    (|a + b x_c|^(r-1) (a + b x_c) per component).
    """
    if kind == "zero":
        return SourceF(lambda X: np.zeros((X.shape[0], dim)), dim, "zero")
    if kind == "affine":
        const = np.asarray(params.get("const", [0.0] * dim), dtype=float)
        slope = np.asarray(params.get("slope", [0.0] * dim), dtype=float)
        axis = int(params.get("axis", 0))

        def fn(X):
            return const[None, :] + slope[None, :] * X[:, axis, None]
        return SourceF(fn, dim, "affine")
    if kind == "trig":
        amp = np.asarray(params.get("amplitude", [1.0] * dim), dtype=float)
        mode = np.asarray(params.get("mode", [1] * dim), dtype=float)
        axis = int(params.get("axis", 0))

        def fn(X):
            return amp[None, :] * np.cos(mode[None, :] * math.pi * X[:, axis, None])
        return SourceF(fn, dim, "trig")
    if kind == "signed-power":
        a = float(params.get("const", 1.0))
        bb = float(params.get("slope", -2.0))
        r = float(params.get("power", 2.0))
        axis = int(params.get("axis", 0))

        def fn(X):
            t = a + bb * X[:, axis]
            out = np.zeros((X.shape[0], dim))
            out[:, 0] = np.abs(t) ** (r - 1.0) * t
            return out
        return SourceF(fn, dim, "signed-power")
    raise ConstructionFailure(f"unknown source kind '{kind}'")

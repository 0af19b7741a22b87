"""Modulars, Luxemburg norms and modular-convergence diagnostics.

A discrete field is a scalar or vector function known at quadrature
points; the modular of a field xi under an integrand M is the
quadrature value of int_Omega M(x, xi(x)) dx. The Luxemburg norm is the
smallest lambda with modular(xi / lambda) <= 1, computed by bracketed
bisection started from the scalar envelopes of M.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiscreteField:
    """Values of a function at quadrature points.

    points : (Nq, sx) spatial coordinates
    weights : (Nq,) quadrature weights (sum to the domain volume)
    values : (Nq,) scalar or (Nq, d) vector samples
    """

    points: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("points/weights length mismatch")
        if self.values.shape[0] != self.weights.shape[0]:
            raise ValueError("values/weights length mismatch")

    @property
    def is_vector(self):
        return self.values.ndim == 2

    @property
    def component_count(self):
        return self.values.shape[1] if self.is_vector else 1

    def magnitudes(self):
        """Pointwise |values| (Euclidean norm for vector fields)."""
        if self.is_vector:
            return np.linalg.norm(self.values, axis=1)
        return np.abs(self.values)

    def with_values(self, values):
        return DiscreteField(self.points, self.weights, np.asarray(values, dtype=float))

    def scaled(self, factor):
        return self.with_values(self.values * factor)

    def __sub__(self, other):
        if other.values.shape != self.values.shape:
            raise ValueError("field shape mismatch")
        return self.with_values(self.values - other.values)

    def integral(self):
        """Quadrature integral of the values (componentwise for vectors)."""
        if self.is_vector:
            return self.weights @ self.values
        return float(self.weights @ self.values)


def modular(nf, field):
    """int_Omega M(x, xi(x)) dx by quadrature."""
    values = field.values if field.is_vector else field.values[:, None]
    if values.shape[1] != nf.dim:
        raise ValueError(f"field has {values.shape[1]} components, integrand expects {nf.dim}")
    with np.errstate(over="ignore"):
        m_vals = nf.evaluate(field.points, values)
    return float(field.weights @ m_vals)


def _envelope_bracket(nf, field):
    """Initial Luxemburg bracket from the scalar envelopes of M.

    m2(|xi|/lam) integrates below 1 once lam >= sup|xi| / m2^{-1}(1/|Omega|),
    giving an upper end; the lower end comes from m1 the same way.
    """
    sup = float(np.max(field.magnitudes()))
    volume = float(np.sum(field.weights))
    hi = None
    lo = None
    m2 = getattr(nf, "m2", None)
    m1 = getattr(nf, "m1", None)
    if m2 is not None:
        thresh = m2.inverse(1.0 / volume)
        if thresh > 0.0:
            hi = sup / thresh
    if m1 is not None:
        thresh = m1.inverse(1.0 / volume)
        if thresh > 0.0:
            lo = sup / thresh / max(1.0, volume)
    return lo, hi


def _luxemburg(nf, field, tol, max_iter):
    sup = float(np.max(field.magnitudes())) if field.values.size else 0.0
    if sup == 0.0:
        return 0.0, 0

    def rho(lam):
        return modular(nf, field.scaled(1.0 / lam))

    lo_guess, hi_guess = _envelope_bracket(nf, field)
    hi = hi_guess if hi_guess is not None and np.isfinite(hi_guess) and hi_guess > 0 else sup
    for _ in range(400):
        if rho(hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise RuntimeError("no feasible Luxemburg bracket found")
    lo = min(lo_guess, hi) if lo_guess else hi
    while lo > 0.0 and rho(lo) <= 1.0:
        lo *= 0.5
        if lo < 1e-300:
            return 0.0, 0
    iterations = 0
    for _ in range(max_iter):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        iterations += 1
        if rho(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi, iterations


def luxemburg_norm(nf, field, tol=1e-10, max_iter=200):
    """Luxemburg norm inf{ lam > 0 : modular(xi / lam) <= 1 }.

    Bisection to relative tolerance ``tol``; the returned lambda is the
    feasible (modular <= 1) end of the final bracket.
    """
    norm, _ = _luxemburg(nf, field, tol, max_iter)
    return norm


@dataclass
class ModularReport:
    """Modular value, Luxemburg norm and the bisection effort."""

    modular_value: float
    luxemburg: float
    iterations: int


def modular_report(nf, field, tol=1e-10):
    rho = modular(nf, field)
    norm, iters = _luxemburg(nf, field, tol, 200)
    return ModularReport(rho, norm, iters)


@dataclass
class ComparisonReport:
    """Outcome of the modular/norm comparison check."""

    norm: float
    modular_value: float
    branch: str
    margin: float
    passed: bool


def check_modular_norm_comparison(nf, field, tol=1e-9):
    """Check the two-branch comparison between norm and modular:
    norm <= 1 implies modular <= norm, norm > 1 implies modular >= norm."""
    norm = luxemburg_norm(nf, field)
    rho = modular(nf, field)
    if norm <= 1.0:
        margin = norm - rho
        branch = "norm<=1: modular <= norm"
    else:
        margin = rho - norm
        branch = "norm>1: modular >= norm"
    scale = 1.0 + abs(norm) + abs(rho)
    return ComparisonReport(norm, rho, branch, margin, margin >= -tol * scale)


def modular_distance(nf, field_a, field_b, lam=1.0):
    """Modular of (a - b) / lam; the distance driving modular convergence."""
    if lam <= 0.0:
        raise ValueError("lambda must be positive")
    return modular(nf, (field_a - field_b).scaled(1.0 / lam))


@dataclass
class ModularConvergenceReport:
    """Distances of a field sequence to its target, per scaling lambda."""

    lambdas: tuple
    distances: np.ndarray  # (n_fields, n_lambdas)
    witness_lambda: float | None
    converged: bool


def modular_convergence_diagnostic(nf, fields, target, lambdas=(1.0, 2.0, 4.0, 8.0),
                                   drop_factor=0.1, atol=1e-12):
    """Tabulate modular distances to the target for each lambda and flag
    convergence at the smallest lambda whose distances drop to
    drop_factor of their initial value (or below atol)."""
    dist = np.array([[modular_distance(nf, f, target, lam) for lam in lambdas]
                     for f in fields])
    witness = None
    for j, lam in enumerate(lambdas):
        col = dist[:, j]
        if col[-1] <= max(drop_factor * col[0], atol):
            witness = float(lam)
            break
    return ModularConvergenceReport(tuple(lambdas), dist, witness, witness is not None)


@dataclass
class UniformIntegrabilityReport:
    """Worst small-set integrals of |field| per shrink level.

    levels : measure thresholds delta
    worst : per-level sup over the family of the greedy small-set integral
    table : (n_fields, n_levels) individual values
    """

    levels: np.ndarray
    worst: np.ndarray
    table: np.ndarray


def uniform_integrability_probe(fields, levels):
    """Greedy small-set integrals sup_{|E| < delta} int_E |xi| dx.

    For quadrature measures the exact extremizer is the greedy one: sort
    points by |xi| descending and accumulate while the measure stays
    below delta. Admitting the point that crosses delta only partially
    would require splitting atoms; the probe stays below delta instead,
    which under-reports by at most one atom.
    """
    levels = np.asarray(sorted(levels, reverse=True), dtype=float)
    table = np.zeros((len(fields), levels.size))
    for i, f in enumerate(fields):
        mags = f.magnitudes()
        order = np.argsort(-mags, kind="stable")
        w = f.weights[order]
        contrib = (f.weights * mags)[order]
        cum_w = np.cumsum(w)
        cum_c = np.cumsum(contrib)
        for j, delta in enumerate(levels):
            take = np.searchsorted(cum_w, delta * (1.0 - 1e-12), side="left")
            table[i, j] = cum_c[take - 1] if take > 0 else 0.0
    worst = table.max(axis=0) if len(fields) else np.zeros(levels.size)
    return UniformIntegrabilityReport(levels, worst, table)


def truncate_field(field, k):
    """Pointwise truncation: values clipped to [-k, k] (scalar fields)."""
    if k < 0:
        raise ValueError("truncation level must be nonnegative")
    if field.is_vector:
        raise ValueError("truncation acts on scalar fields")
    return field.with_values(np.clip(field.values, -k, k))


def truncate_pair(u_field, grad_field, k):
    """Truncate u at height k and zero its gradient where |u| >= k.

    Returns (T_k u, grad T_k u); the gradient is the original one on
    {|u| < k} and zero elsewhere, matching the chain rule for the
    piecewise-linear truncation.
    """
    if k < 0:
        raise ValueError("truncation level must be nonnegative")
    if u_field.is_vector or not grad_field.is_vector:
        raise ValueError("expected scalar u and vector gradient")
    u_t = np.clip(u_field.values, -k, k)
    keep = np.abs(u_field.values) < k
    g_t = np.where(keep[:, None], grad_field.values, 0.0)
    return u_field.with_values(u_t), grad_field.with_values(g_t)


def write_field_csv(field, path):
    """One row per quadrature point: coordinates, weight, value components."""
    sx = field.points.shape[1]
    d = field.component_count
    header = [f"x{i+1}" for i in range(sx)] + ["weight"] + [f"v{i+1}" for i in range(d)]
    values = field.values if field.is_vector else field.values[:, None]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for p, w, v in zip(field.points, field.weights, values):
            writer.writerow([f"{c:.17g}" for c in p] + [f"{w:.17g}"]
                            + [f"{c:.17g}" for c in v])


def read_field_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(c) for c in row] for row in reader])
    sx = sum(1 for h in header if h.startswith("x"))
    d = sum(1 for h in header if h.startswith("v"))
    values = rows[:, sx + 1:sx + 1 + d]
    if d == 1:
        values = values[:, 0]
    return DiscreteField(rows[:, :sx], rows[:, sx], values)

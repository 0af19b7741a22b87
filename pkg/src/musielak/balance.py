"""Sampled check of the spatial balance condition.

The condition: there is a constant c > 1 such that for every ball B
inside the domain with |B| <= 1, every x in B and every xi with
|xi| > 1 whose rescaled value M(x, c xi) lies in the window
[1, 1/|B|],

    sup_{y in B} M(y, xi) <= M(x, c xi).

The checker cannot prove the condition; it hunts for violations over a
deterministic low-discrepancy family of balls (biased toward the zero
set of any spatial weight), sampling admissible xi by root-finding
window targets along random rays and maximizing over y with in-ball
sampling plus compass refinement. For double-phase integrands an
analytic pre-screen of the exponent gap is reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc


@dataclass
class BalanceProbe:
    """Sampling plan for the balance check.

    c_m : candidate constant (> 1)
    ball_count : low-discrepancy ball centers per radius
    radius_schedule : ball radii, largest first
    xi_per_ball : xi samples per ball (split over the x samples)
    x_samples : spatial base points per ball
    y_samples : random in-ball points per sup evaluation
    refine_steps : compass-search refinement rounds for the sup
    """

    c_m: float = 2.0
    ball_count: int = 24
    radius_schedule: tuple = (0.3, 0.1, 0.03, 0.01)
    xi_per_ball: int = 64
    x_samples: int = 4
    y_samples: int = 64
    refine_steps: int = 12

    def __post_init__(self):
        if self.c_m <= 1.0:
            raise ValueError(f"balance constant must exceed 1, got {self.c_m}")


@dataclass
class BalanceWitness:
    """A sampled violation of the balance inequality."""

    center: np.ndarray
    radius: float
    x: np.ndarray
    xi: np.ndarray
    target: float       # M(x, c_m xi)
    sup_value: float    # sup_y M(y, xi) found
    y_argmax: np.ndarray

    @property
    def excess(self):
        return self.sup_value - self.target


@dataclass
class BalanceReport:
    """Outcome of a balance check at one candidate constant."""

    c_m: float
    passed: bool
    witnesses: list
    balls_tested: int
    pairs_tested: int
    empty_windows: int
    notes: list = field(default_factory=list)
    prescreen_margin: float | None = None

    @property
    def prescreen_holds(self):
        return None if self.prescreen_margin is None else self.prescreen_margin >= 0.0


def _ball_volume(dim, radius):
    if dim == 1:
        return 2.0 * radius
    if dim == 2:
        return math.pi * radius * radius
    raise ValueError("balls supported in 1 and 2 dimensions")


def _ball_centers(nf, domain, radius, count, rng):
    """Low-discrepancy centers keeping the ball inside the box, padded
    with centers hugging the zero set of any spatial weight."""
    lo = np.asarray(domain.lo) + radius
    hi = np.asarray(domain.hi) - radius
    if np.any(lo >= hi):
        return None
    sampler = qmc.Halton(d=domain.dim, scramble=False)
    sampler.fast_forward(1)  # drop the origin point
    base = lo + sampler.random(count) * (hi - lo)
    anchors = nf.degeneracy_anchors(domain, max(2, count // 3), rng)
    if anchors is not None:
        shifted = np.clip(anchors, lo, hi)
        base = np.vstack([shifted, base])
    return base


def _sample_in_ball(center, radius, n, rng):
    d = center.size
    dirs = rng.normal(size=(n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=n) ** (1.0 / d)
    return center[None, :] + radii[:, None] * dirs


def _root_on_rays(nf, x, dirs, scale, targets, iters=60):
    """Per-ray t > 0 with M(x, scale * t * dir) = target (monotone in t)."""
    n = dirs.shape[0]
    X = np.broadcast_to(x, (n, x.size))

    def m_of(t):
        return nf.evaluate(X, (scale * t)[:, None] * dirs)

    hi = np.ones(n)
    for _ in range(200):
        vals = m_of(hi)
        need = vals < targets
        if not need.any():
            break
        hi = np.where(need, 2.0 * hi, hi)
    lo = np.zeros(n)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = m_of(mid) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _sup_in_ball(nf, center, radius, xis, y_candidates, refine_steps):
    """Approximate sup_{y in B} M(y, xi) per xi row.

    Starts from the best candidate and refines by compass search with
    shrinking steps, projecting proposals back into the ball.
    """
    n_xi = xis.shape[0]
    n_y = y_candidates.shape[0]
    Y = np.repeat(y_candidates, n_xi, axis=0)
    XI = np.tile(xis, (n_y, 1))
    vals = nf.evaluate(Y, XI).reshape(n_y, n_xi)
    best_idx = np.argmax(vals, axis=0)
    best_y = y_candidates[best_idx]
    best_v = vals[best_idx, np.arange(n_xi)]

    d = center.size
    step = radius / 3.0
    for _ in range(refine_steps):
        for j in range(d):
            for sgn in (1.0, -1.0):
                prop = best_y.copy()
                prop[:, j] += sgn * step
                off = prop - center[None, :]
                norms = np.linalg.norm(off, axis=1)
                over = norms > radius * (1.0 - 1e-12)
                if over.any():
                    fac = radius * (1.0 - 1e-12) / norms[over]
                    prop[over] = center[None, :] + off[over] * fac[:, None]
                v = nf.evaluate(prop, xis)
                better = v > best_v
                best_y = np.where(better[:, None], prop, best_y)
                best_v = np.maximum(best_v, v)
        step *= 0.65
    return best_v, best_y


def check_balance(nf, probe=None, rng=None, seed=0):
    """Hunt for violations of the balance inequality at probe.c_m.

    Returns a BalanceReport; ``passed`` means no violation was found,
    not a proof. Balls whose admissible xi window is empty are counted
    in ``empty_windows``.
    """
    probe = probe or BalanceProbe()
    if nf.domain is None:
        raise ValueError("balance check needs an integrand with a domain")
    domain = nf.domain
    rng = rng or np.random.default_rng(seed)
    c = probe.c_m
    witnesses = []
    notes = []
    balls = 0
    pairs = 0
    empty = 0
    for radius in probe.radius_schedule:
        vol = _ball_volume(domain.dim, radius)
        if vol > 1.0:
            notes.append(f"radius {radius:g} skipped: ball volume {vol:g} exceeds 1")
            continue
        centers = _ball_centers(nf, domain, radius, probe.ball_count, rng)
        if centers is None:
            notes.append(f"radius {radius:g} skipped: ball does not fit the domain")
            continue
        s_hi = 1.0 / vol
        for center in centers:
            balls += 1
            xs = [center]
            wm = nf.weight_minimizer_in_ball(center, radius)
            if wm is not None:
                xs.append(np.asarray(wm, dtype=float))
            extra = probe.x_samples - len(xs)
            if extra > 0:
                xs.extend(_sample_in_ball(center, radius, extra, rng))
            per_x = max(1, probe.xi_per_ball // len(xs))
            for x in xs:
                dirs = rng.normal(size=(per_x, nf.dim))
                dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
                at_unit = nf.evaluate(np.broadcast_to(x, (per_x, x.size)), c * dirs)
                s_lo = np.maximum(1.0, at_unit) * (1.0 + 1e-9)
                u = rng.uniform(size=per_x)
                feasible = s_lo < s_hi
                if not feasible.any():
                    empty += 1
                    continue
                targets = np.exp(np.log(s_lo) + u * (np.log(s_hi) - np.log(s_lo)))
                dirs = dirs[feasible]
                targets = targets[feasible]
                ts = _root_on_rays(nf, x, dirs, c, targets)
                keep = ts > 1.0
                if not keep.any():
                    empty += 1
                    continue
                xis = ts[keep, None] * dirs[keep]
                n_xi = xis.shape[0]
                pairs += n_xi
                target_vals = nf.evaluate(np.broadcast_to(x, (n_xi, x.size)), c * xis)
                y_cands = [center[None, :], x[None, :]]
                if wm is not None:
                    y_cands.append(np.asarray(wm, dtype=float)[None, :])
                eye = np.eye(domain.dim)
                shell = 0.999 * radius
                y_cands.append(center[None, :] + shell * eye)
                y_cands.append(center[None, :] - shell * eye)
                y_cands.append(_sample_in_ball(center, radius, probe.y_samples, rng))
                y_cands = np.vstack(y_cands)
                sup_vals, sup_ys = _sup_in_ball(nf, center, radius, xis, y_cands,
                                                probe.refine_steps)
                slack = 1e-9 * (1.0 + target_vals)
                bad = sup_vals > target_vals + slack
                for i in np.nonzero(bad)[0]:
                    witnesses.append(BalanceWitness(
                        center=center.copy(), radius=float(radius),
                        x=np.asarray(x, dtype=float).copy(), xi=xis[i].copy(),
                        target=float(target_vals[i]), sup_value=float(sup_vals[i]),
                        y_argmax=sup_ys[i].copy()))
    margin = nf.prescreen_margin() if hasattr(nf, "prescreen_margin") else None
    return BalanceReport(c, len(witnesses) == 0, witnesses, balls, pairs, empty,
                         notes, margin)


@dataclass
class BalanceSchedule:
    """Results of scanning candidate constants."""

    schedule: tuple
    reports: dict
    smallest_passing: float | None


def smallest_passing_cm(nf, schedule=(2.0, 4.0, 8.0, 16.0), probe=None, seed=0):
    """Run the balance check along a schedule of constants; each run
    reuses the same seed so the ball geometry is shared."""
    probe = probe or BalanceProbe()
    reports = {}
    smallest = None
    for cm in schedule:
        p = BalanceProbe(c_m=cm, ball_count=probe.ball_count,
                         radius_schedule=probe.radius_schedule,
                         xi_per_ball=probe.xi_per_ball, x_samples=probe.x_samples,
                         y_samples=probe.y_samples, refine_steps=probe.refine_steps)
        rep = check_balance(nf, p, rng=np.random.default_rng(seed))
        reports[cm] = rep
        if rep.passed and smallest is None:
            smallest = cm
    return BalanceSchedule(tuple(schedule), reports, smallest)

"""Generalized N-functions M(x, xi) and their convex conjugates.

An N-function here is a map M : Omega x R^d -> [0, inf), convex and
superlinear in xi with M(x, 0) = 0, sandwiched between two scalar Young
functions acting on |xi|:

    m1(|xi|) <= M(x, xi) <= m2(|xi|).

The module provides a catalog of parametric families (constant power,
variable exponent, double phase, their anisotropic variants and an
exponential-growth custom entry), the conjugate

    M*(x, eta) = sup_xi [ xi . eta - M(x, xi) ]

through closed forms where available and a derivative-free search
otherwise, and sampled checks of the Fenchel-Young inequality and of
biconjugation M** = M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class DomainViolation(ValueError):
    """A spatial point lies outside the declared domain."""


class SearchRadiusExhausted(RuntimeError):
    """The conjugate search kept improving at the edge of the largest
    allowed radius; the supremum is out of numeric reach."""


class ConstructionFailure(RuntimeError):
    """A constructor could not produce a valid object from the given data."""


def _as_batch(x, width):
    """Return a float array of shape (N, width) from (width,) or (N, width)."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim == 1:
        if width == 1 and a.shape[0] != 1:
            return a.reshape(-1, 1)
        if a.shape[0] != width:
            raise ValueError(f"expected vectors of length {width}, got shape {a.shape}")
        return a.reshape(1, width)
    if a.ndim == 2:
        if a.shape[1] != width:
            raise ValueError(f"expected shape (N, {width}), got {a.shape}")
        return a
    raise ValueError(f"expected at most 2 dimensions, got shape {a.shape}")


def _pair_batches(x, xi, space_dim, dim):
    """Broadcast a point batch against a vector batch to a common length."""
    X = _as_batch(x, space_dim)
    XI = _as_batch(xi, dim)
    if X.shape[0] == XI.shape[0]:
        return X, XI
    if X.shape[0] == 1:
        return np.broadcast_to(X, (XI.shape[0], space_dim)), XI
    if XI.shape[0] == 1:
        return X, np.broadcast_to(XI, (X.shape[0], dim))
    raise ValueError(f"mismatched batch sizes {X.shape[0]} and {XI.shape[0]}")


# ---------------------------------------------------------------------------
# Scalar Young functions
# ---------------------------------------------------------------------------


class YoungFunction:
    """Scalar Young function m : [0, inf) -> [0, inf).

    Wraps a vectorized callable; convexity, m(0) = 0 and superlinearity
    are the caller's responsibility and can be probed with
    :func:`validate_young`.
    """

    def __init__(self, fn, name="young"):
        self._fn = fn
        self.name = name

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            return self._fn(np.abs(t))

    def __repr__(self):
        return f"YoungFunction({self.name})"

    def inverse(self, y, tol=1e-13, max_iter=200):
        """Inverse on [0, inf) by bracketed bisection (m is increasing)."""
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y).astype(float)
        out = np.zeros_like(y)
        pos = y > 0.0
        if pos.any():
            yp = y[pos]
            hi = np.ones_like(yp)
            with np.errstate(over="ignore"):
                for _ in range(200):
                    need = self(hi) < yp
                    if not need.any():
                        break
                    hi[need] *= 2.0
                lo = np.zeros_like(yp)
                for _ in range(max_iter):
                    mid = 0.5 * (lo + hi)
                    below = self(mid) < yp
                    lo = np.where(below, mid, lo)
                    hi = np.where(below, hi, mid)
                    if np.all(hi - lo <= tol * (1.0 + hi)):
                        break
            out[pos] = 0.5 * (lo + hi)
        return float(out[0]) if scalar else out

    def conjugate(self, name=None):
        """Numeric Legendre conjugate m*(s) = sup_t [ s t - m(t) ]."""

        def conj(s):
            shape = np.shape(s)
            flat = np.ravel(np.asarray(s, dtype=float))
            vals, _ = _ray_supremum(lambda t, rows: self(t), flat,
                                    r0=8.0, grid=32, iters=40)
            return vals.reshape(shape) if shape else float(vals[0])

        return YoungFunction(conj, name or f"conj({self.name})")


def young_power(p, scale=1.0):
    """m(t) = scale * t**p, p > 1."""
    if p <= 1.0:
        raise ConstructionFailure(f"power exponent must exceed 1, got {p}")
    return YoungFunction(lambda t: scale * t**p, f"{scale:g}*t^{p:g}")


def young_power_upper(p_lo, p_hi, scale=1.0):
    """Convex upper glue: scale * (t**p_lo on [0,1], t**p_hi beyond)."""
    if not 1.0 < p_lo <= p_hi:
        raise ConstructionFailure(f"need 1 < p_lo <= p_hi, got ({p_lo}, {p_hi})")

    def fn(t):
        return scale * np.where(t <= 1.0, t**p_lo, t**p_hi)

    return YoungFunction(fn, f"upper[{p_lo:g},{p_hi:g}]")


def young_power_envelope(p_hi, p_lo, scale=1.0):
    """Convex minorant of min(t**p_hi, t**p_lo) for p_hi >= p_lo > 1.

    Equals t**p_hi near zero and t**p_lo at infinity, joined by the
    common tangent line on [a, b]; the tangent points solve

        p_hi a^(p_hi-1) = p_lo b^(p_lo-1),
        (1-p_hi) a^p_hi = (1-p_lo) b^p_lo.
    """
    if not 1.0 < p_lo <= p_hi:
        raise ConstructionFailure(f"need 1 < p_lo <= p_hi, got ({p_hi}, {p_lo})")
    if p_hi == p_lo:
        return young_power(p_lo, scale)
    p, q = p_hi, p_lo
    ln_a = (q / (p - q)) * (math.log(q / p) + ((q - 1.0) / q) * math.log((p - 1.0) / (q - 1.0)))
    a = math.exp(ln_a)
    b = (a**p * (p - 1.0) / (q - 1.0)) ** (1.0 / q)
    slope = p * a ** (p - 1.0)
    intercept = (1.0 - p) * a**p

    def fn(t):
        lo_part = t**p
        hi_part = t**q
        line = slope * t + intercept
        return scale * np.where(t <= a, lo_part, np.where(t >= b, hi_part, line))

    return YoungFunction(fn, f"env[{p:g}->{q:g}]")


def young_exp():
    """m(t) = exp(t) - t - 1 (grows faster than every power)."""
    return YoungFunction(lambda t: np.expm1(t) - t, "exp(t)-t-1")


def young_exp_conjugate():
    """Conjugate of exp(t)-t-1: m*(s) = (1+s) log(1+s) - s."""
    return YoungFunction(lambda s: (1.0 + s) * np.log1p(s) - s, "(1+s)log(1+s)-s")


def young_scaled_argument(m, factor, name=None):
    """t -> m(factor * t)."""
    return YoungFunction(lambda t: m(factor * t), name or f"{m.name}({factor:g}t)")


def young_sum(parts, name=None):
    """Pointwise sum of Young functions (again a Young function)."""
    parts = list(parts)

    def fn(t):
        total = parts[0](t)
        for m in parts[1:]:
            total = total + m(t)
        return total

    return YoungFunction(fn, name or "+".join(m.name for m in parts))


@dataclass
class YoungReport:
    """Outcome of the sampled Young-function validation."""

    passed: bool
    zero_at_zero: bool
    positive: bool
    midpoint_convex: bool
    superlinear_at_zero: bool
    superlinear_at_infinity: bool
    worst_convexity_gap: float


def validate_young(m, t_min=1e-6, t_max=1e6, n=49, tol=1e-9):
    """Probe m(0)=0, positivity, midpoint convexity and superlinearity
    on a geometric grid. Superlinearity is a heuristic trend check on
    m(t)/t at the grid ends."""
    grid = np.geomspace(t_min, t_max, n)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = m(grid)
        zero_ok = abs(float(m(0.0))) <= tol
        finite = np.isfinite(vals)
        pos_ok = bool(np.all(vals[finite] > 0.0)) and bool(finite[: n // 2].all())
        mids = m(0.5 * (grid[:-1] + grid[1:]))
        chords = 0.5 * (vals[:-1] + vals[1:])
        both = np.isfinite(mids) & np.isfinite(chords)
        gaps = mids[both] - chords[both]
        scale = 1.0 + np.abs(chords[both])
        convex_ok = bool(np.all(gaps <= tol * scale))
        worst = float(np.max(gaps / scale)) if gaps.size else 0.0
        ratio = vals / grid
        r_one = float(m(1.0))
        lo_ok = bool(ratio[0] <= 0.1 * r_one + tol)
        hi_ratio = ratio[finite][-1] if finite.any() else np.inf
        hi_ok = bool(not np.isfinite(hi_ratio) or hi_ratio >= 10.0 * r_one)
    passed = zero_ok and pos_ok and convex_ok and lo_ok and hi_ok
    return YoungReport(passed, zero_ok, pos_ok, convex_ok, lo_ok, hi_ok, worst)


# ---------------------------------------------------------------------------
# Affine spatial coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineCoefficient:
    """c(x) = const + slope . x with box-range helpers."""

    const: float
    slope: tuple = ()

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if not self.slope:
            return np.full(X.shape[0] if X.ndim == 2 else 1, self.const)
        g = np.asarray(self.slope, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        return self.const + X @ g

    def range_over(self, lo, hi):
        """(min, max) over the box [lo, hi]."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if not self.slope:
            return self.const, self.const
        g = np.asarray(self.slope, dtype=float)
        low = self.const + float(np.sum(np.minimum(g * lo, g * hi)))
        high = self.const + float(np.sum(np.maximum(g * lo, g * hi)))
        return low, high


def _coeff(value, space_dim):
    """Coerce a float or (const, slope) pair into an AffineCoefficient."""
    if isinstance(value, AffineCoefficient):
        return value
    if np.isscalar(value):
        return AffineCoefficient(float(value))
    const, slope = value
    slope = tuple(float(s) for s in np.atleast_1d(slope))
    if len(slope) != space_dim:
        raise ConstructionFailure(f"slope length {len(slope)} != space dim {space_dim}")
    return AffineCoefficient(float(const), slope)


# ---------------------------------------------------------------------------
# N-function base and catalog
# ---------------------------------------------------------------------------


class NFunction:
    """Base class for generalized integrands M(x, xi).

    Attributes
    ----------
    dim : int
        Dimension d of the vector argument xi.
    space_dim : int
        Dimension of the spatial argument x.
    family : str
        Catalog tag.
    m1, m2 : YoungFunction
        Lower/upper scalar envelopes of M.
    domain : object or None
        Optional domain with a ``contains(X)`` method; ``eval_m`` raises
        DomainViolation for points outside it.
    is_radial, is_separable : bool
        Structure hints used by the conjugate search.
    """

    family = "custom"
    is_radial = False
    is_separable = False

    def __init__(self, dim, space_dim, domain=None):
        self.dim = int(dim)
        self.space_dim = int(space_dim)
        self.domain = domain
        if self.dim < 1 or self.space_dim < 1:
            raise ConstructionFailure("dimensions must be positive")

    # subclasses implement _raw(X, XI) on (N, space_dim) x (N, dim)
    def _raw(self, X, XI):
        raise NotImplementedError

    def evaluate(self, x, xi):
        """M(x, xi), vectorized; scalar in, scalar out."""
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        with np.errstate(over="ignore"):
            out = self._raw(np.ascontiguousarray(X), np.ascontiguousarray(XI))
        if np.ndim(x) <= 1 and np.ndim(xi) == 1:
            return float(out[0])
        return out

    def closed_form_conjugate(self, x, eta):
        """M*(x, eta) when the family has a closed form, else None."""
        return None

    @property
    def has_closed_form_conjugate(self):
        X = np.zeros((1, self.space_dim))
        ETA = np.zeros((1, self.dim))
        return self.closed_form_conjugate(X, ETA) is not None

    def canonical_gradient(self, x, xi, eps=0.0):
        """Gradient of the (eps-smoothed) integrand in xi; the canonical
        monotone vector field A = grad_xi M_eps."""
        raise NotImplementedError(f"{self.family} has no canonical gradient")

    def smoothed_evaluate(self, x, xi, eps=0.0):
        """M_eps(x, xi): |xi| replaced by sqrt(|xi|^2 + eps^2), shifted so
        that M_eps(x, 0) = 0. Equals M for eps = 0."""
        raise NotImplementedError(f"{self.family} has no smoothed form")

    def weight_minimizer_in_ball(self, center, radius):
        """Point of weakest x-dependent growth inside a ball, or None.

        Used by the balance probe to aim samples where the condition is
        tightest; families without spatial weights return None.
        """
        return None

    def degeneracy_anchors(self, domain, k, rng):
        """Sample points near the zero set of a spatial weight, or None."""
        return None


def eval_m(nf, x, xi):
    """Evaluate M(x, xi) with a domain-membership check."""
    if nf.domain is not None:
        X = _as_batch(x, nf.space_dim)
        inside = nf.domain.contains(X)
        if not np.all(inside):
            bad = X[~np.atleast_1d(inside)][0]
            raise DomainViolation(f"point {bad} outside domain")
    return nf.evaluate(x, xi)


def _power_conjugate(p, scale, s):
    """sup_t [ s t - scale t^p ] = (p-1)/p * (scale p)^(-1/(p-1)) * s^(p/(p-1))."""
    with np.errstate(over="ignore"):
        expo = p / (p - 1.0)
        return (p - 1.0) / p * (scale * p) ** (-1.0 / (p - 1.0)) * s**expo


def _smooth_norm(XI, eps):
    return np.sqrt(np.sum(XI * XI, axis=1) + eps * eps)


class ConstantPower(NFunction):
    """M(x, xi) = scale * |xi|^p, p > 1."""

    family = "constant-power"
    is_radial = True

    def __init__(self, p, dim=2, scale=1.0, domain=None, space_dim=None):
        super().__init__(dim, space_dim or (domain.dim if domain is not None else dim), domain)
        if p <= 1.0:
            raise ConstructionFailure(f"exponent must exceed 1, got {p}")
        if scale <= 0.0:
            raise ConstructionFailure(f"scale must be positive, got {scale}")
        self.p = float(p)
        self.scale = float(scale)
        self.m1 = young_power(self.p, self.scale)
        self.m2 = young_power(self.p, self.scale)
        self.is_separable = dim == 1

    def _raw(self, X, XI):
        t = np.linalg.norm(XI, axis=1)
        return self.scale * t**self.p

    def closed_form_conjugate(self, x, eta):
        X, ETA = _pair_batches(x, eta, self.space_dim, self.dim)
        s = np.linalg.norm(ETA, axis=1)
        return _power_conjugate(self.p, self.scale, s)

    def canonical_gradient(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        t = _smooth_norm(XI, eps)
        fac = np.where(t > 0.0, self.scale * self.p * t ** (self.p - 2.0), 0.0)
        return fac[:, None] * XI

    def smoothed_evaluate(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        t = _smooth_norm(XI, eps)
        return self.scale * (t**self.p - eps**self.p)


class VariableExponent(NFunction):
    """M(x, xi) = |xi|^p(x) with affine p(x) clamped to [p_lo, p_hi], p_lo > 1."""

    family = "variable-exponent"
    is_radial = True

    def __init__(self, exponent, domain, dim=None, bounds=None):
        space_dim = domain.dim
        dim = dim or space_dim
        super().__init__(dim, space_dim, domain)
        self.exponent = _coeff(exponent, space_dim)
        lo, hi = self.exponent.range_over(domain.lo, domain.hi)
        if bounds is not None:
            lo, hi = max(lo, bounds[0]), min(hi, bounds[1])
        if not 1.0 < lo <= hi:
            raise ConstructionFailure(f"exponent range [{lo:g}, {hi:g}] must sit above 1")
        self.p_lo = float(lo)
        self.p_hi = float(hi)
        self.m1 = young_power_envelope(self.p_hi, self.p_lo)
        self.m2 = young_power_upper(self.p_lo, self.p_hi)
        self.is_separable = dim == 1

    def _p(self, X):
        return np.clip(self.exponent(X), self.p_lo, self.p_hi)

    def _raw(self, X, XI):
        t = np.linalg.norm(XI, axis=1)
        return t ** self._p(X)

    def closed_form_conjugate(self, x, eta):
        X, ETA = _pair_batches(x, eta, self.space_dim, self.dim)
        s = np.linalg.norm(ETA, axis=1)
        return _power_conjugate(self._p(X), 1.0, s)

    def canonical_gradient(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        p = self._p(X)
        t = _smooth_norm(XI, eps)
        fac = np.where(t > 0.0, p * t ** (p - 2.0), 0.0)
        return fac[:, None] * XI

    def smoothed_evaluate(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        p = self._p(X)
        t = _smooth_norm(XI, eps)
        return t**p - eps**p


class DoublePhase(NFunction):
    """M(x, xi) = scale_p |xi|^p + a(x) scale_q |xi|^q with a >= 0, 1 < p <= q.

    ``holder_alpha`` declares the Holder exponent of the weight a; the
    balance pre-screen tests q/p <= 1 + holder_alpha/space_dim. Some
    statements of this smallness condition transpose the ratio as
    p/q <= 1 + alpha/d, which is vacuous for p <= q; the substantive
    form is used here.
    """

    family = "double-phase"
    is_radial = True

    def __init__(self, p, q, weight, domain, dim=None, holder_alpha=1.0,
                 scale_p=1.0, scale_q=1.0):
        space_dim = domain.dim
        dim = dim or space_dim
        super().__init__(dim, space_dim, domain)
        if not 1.0 < p <= q:
            raise ConstructionFailure(f"need 1 < p <= q, got ({p}, {q})")
        if not 0.0 < holder_alpha <= 1.0:
            raise ConstructionFailure(f"holder_alpha must lie in (0, 1], got {holder_alpha}")
        self.p = float(p)
        self.q = float(q)
        self.holder_alpha = float(holder_alpha)
        self.scale_p = float(scale_p)
        self.scale_q = float(scale_q)
        self.weight = _coeff(weight, space_dim)
        w_lo, w_hi = self.weight.range_over(domain.lo, domain.hi)
        if w_lo < -1e-12:
            raise ConstructionFailure(f"weight must be nonnegative on the domain, min {w_lo:g}")
        self.weight_max = max(w_hi, 0.0)
        self.m1 = young_power(self.p, self.scale_p)
        if self.weight_max > 0.0:
            self.m2 = young_sum(
                [young_power(self.p, self.scale_p),
                 young_power(self.q, self.scale_q * self.weight_max)]
            )
        else:
            self.m2 = young_power(self.p, self.scale_p)
        self.is_separable = dim == 1

    def _a(self, X):
        return np.maximum(self.weight(X), 0.0)

    def _raw(self, X, XI):
        t = np.linalg.norm(XI, axis=1)
        return self.scale_p * t**self.p + self._a(X) * self.scale_q * t**self.q

    def canonical_gradient(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        a = self._a(X)
        t = _smooth_norm(XI, eps)
        fac_p = np.where(t > 0.0, self.scale_p * self.p * t ** (self.p - 2.0), 0.0)
        fac_q = np.where(t > 0.0, a * self.scale_q * self.q * t ** (self.q - 2.0), 0.0)
        return (fac_p + fac_q)[:, None] * XI

    def smoothed_evaluate(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        a = self._a(X)
        t = _smooth_norm(XI, eps)
        return (self.scale_p * (t**self.p - eps**self.p)
                + a * self.scale_q * (t**self.q - eps**self.q))

    def prescreen_margin(self):
        """Margin of q/p <= 1 + alpha/d; nonnegative means the smallness
        condition holds."""
        return 1.0 + self.holder_alpha / self.space_dim - self.q / self.p

    def weight_minimizer_in_ball(self, center, radius):
        g = np.asarray(self.weight.slope, dtype=float) if self.weight.slope else None
        if g is None or not np.any(g):
            return None
        c = np.asarray(center, dtype=float)
        return c - radius * (1.0 - 1e-9) * g / np.linalg.norm(g)

    def degeneracy_anchors(self, domain, k, rng):
        g = np.asarray(self.weight.slope, dtype=float) if self.weight.slope else None
        if g is None or not np.any(g):
            return None
        # project random domain points onto the hyperplane {a(x) = 0}
        pts = domain.sample(k, rng)
        shift = (self.weight(pts) / (g @ g))[:, None] * g[None, :]
        return pts - shift


class AnisotropicVariable(NFunction):
    """M(x, xi) = sum_i |xi_i|^p_i(x), each affine exponent clamped above 1."""

    family = "anisotropic-variable"
    is_separable = True

    def __init__(self, exponents, domain, bounds=None):
        space_dim = domain.dim
        dim = len(exponents)
        super().__init__(dim, space_dim, domain)
        self.exponents = [_coeff(e, space_dim) for e in exponents]
        los, his = [], []
        for i, e in enumerate(self.exponents):
            lo, hi = e.range_over(domain.lo, domain.hi)
            if bounds is not None:
                lo, hi = max(lo, bounds[0]), min(hi, bounds[1])
            if not 1.0 < lo <= hi:
                raise ConstructionFailure(
                    f"component {i} exponent range [{lo:g}, {hi:g}] must sit above 1")
            los.append(lo)
            his.append(hi)
        self.p_lo = np.asarray(los)
        self.p_hi = np.asarray(his)
        root_d = math.sqrt(dim)
        env = young_power_envelope(float(self.p_hi.max()), float(self.p_lo.min()))
        self.m1 = young_scaled_argument(env, 1.0 / root_d)
        self.m2 = young_power_upper(float(self.p_lo.min()), float(self.p_hi.max()),
                                    scale=float(dim))

    def _p_matrix(self, X):
        cols = [np.clip(e(X), lo, hi)
                for e, lo, hi in zip(self.exponents, self.p_lo, self.p_hi)]
        return np.stack(cols, axis=1)

    def _raw(self, X, XI):
        P = self._p_matrix(X)
        return np.sum(np.abs(XI) ** P, axis=1)

    def closed_form_conjugate(self, x, eta):
        X, ETA = _pair_batches(x, eta, self.space_dim, self.dim)
        P = self._p_matrix(X)
        return np.sum(_power_conjugate(P, 1.0, np.abs(ETA)), axis=1)

    def canonical_gradient(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        P = self._p_matrix(X)
        t = np.sqrt(XI * XI + eps * eps)
        fac = np.where(t > 0.0, P * t ** (P - 2.0), 0.0)
        return fac * XI

    def smoothed_evaluate(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        P = self._p_matrix(X)
        t = np.sqrt(XI * XI + eps * eps)
        return np.sum(t**P - eps**P, axis=1)


class AnisotropicDoublePhase(NFunction):
    """M(x, xi) = sum_i [ |xi_i|^p_i + a_i(x) |xi_i|^q_i ], a_i >= 0."""

    family = "anisotropic-double-phase"
    is_separable = True

    def __init__(self, ps, qs, weights, domain, holder_alpha=1.0):
        space_dim = domain.dim
        dim = len(ps)
        if not (len(qs) == len(weights) == dim):
            raise ConstructionFailure("ps, qs, weights must share a length")
        super().__init__(dim, space_dim, domain)
        self.ps = np.asarray([float(p) for p in ps])
        self.qs = np.asarray([float(q) for q in qs])
        if not np.all((1.0 < self.ps) & (self.ps <= self.qs)):
            raise ConstructionFailure("need 1 < p_i <= q_i per component")
        self.holder_alpha = float(holder_alpha)
        self.weights = [_coeff(w, space_dim) for w in weights]
        w_max = []
        for i, w in enumerate(self.weights):
            lo, hi = w.range_over(domain.lo, domain.hi)
            if lo < -1e-12:
                raise ConstructionFailure(f"weight {i} must be nonnegative, min {lo:g}")
            w_max.append(max(hi, 0.0))
        self.weight_max = np.asarray(w_max)
        root_d = math.sqrt(dim)
        env = young_power_envelope(float(self.qs.max()), float(self.ps.min()))
        self.m1 = young_scaled_argument(env, 1.0 / root_d)
        parts = [young_power_upper(float(self.ps.min()), float(self.ps.max()), scale=float(dim))]
        if self.weight_max.max() > 0.0:
            parts.append(young_power_upper(float(self.qs.min()), float(self.qs.max()),
                                           scale=float(dim * self.weight_max.max())))
        self.m2 = young_sum(parts)

    def _a_matrix(self, X):
        return np.stack([np.maximum(w(X), 0.0) for w in self.weights], axis=1)

    def _raw(self, X, XI):
        A = self._a_matrix(X)
        T = np.abs(XI)
        return np.sum(T**self.ps + A * T**self.qs, axis=1)

    def canonical_gradient(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        A = self._a_matrix(X)
        t = np.sqrt(XI * XI + eps * eps)
        fac = np.where(t > 0.0,
                       self.ps * t ** (self.ps - 2.0) + A * self.qs * t ** (self.qs - 2.0),
                       0.0)
        return fac * XI

    def smoothed_evaluate(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        A = self._a_matrix(X)
        t = np.sqrt(XI * XI + eps * eps)
        return np.sum(t**self.ps - eps**self.ps + A * (t**self.qs - eps**self.qs), axis=1)

    def weight_minimizer_in_ball(self, center, radius):
        slopes = [np.asarray(w.slope, dtype=float) for w in self.weights if w.slope]
        slopes = [g for g in slopes if np.any(g)]
        if not slopes:
            return None
        g = slopes[0]
        c = np.asarray(center, dtype=float)
        return c - radius * (1.0 - 1e-9) * g / np.linalg.norm(g)

    def degeneracy_anchors(self, domain, k, rng):
        for w in self.weights:
            g = np.asarray(w.slope, dtype=float) if w.slope else None
            if g is not None and np.any(g):
                pts = domain.sample(k, rng)
                shift = (w(pts) / (g @ g))[:, None] * g[None, :]
                return pts - shift
        return None


class ExpGrowth(NFunction):
    """Custom entry: M(x, xi) = exp(|xi|) - |xi| - 1.

    Grows faster than every power, so the complementary function grows
    slower than every power; conjugate in closed form:
    M*(x, eta) = (1 + |eta|) log(1 + |eta|) - |eta|.
    """

    family = "custom"
    is_radial = True

    def __init__(self, dim=2, domain=None, space_dim=None):
        super().__init__(dim, space_dim or (domain.dim if domain is not None else dim), domain)
        self.m1 = young_exp()
        self.m2 = young_exp()
        self.is_separable = dim == 1

    def _raw(self, X, XI):
        t = np.linalg.norm(XI, axis=1)
        return np.expm1(t) - t

    def closed_form_conjugate(self, x, eta):
        X, ETA = _pair_batches(x, eta, self.space_dim, self.dim)
        s = np.linalg.norm(ETA, axis=1)
        return (1.0 + s) * np.log1p(s) - s

    def canonical_gradient(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        t = _smooth_norm(XI, eps)
        fac = np.where(t > 1e-30, np.expm1(t) / np.where(t > 0, t, 1.0), 1.0)
        return fac[:, None] * XI

    def smoothed_evaluate(self, x, xi, eps=0.0):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        t = _smooth_norm(XI, eps)
        return (np.expm1(t) - t) - (math.expm1(eps) - eps)


CATALOG_FAMILIES = (
    "constant-power",
    "variable-exponent",
    "double-phase",
    "anisotropic-variable",
    "anisotropic-double-phase",
    "custom",
)


# ---------------------------------------------------------------------------
# Derivative-free conjugate search
# ---------------------------------------------------------------------------


def _golden_max(f, lo, hi, iters):
    """Vectorized golden-section maximization on per-row brackets.

    f maps an array of abscissae (N,) to values (N,). Returns the best
    abscissa/value ever evaluated (not just the final bracket midpoint).
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    width = b - a
    x1 = b - _INVPHI * width
    x2 = a + _INVPHI * width
    f1 = f(x1)
    f2 = f(x2)
    best_t = np.where(f1 >= f2, x1, x2)
    best_v = np.maximum(f1, f2)
    for _ in range(iters):
        left = f1 >= f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        width = b - a
        probe = np.where(left, b - _INVPHI * width, a + _INVPHI * width)
        fp = f(probe)
        x1, f1, x2, f2 = (
            np.where(left, probe, x2),
            np.where(left, fp, f2),
            np.where(left, x1, probe),
            np.where(left, f1, fp),
        )
        improved = fp > best_v
        best_t = np.where(improved, probe, best_t)
        best_v = np.where(improved, fp, best_v)
    return best_t, best_v


def _ray_supremum(loss, s, r0=8.0, grid=32, iters=30, max_doublings=60):
    """sup_{t >= 0} [ s t - loss(t) ] per row, by geometric scan plus
    golden refinement, doubling the radius of any row whose scan maximum
    sits at the outer edge.

    loss maps (t, rows) -> values, where rows aligns each abscissa with
    its query row; s is the per-row linear coefficient. Returns
    (value, argmax); value is clipped at 0 (the t = 0 candidate).
    """
    s = np.asarray(s, dtype=float)
    n = s.size
    profile = np.concatenate([[0.0], np.geomspace(1e-7, 1.0, grid)])
    G = profile.size
    R = np.full(n, float(r0))
    lo = np.zeros(n)
    hi = np.zeros(n)
    scan_v = np.empty(n)
    scan_t = np.empty(n)
    active = np.arange(n)
    for round_idx in range(max_doublings + 1):
        m = active.size
        ts = R[active, None] * profile[None, :]
        rows = np.repeat(active, G)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = s[active, None] * ts - loss(ts.ravel(), rows).reshape(m, G)
        vals = np.where(np.isnan(vals), -np.inf, vals)
        k = np.argmax(vals, axis=1)
        rr = np.arange(m)
        lo[active] = ts[rr, np.maximum(k - 1, 0)]
        hi[active] = ts[rr, np.minimum(k + 1, G - 1)]
        scan_v[active] = vals[rr, k]
        scan_t[active] = ts[rr, k]
        edge = k >= G - 2
        if not edge.any():
            break
        if round_idx == max_doublings:
            raise SearchRadiusExhausted(
                f"no interior maximizer within radius {R.max():g}")
        active = active[edge]
        R[active] *= 2.0

    all_rows = np.arange(n)

    def g(t):
        with np.errstate(over="ignore", invalid="ignore"):
            out = s * t - loss(t, all_rows)
        return np.where(np.isnan(out), -np.inf, out)

    t_best, v_best = _golden_max(g, lo, hi, iters)
    better = scan_v > v_best
    t_best = np.where(better, scan_t, t_best)
    v_best = np.maximum(np.maximum(v_best, scan_v), 0.0)
    t_best = np.where(v_best > 0.0, t_best, 0.0)
    return v_best, t_best


@dataclass
class ConjugateSearchConfig:
    """Knobs for the derivative-free conjugate search."""

    r0: float = 8.0
    radial_grid: int = 32
    golden_iters: int = 30
    sweeps: int = 3
    step_frac: float = 0.75
    max_expand: int = 8
    max_doublings: int = 60


class ConjugateEvaluator:
    """Evaluator for M*(x, eta) = sup_xi [ xi . eta - M(x, xi) ].

    Uses the integrand's closed form when available (and permitted),
    otherwise a derivative-free ascent: supremum along the ray eta for
    radial integrands, per-coordinate scalar suprema for separable ones,
    and a radial seed refined by coordinate golden-section sweeps in the
    generic case. The search never needs derivatives of M.

    Parameters
    ----------
    source : NFunction or integrand-like
        Needs ``evaluate``/``dim``/``space_dim``; structure flags and a
        closed form are used when present.
    r_max : float
        Initial search radius; doubled while the maximizer presses the
        edge, so it only sets the starting scale.
    radial_grid : int
        Points in the geometric bracketing scan.
    tol : float
        Relative refinement target; sets the golden-section iteration
        count.
    """

    def __init__(self, source, r_max=8.0, radial_grid=32, tol=1e-8,
                 use_closed_form=True, config=None):
        self.source = source
        self.use_closed_form = use_closed_form
        iters = max(20, int(math.ceil(math.log(0.01 * math.sqrt(tol)) / math.log(_INVPHI))))
        self.config = config or ConjugateSearchConfig(
            r0=r_max, radial_grid=radial_grid, golden_iters=iters)
        self.tol = tol

    def value(self, x, eta, extra_seeds=None):
        X = _as_batch(x, self.source.space_dim)
        ETA = _as_batch(eta, self.source.dim)
        seeds = None if extra_seeds is None else _as_batch(extra_seeds, self.source.dim)
        return float(self.value_batch(X, ETA, seeds)[0])

    def value_batch(self, x, eta, extra_seeds=None):
        """M*(x, eta) for batched inputs, shape (N,)."""
        X, ETA = _pair_batches(x, eta, self.source.space_dim, self.source.dim)
        if self.use_closed_form:
            closed = self.source.closed_form_conjugate(X, ETA)
            if closed is not None:
                return np.asarray(closed, dtype=float)
        if getattr(self.source, "is_separable", False):
            vals = self._separable(X, ETA)
        elif getattr(self.source, "is_radial", False):
            vals, _ = self._radial(X, ETA)
        else:
            vals = self._generic(X, ETA)
        if extra_seeds is not None:
            S = _as_batch(extra_seeds, self.source.dim)
            if S.shape[0] == 1:
                S = np.broadcast_to(S, ETA.shape)
            seed_vals = np.sum(S * ETA, axis=1) - self.source.evaluate(X, S)
            vals = np.maximum(vals, seed_vals)
        return vals

    def _radial(self, X, ETA):
        norms = np.linalg.norm(ETA, axis=1)
        dirs = ETA / np.where(norms > 0.0, norms, 1.0)[:, None]
        zero = norms == 0.0
        if zero.any():
            dirs = dirs.copy()
            dirs[zero] = 0.0
            dirs[zero, 0] = 1.0

        def loss(t, rows):
            return self.source.evaluate(X[rows], t[:, None] * dirs[rows])

        cfg = self.config
        vals, ts = _ray_supremum(loss, norms, cfg.r0, cfg.radial_grid,
                                 cfg.golden_iters, cfg.max_doublings)
        return vals, ts[:, None] * dirs

    def _separable(self, X, ETA):
        n, d = ETA.shape
        cfg = self.config
        point = np.zeros_like(ETA)
        for j in range(d):
            sj = np.abs(ETA[:, j])
            sign = np.where(ETA[:, j] >= 0.0, 1.0, -1.0)

            def loss(t, rows, _j=j, _sign=sign):
                XI = np.zeros((t.size, d))
                XI[:, _j] = _sign[rows] * t
                return self.source.evaluate(X[rows], XI)

            _, tj = _ray_supremum(loss, sj, cfg.r0, cfg.radial_grid,
                                  cfg.golden_iters, cfg.max_doublings)
            point[:, j] = sign * tj
        vals = np.sum(point * ETA, axis=1) - self.source.evaluate(X, point)
        return np.maximum(vals, 0.0)

    def _generic(self, X, ETA):
        vals, point = self._radial(X, ETA)
        cfg = self.config
        n, d = ETA.shape
        for _ in range(cfg.sweeps):
            for j in range(d):
                center = point[:, j]
                w = cfg.step_frac * (1.0 + np.max(np.abs(point), axis=1))
                for _round in range(cfg.max_expand):
                    def g(t, _j=j):
                        XI = point.copy()
                        XI[:, _j] = t
                        out = np.sum(XI * ETA, axis=1) - self.source.evaluate(X, XI)
                        return np.where(np.isnan(out), -np.inf, out)

                    t_best, v_best = _golden_max(g, center - w, center + w,
                                                 cfg.golden_iters)
                    near_edge = np.abs(t_best - center) > 0.9 * w
                    improved = v_best > vals
                    point[:, j] = np.where(improved, t_best, point[:, j])
                    vals = np.maximum(vals, v_best)
                    if not near_edge.any():
                        break
                    center = point[:, j]
                    w = np.where(near_edge, 2.0 * w, w)
        return np.maximum(vals, 0.0)


def eval_conjugate(evaluator, x, eta, extra_seeds=None):
    """M*(x, eta) through a ConjugateEvaluator."""
    return evaluator.value(x, eta, extra_seeds)


class ConjugateIntegrand:
    """Presents M* as an integrand so it can be conjugated or integrated.

    The scalar envelopes swap and conjugate: m2(|.|) >= M >= m1(|.|)
    yields conj(m2) <= M* <= conj(m1).
    """

    family = "conjugate"

    def __init__(self, source, evaluator=None):
        self.source = source
        self.evaluator = evaluator or ConjugateEvaluator(source)
        self.dim = source.dim
        self.space_dim = source.space_dim
        self.domain = source.domain
        self.is_radial = getattr(source, "is_radial", False)
        self.is_separable = getattr(source, "is_separable", False)
        self.m1 = source.m2.conjugate()
        self.m2 = source.m1.conjugate()

    def evaluate(self, x, xi):
        X, XI = _pair_batches(x, xi, self.space_dim, self.dim)
        out = self.evaluator.value_batch(X, XI)
        if np.ndim(x) <= 1 and np.ndim(xi) == 1:
            return float(out[0])
        return out

    def closed_form_conjugate(self, x, eta):
        return None


# ---------------------------------------------------------------------------
# Sampled duality checks
# ---------------------------------------------------------------------------


@dataclass
class FenchelYoungReport:
    """Sampled margins of xi . eta <= M(x, xi) + M*(x, eta)."""

    passed: bool
    margins: np.ndarray
    worst: float
    violations: list = field(default_factory=list)


def check_fenchel_young(nf, points, xis, etas, evaluator=None, tol=1e-10):
    """Check the Fenchel-Young inequality on sample triples.

    The conjugate value is fed each sample's own xi as an extra seed, so
    the reported margin M + M* - xi . eta is nonnegative up to rounding
    whenever the search is sound.
    """
    evaluator = evaluator or ConjugateEvaluator(nf)
    X = _as_batch(points, nf.space_dim)
    XI = _as_batch(xis, nf.dim)
    ETA = _as_batch(etas, nf.dim)
    m_vals = nf.evaluate(X, XI)
    conj_vals = evaluator.value_batch(X, ETA, extra_seeds=XI)
    pairing = np.sum(XI * ETA, axis=1)
    margins = m_vals + conj_vals - pairing
    scale = 1.0 + np.abs(m_vals) + np.abs(conj_vals)
    bad = margins < -tol * scale
    violations = [
        {"x": X[i].copy(), "xi": XI[i].copy(), "eta": ETA[i].copy(),
         "margin": float(margins[i])}
        for i in np.nonzero(bad)[0]
    ]
    return FenchelYoungReport(not bad.any(), margins, float(margins.min()), violations)


@dataclass
class BiconjugationReport:
    """Sampled deviation of M** from M."""

    passed: bool
    deviations: np.ndarray
    worst: float
    violations: list = field(default_factory=list)


def check_biconjugation(nf, points, xis, tol=1e-5, evaluator=None):
    """Verify M**(x, xi) = M(x, xi) on samples.

    Both transforms run through ConjugateEvaluator; deviation is
    measured as |M** - M| / max(1, |M|).
    """
    X = _as_batch(points, nf.space_dim)
    XI = _as_batch(xis, nf.dim)
    inner = evaluator or ConjugateEvaluator(nf)
    wrapped = ConjugateIntegrand(nf, inner)
    outer = ConjugateEvaluator(wrapped)
    m_vals = nf.evaluate(X, XI)
    mm_vals = outer.value_batch(X, XI)
    deviations = np.abs(mm_vals - m_vals) / np.maximum(1.0, np.abs(m_vals))
    bad = deviations > tol
    violations = [
        {"x": X[i].copy(), "xi": XI[i].copy(), "m": float(m_vals[i]),
         "biconj": float(mm_vals[i]), "deviation": float(deviations[i])}
        for i in np.nonzero(bad)[0]
    ]
    return BiconjugationReport(not bad.any(), deviations, float(deviations.max()), violations)


def sample_vectors(dim, n, rng, r_lo=0.05, r_hi=3.0):
    """n random vectors with log-uniform magnitudes in [r_lo, r_hi]."""
    dirs = rng.normal(size=(n, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.exp(rng.uniform(math.log(r_lo), math.log(r_hi), size=n))
    return radii[:, None] * dirs

"""Meshes, quadrature and P1 hat bases on intervals and rectangles.

Supported domains are boxes: an interval in 1D, an axis-aligned
rectangle in 2D (triangulated by splitting each grid square along the
diagonal). Quadrature is Gauss-Legendre with 3 points per interval cell
and the symmetric 7-point rule per triangle, both exact for polynomials
up to degree 5.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .modular import DiscreteField


class UnsupportedDomain(ValueError):
    """Domain kind outside the supported catalog."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box domain."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise UnsupportedDomain("lo/hi dimension mismatch")
        if not all(a < b for a, b in zip(self.lo, self.hi)):
            raise UnsupportedDomain("box must have positive extent")

    @property
    def dim(self):
        return len(self.lo)

    @property
    def volume(self):
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))

    def contains(self, X, pad=1e-12):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        lo = np.asarray(self.lo) - pad
        hi = np.asarray(self.hi) + pad
        return np.all((X >= lo) & (X <= hi), axis=1)

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def clip_inside(self, X, margin=0.0):
        lo = np.asarray(self.lo) + margin
        hi = np.asarray(self.hi) - margin
        return np.clip(X, lo, hi)


def build_domain(kind, lo=None, hi=None):
    """Construct a catalog domain; kind is 'interval' or 'rectangle'."""
    if kind == "interval":
        lo = (0.0,) if lo is None else tuple(float(v) for v in np.atleast_1d(lo))
        hi = (1.0,) if hi is None else tuple(float(v) for v in np.atleast_1d(hi))
        if len(lo) != 1 or len(hi) != 1:
            raise UnsupportedDomain("interval is one-dimensional")
        return Box(lo, hi)
    if kind == "rectangle":
        lo = (0.0, 0.0) if lo is None else tuple(float(v) for v in np.atleast_1d(lo))
        hi = (1.0, 1.0) if hi is None else tuple(float(v) for v in np.atleast_1d(hi))
        if len(lo) != 2 or len(hi) != 2:
            raise UnsupportedDomain("rectangle is two-dimensional")
        return Box(lo, hi)
    raise UnsupportedDomain(f"unsupported domain kind '{kind}'")


@dataclass(frozen=True)
class QuadratureRule:
    """Reference-cell rule: points in barycentric or unit coordinates,
    weights summing to 1, and the exact polynomial degree."""

    points: np.ndarray
    weights: np.ndarray
    degree: int


def interval_rule():
    """3-point Gauss-Legendre on [0, 1], exact through degree 5."""
    nodes, weights = np.polynomial.legendre.leggauss(3)
    return QuadratureRule(0.5 * (nodes + 1.0), 0.5 * weights, 5)


def triangle_rule():
    """Symmetric 7-point rule on the reference triangle, exact through
    degree 5. Points are barycentric rows; weights sum to 1."""
    sqrt15 = np.sqrt(15.0)
    a1 = (6.0 - sqrt15) / 21.0
    a2 = (6.0 + sqrt15) / 21.0
    w1 = (155.0 - sqrt15) / 1200.0
    w2 = (155.0 + sqrt15) / 1200.0
    pts = [(1 / 3, 1 / 3, 1 / 3)]
    wts = [9.0 / 40.0]
    for a, w in ((a1, w1), (a2, w2)):
        pts += [(a, a, 1 - 2 * a), (a, 1 - 2 * a, a), (1 - 2 * a, a, a)]
        wts += [w, w, w]
    return QuadratureRule(np.array(pts), np.array(wts), 5)


@dataclass
class Mesh:
    """Simplicial mesh of a box domain.

    vertices : (Nv, sx)
    cells : (Nc, sx + 1) vertex indices (segments in 1D, triangles in 2D)
    boundary : (Nv,) True at boundary vertices
    resolution : cells per box edge
    """

    domain: Box
    vertices: np.ndarray
    cells: np.ndarray
    boundary: np.ndarray
    resolution: int

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def h(self):
        """Diameter of the largest cell."""
        v = self.vertices[self.cells]
        if self.dim == 1:
            return float(np.max(np.abs(v[:, 1, 0] - v[:, 0, 0])))
        diam = 0.0
        for i in range(3):
            for j in range(i + 1, 3):
                diam = max(diam, float(np.max(np.linalg.norm(v[:, i] - v[:, j], axis=1))))
        return diam

    def cell_volumes(self):
        v = self.vertices[self.cells]
        if self.dim == 1:
            return np.abs(v[:, 1, 0] - v[:, 0, 0])
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def to_csv(self, path):
        """Vertices with boundary flags, then cells, in one file."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["section", "index"]
                            + [f"c{i+1}" for i in range(max(self.dim, self.cells.shape[1]))])
            for i, (v, b) in enumerate(zip(self.vertices, self.boundary)):
                row = ["vertex", i] + [f"{c:.17g}" for c in v] + [int(b)]
                writer.writerow(row)
            for i, cell in enumerate(self.cells):
                writer.writerow(["cell", i] + [int(c) for c in cell])


def build_mesh(domain, resolution):
    """Uniform mesh with ``resolution`` cells per box edge (>= 2)."""
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution}")
    r = int(resolution)
    if domain.dim == 1:
        verts = np.linspace(domain.lo[0], domain.hi[0], r + 1).reshape(-1, 1)
        cells = np.column_stack([np.arange(r), np.arange(1, r + 1)])
        boundary = np.zeros(r + 1, dtype=bool)
        boundary[0] = boundary[-1] = True
        return Mesh(domain, verts, cells, boundary, r)
    if domain.dim == 2:
        xs = np.linspace(domain.lo[0], domain.hi[0], r + 1)
        ys = np.linspace(domain.lo[1], domain.hi[1], r + 1)
        gx, gy = np.meshgrid(xs, ys, indexing="xy")
        verts = np.column_stack([gx.ravel(), gy.ravel()])

        def vid(i, j):
            return j * (r + 1) + i

        cells = []
        for j in range(r):
            for i in range(r):
                v00, v10 = vid(i, j), vid(i + 1, j)
                v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
                cells.append((v00, v10, v11))
                cells.append((v00, v11, v01))
        cells = np.asarray(cells, dtype=int)
        boundary = np.zeros(verts.shape[0], dtype=bool)
        ii = np.arange(r + 1)
        for i in ii:
            boundary[vid(i, 0)] = boundary[vid(i, r)] = True
            boundary[vid(0, i)] = boundary[vid(r, i)] = True
        return Mesh(domain, verts, cells, boundary, r)
    raise UnsupportedDomain("meshes exist for 1D and 2D boxes only")


class BasisSet:
    """P1 hat functions on the interior vertices of a mesh.

    Tabulates basis values and gradients at the quadrature points of
    every cell; hats attached to boundary vertices are excluded, so each
    basis function vanishes on the domain boundary.
    """

    def __init__(self, mesh, rule=None):
        self.mesh = mesh
        d = mesh.dim
        self.rule = rule or (interval_rule() if d == 1 else triangle_rule())
        interior = np.nonzero(~mesh.boundary)[0]
        self.interior_ids = interior
        self.n = interior.size
        vertex_to_dof = -np.ones(mesh.vertices.shape[0], dtype=int)
        vertex_to_dof[interior] = np.arange(self.n)
        self.cell_dofs = vertex_to_dof[mesh.cells]  # (Nc, nloc), -1 on boundary

        v = mesh.vertices[mesh.cells]  # (Nc, nloc, d)
        nq = self.rule.weights.size
        if d == 1:
            lengths = np.abs(v[:, 1, 0] - v[:, 0, 0])
            t = self.rule.points
            self.qp_points = (v[:, 0, 0, None] + lengths[:, None] * t[None, :])[:, :, None]
            self.qp_weights = lengths[:, None] * self.rule.weights[None, :]
            self.basis_values = np.broadcast_to(
                np.column_stack([1.0 - t, t])[None, :, :],
                (mesh.cells.shape[0], nq, 2)).copy()
            grads = np.stack([-1.0 / lengths, 1.0 / lengths], axis=1)
            self.basis_grads = grads[:, :, None]  # (Nc, 2, 1)
        else:
            bary = self.rule.points  # (nq, 3)
            self.qp_points = np.einsum("qk,ckd->cqd", bary, v)
            areas = mesh.cell_volumes()
            self.qp_weights = areas[:, None] * self.rule.weights[None, :]
            self.basis_values = np.broadcast_to(
                bary[None, :, :], (mesh.cells.shape[0], nq, 3)).copy()
            # gradients of barycentric coordinates: rows of the inverse
            # edge matrix; grad l0 = -(grad l1 + grad l2)
            e1 = v[:, 1] - v[:, 0]
            e2 = v[:, 2] - v[:, 0]
            det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            g1 = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
            g2 = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
            g0 = -(g1 + g2)
            self.basis_grads = np.stack([g0, g1, g2], axis=1)  # (Nc, 3, 2)
        self.quad_points = self.qp_points.reshape(-1, d)
        self.quad_weights = self.qp_weights.reshape(-1)

    @property
    def nloc(self):
        return self.mesh.cells.shape[1]

    def interpolate(self, alpha):
        """Values and gradients at all quadrature points of
        u = sum_k alpha_k w_k. Returns (u (Nq,), grad (Nq, d))."""
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (self.n,):
            raise ValueError(f"expected coefficient vector of length {self.n}")
        padded = np.concatenate([alpha, [0.0]])
        local = padded[self.cell_dofs]  # (Nc, nloc), boundary -> 0
        u = np.einsum("cql,cl->cq", self.basis_values, local)
        grad = np.einsum("cl,cld->cd", local, self.basis_grads)
        nq = self.rule.weights.size
        grad_q = np.broadcast_to(grad[:, None, :], (grad.shape[0], nq, grad.shape[1]))
        return u.reshape(-1), grad_q.reshape(-1, self.mesh.dim)

    def field(self, values):
        """Wrap per-quadrature-point values as a DiscreteField."""
        return DiscreteField(self.quad_points, self.quad_weights,
                             np.asarray(values, dtype=float))

    def solution_fields(self, alpha):
        u, grad = self.interpolate(alpha)
        return self.field(u), self.field(grad)

    def _locate(self, points):
        """Cell index for each point of an array (points clipped into the
        box; ties at cell interfaces resolve to the lower cell)."""
        mesh = self.mesh
        r = mesh.resolution
        lo = np.asarray(mesh.domain.lo)
        hi = np.asarray(mesh.domain.hi)
        P = np.clip(np.asarray(points, dtype=float).reshape(-1, mesh.dim), lo, hi)
        rel = (P - lo) / (hi - lo) * r
        ij = np.minimum(rel.astype(int), r - 1)
        frac = rel - ij
        if mesh.dim == 1:
            return ij[:, 0], frac
        lower = frac[:, 0] >= frac[:, 1]  # below the v00->v11 diagonal
        cell = 2 * (ij[:, 1] * r + ij[:, 0]) + np.where(lower, 0, 1)
        return cell, frac

    def evaluate_at(self, alpha, points):
        """Evaluate u and grad u at arbitrary points of the domain."""
        alpha = np.asarray(alpha, dtype=float)
        padded = np.concatenate([alpha, [0.0]])
        cell, frac = self._locate(points)
        local = padded[self.cell_dofs[cell]]  # (Np, nloc)
        if self.mesh.dim == 1:
            t = frac[:, 0]
            u = local[:, 0] * (1.0 - t) + local[:, 1] * t
            grad = np.einsum("pl,pld->pd", local, self.basis_grads[cell])
            return u, grad
        P = np.asarray(points, dtype=float).reshape(-1, 2)
        v0 = self.mesh.vertices[self.mesh.cells[cell, 0]]
        grads = self.basis_grads[cell]  # (Np, 3, 2)
        # barycentric coordinates from the affine map: l_k = l_k(v0) + g_k . (p - v0)
        diff = P - v0
        bary = np.einsum("pld,pd->pl", grads, diff)
        bary[:, 0] += 1.0
        u = np.sum(local * bary, axis=1)
        grad = np.einsum("pl,pld->pd", local, grads)
        return u, grad

    def mass_matrix(self):
        """Interior-hat mass matrix (for linear-independence checks)."""
        M = np.zeros((self.n, self.n))
        vals = self.basis_values * self.qp_weights[:, :, None]
        local_mass = np.einsum("cqa,cqb->cab", vals, self.basis_values)
        dofs = self.cell_dofs
        for a in range(self.nloc):
            for b in range(self.nloc):
                da, db = dofs[:, a], dofs[:, b]
                keep = (da >= 0) & (db >= 0)
                np.add.at(M, (da[keep], db[keep]), local_mass[keep, a, b])
        return M

    def stiffness_matrix(self):
        """Interior-hat stiffness matrix int grad w_a . grad w_b dx."""
        K = np.zeros((self.n, self.n))
        cell_w = self.qp_weights.sum(axis=1)
        local = np.einsum("c,cad,cbd->cab", cell_w, self.basis_grads, self.basis_grads)
        dofs = self.cell_dofs
        for a in range(self.nloc):
            for b in range(self.nloc):
                da, db = dofs[:, a], dofs[:, b]
                keep = (da >= 0) & (db >= 0)
                np.add.at(K, (da[keep], db[keep]), local[keep, a, b])
        return K

    def load_vector(self, values):
        """f_j = int v . grad w_j dx for vector samples, or
        int v w_j dx for scalar samples, at the quadrature points."""
        values = np.asarray(values, dtype=float)
        ncells, nq = self.qp_weights.shape
        out = np.zeros(self.n)
        dofs = self.cell_dofs
        if values.ndim == 2:
            v = values.reshape(ncells, nq, -1)
            contrib = np.einsum("cq,cqd,cld->cl", self.qp_weights, v, self.basis_grads)
        else:
            v = values.reshape(ncells, nq)
            contrib = np.einsum("cq,cq,cql->cl", self.qp_weights, v, self.basis_values)
        for a in range(self.nloc):
            da = dofs[:, a]
            keep = da >= 0
            np.add.at(out, da[keep], contrib[keep, a])
        return out

    def poincare_ratio(self, rng, trials=64):
        """max ||u||_L1 / ||grad u||_L1 over random coefficient vectors;
        a sampled stand-in for the Poincare constant of the mesh."""
        worst = 0.0
        for _ in range(trials):
            alpha = rng.normal(size=self.n)
            u, grad = self.interpolate(alpha)
            num = float(self.quad_weights @ np.abs(u))
            den = float(self.quad_weights @ np.linalg.norm(grad, axis=1))
            if den > 0.0:
                worst = max(worst, num / den)
        return worst

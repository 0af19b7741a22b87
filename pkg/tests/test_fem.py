"""Meshes, quadrature rules, and the interior P1 hat basis."""

import numpy as np
import pytest

from musielak import (BasisSet, UnsupportedDomain, build_domain, build_mesh,
                      interval_rule, triangle_rule)
from conftest import INTERVAL, SQUARE


# ---------------------------------------------------------------------------
# Domains and meshes
# ---------------------------------------------------------------------------


def test_build_domain_catalog():
    assert build_domain("interval").dim == 1
    assert build_domain("rectangle").dim == 2
    assert build_domain("interval", lo=-1.0, hi=3.0).volume == 4.0
    with pytest.raises(UnsupportedDomain):
        build_domain("ball")
    with pytest.raises(UnsupportedDomain):
        build_domain("interval", lo=(0.0, 0.0), hi=(1.0, 1.0))
    with pytest.raises(UnsupportedDomain):
        build_domain("interval", lo=2.0, hi=1.0)


def test_interval_mesh_counts_and_h():
    mesh = build_mesh(INTERVAL, 4)
    assert mesh.vertices.shape == (5, 1)
    assert mesh.cells.shape == (4, 2)
    assert list(mesh.boundary) == [True, False, False, False, True]
    assert mesh.h == pytest.approx(0.25)
    assert mesh.cell_volumes() == pytest.approx(np.full(4, 0.25))


def test_rectangle_mesh_counts_and_h():
    mesh = build_mesh(SQUARE, 4)
    assert mesh.vertices.shape == (25, 2)
    assert mesh.cells.shape == (32, 3)
    assert int(mesh.boundary.sum()) == 16
    assert mesh.h == pytest.approx(0.25 * np.sqrt(2.0))
    assert mesh.cell_volumes().sum() == pytest.approx(1.0, rel=1e-14)


def test_build_mesh_rejects_degenerate_resolution():
    with pytest.raises(ValueError):
        build_mesh(INTERVAL, 1)


def test_mesh_csv_lists_vertices_then_cells(tmp_path):
    mesh = build_mesh(INTERVAL, 4)
    path = tmp_path / "mesh.csv"
    mesh.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1 + 5 + 4
    assert lines[1].startswith("vertex,0")
    assert lines[-1].startswith("cell,3")


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def test_reference_rules_are_normalized():
    for rule in (interval_rule(), triangle_rule()):
        assert rule.weights.sum() == pytest.approx(1.0, rel=1e-14)
        assert rule.degree == 5


def test_interval_quadrature_integrates_quintics_exactly():
    basis = BasisSet(build_mesh(INTERVAL, 3))
    x = basis.quad_points[:, 0]
    for k in range(6):
        value = basis.quad_weights @ x**k
        assert value == pytest.approx(1.0 / (k + 1), rel=1e-13)


def test_triangle_quadrature_integrates_quintics_exactly():
    basis = BasisSet(build_mesh(SQUARE, 2))
    x, y = basis.quad_points[:, 0], basis.quad_points[:, 1]
    for a in range(6):
        for b in range(6 - a):
            value = basis.quad_weights @ (x**a * y**b)
            assert value == pytest.approx(1.0 / ((a + 1) * (b + 1)), rel=1e-12)


def test_quadrature_weights_sum_to_volume():
    dom = build_domain("interval", lo=1.0, hi=3.0)
    basis = BasisSet(build_mesh(dom, 5))
    assert basis.quad_weights.sum() == pytest.approx(2.0, rel=1e-14)


# ---------------------------------------------------------------------------
# Hat basis
# ---------------------------------------------------------------------------


def test_interior_dof_counts():
    assert BasisSet(build_mesh(INTERVAL, 8)).n == 7
    assert BasisSet(build_mesh(SQUARE, 4)).n == 9


def test_local_basis_is_a_partition_of_unity():
    for dom, r in ((INTERVAL, 6), (SQUARE, 3)):
        basis = BasisSet(build_mesh(dom, r))
        sums = basis.basis_values.sum(axis=2)
        assert np.allclose(sums, 1.0, atol=1e-14)


def test_single_hat_on_the_interval():
    basis = BasisSet(build_mesh(INTERVAL, 2))
    assert basis.n == 1
    u, grad = basis.interpolate(np.array([1.0]))
    left = basis.quad_points[:, 0] < 0.5
    assert np.allclose(grad[left, 0], 2.0)
    assert np.allclose(grad[~left, 0], -2.0)
    u_at, grad_at = basis.evaluate_at(np.array([1.0]), np.array([[0.5], [0.25]]))
    assert u_at == pytest.approx([1.0, 0.5])
    assert grad_at[1, 0] == pytest.approx(2.0)


def test_hats_vanish_on_the_boundary(rng):
    basis = BasisSet(build_mesh(SQUARE, 4))
    alpha = rng.normal(size=basis.n)
    edge = np.array([[0.0, 0.3], [1.0, 0.7], [0.25, 0.0], [0.5, 1.0], [0.0, 0.0]])
    u, _ = basis.evaluate_at(alpha, edge)
    assert np.allclose(u, 0.0, atol=1e-15)


def test_evaluate_at_agrees_with_interpolate(rng):
    for dom, r in ((INTERVAL, 7), (SQUARE, 4)):
        basis = BasisSet(build_mesh(dom, r))
        alpha = rng.normal(size=basis.n)
        u, grad = basis.interpolate(alpha)
        u_at, grad_at = basis.evaluate_at(alpha, basis.quad_points)
        assert np.allclose(u_at, u, atol=1e-12)
        assert np.allclose(grad_at, grad, atol=1e-12)


def test_interpolate_rejects_wrong_length():
    basis = BasisSet(build_mesh(INTERVAL, 4))
    with pytest.raises(ValueError):
        basis.interpolate(np.zeros(basis.n + 1))


def test_interpolate_is_linear_in_coefficients(rng):
    basis = BasisSet(build_mesh(SQUARE, 3))
    a = rng.normal(size=basis.n)
    b = rng.normal(size=basis.n)
    ua, ga = basis.interpolate(a)
    ub, gb = basis.interpolate(b)
    uc, gc = basis.interpolate(2.0 * a - 3.0 * b)
    assert np.allclose(uc, 2.0 * ua - 3.0 * ub, atol=1e-13)
    assert np.allclose(gc, 2.0 * ga - 3.0 * gb, atol=1e-12)


# ---------------------------------------------------------------------------
# Assembled matrices and load vectors
# ---------------------------------------------------------------------------


def test_interval_mass_and_stiffness_hand_values():
    basis = BasisSet(build_mesh(INTERVAL, 2))
    assert basis.mass_matrix() == pytest.approx(np.array([[1.0 / 3.0]]), rel=1e-13)
    assert basis.stiffness_matrix() == pytest.approx(np.array([[4.0]]), rel=1e-13)


def test_interval_stiffness_is_the_standard_tridiagonal():
    K = BasisSet(build_mesh(INTERVAL, 4)).stiffness_matrix()
    expected = np.array([[8.0, -4.0, 0.0], [-4.0, 8.0, -4.0], [0.0, -4.0, 8.0]])
    assert K == pytest.approx(expected, rel=1e-13)


def test_square_center_hat_hand_values():
    basis = BasisSet(build_mesh(SQUARE, 2))
    assert basis.n == 1
    assert basis.mass_matrix() == pytest.approx(np.array([[0.125]]), rel=1e-13)
    assert basis.stiffness_matrix() == pytest.approx(np.array([[4.0]]), rel=1e-13)
    u, _ = basis.evaluate_at(np.array([1.0]), np.array([[0.5, 0.5]]))
    assert u[0] == pytest.approx(1.0)


def test_assembled_matrices_are_spd():
    for dom, r in ((INTERVAL, 8), (SQUARE, 4)):
        basis = BasisSet(build_mesh(dom, r))
        for mat in (basis.mass_matrix(), basis.stiffness_matrix()):
            assert np.allclose(mat, mat.T, atol=1e-13)
            assert np.linalg.eigvalsh(mat).min() > 0.0


def test_load_vector_of_constants():
    basis = BasisSet(build_mesh(INTERVAL, 4))
    scalar = basis.load_vector(np.ones(basis.quad_points.shape[0]))
    assert scalar == pytest.approx(np.full(3, 0.25), rel=1e-13)
    vector = basis.load_vector(np.ones((basis.quad_points.shape[0], 1)))
    assert vector == pytest.approx(np.zeros(3), abs=1e-14)


def test_load_vector_matches_stiffness_action(rng):
    # int (grad u) . grad w_j = (K alpha)_j for u = sum alpha_k w_k
    basis = BasisSet(build_mesh(SQUARE, 4))
    alpha = rng.normal(size=basis.n)
    _, grad = basis.interpolate(alpha)
    assert np.allclose(basis.load_vector(grad), basis.stiffness_matrix() @ alpha,
                       atol=1e-12)


def test_poincare_ratio_respects_the_interval_bound(rng):
    # |u(x)| <= 0.5 ||u'||_L1 for u vanishing at both ends
    ratio = BasisSet(build_mesh(INTERVAL, 16)).poincare_ratio(rng)
    assert 0.0 < ratio <= 0.5 + 1e-12


def test_solution_fields_wrap_interpolation(rng):
    basis = BasisSet(build_mesh(SQUARE, 3))
    alpha = rng.normal(size=basis.n)
    u_field, grad_field = basis.solution_fields(alpha)
    assert not u_field.is_vector
    assert grad_field.values.shape == (basis.quad_points.shape[0], 2)
    assert np.array_equal(u_field.points, basis.quad_points)

"""Sampled balance-condition checks on catalog integrands."""

import numpy as np
import pytest

from musielak import (AffineCoefficient, BalanceProbe, ConstantPower,
                      DoublePhase, VariableExponent, check_balance,
                      smallest_passing_cm)
from conftest import INTERVAL, SQUARE

LIGHT = dict(ball_count=8, xi_per_ball=24, x_samples=3, y_samples=32,
             refine_steps=8)


def light_probe(c_m=2.0, **overrides):
    kw = dict(LIGHT)
    kw.update(overrides)
    return BalanceProbe(c_m=c_m, **kw)


def boundary_double_phase():
    # q/p = 1.5 sits exactly at 1 + alpha/d for an affine weight in 2D
    return DoublePhase(2.0, 3.0, AffineCoefficient(0.0, (1.0, 0.0)), SQUARE)


def violating_double_phase():
    # q/p = 2 > 1 + alpha/d = 1.5
    return DoublePhase(2.0, 4.0, AffineCoefficient(0.0, (1.0, 0.0)), SQUARE)


def test_probe_rejects_constants_at_or_below_one():
    with pytest.raises(ValueError):
        BalanceProbe(c_m=1.0)
    with pytest.raises(ValueError):
        BalanceProbe(c_m=0.5)


def test_check_balance_needs_a_domain():
    with pytest.raises(ValueError):
        check_balance(ConstantPower(p=2.0, dim=2))


def test_constant_power_passes_at_two():
    report = check_balance(ConstantPower(p=2.5, dim=2, domain=SQUARE),
                           light_probe())
    assert report.passed
    assert report.witnesses == []
    assert report.balls_tested > 0
    assert report.pairs_tested > 0
    assert report.prescreen_margin is None
    # at radius 0.3 the window [M(x, 2 xi/|xi|), 1/|B|] is empty
    assert report.empty_windows > 0


def test_variable_exponent_passes_at_two():
    nf = VariableExponent(AffineCoefficient(2.0, (0.5, 0.5)), SQUARE)
    report = check_balance(nf, light_probe())
    assert report.passed
    assert report.witnesses == []


def test_boundary_double_phase_passes_at_two():
    scan = smallest_passing_cm(boundary_double_phase(), schedule=(2.0, 4.0),
                               probe=light_probe())
    assert scan.smallest_passing == 2.0
    assert scan.reports[2.0].prescreen_margin == pytest.approx(0.0, abs=1e-15)
    assert scan.reports[2.0].prescreen_holds


def test_violating_double_phase_yields_witnesses():
    nf = violating_double_phase()
    report = check_balance(nf, light_probe())
    assert not report.passed
    assert len(report.witnesses) >= 1
    assert report.prescreen_margin == pytest.approx(-0.5)
    assert report.prescreen_holds is False
    w = report.witnesses[0]
    assert w.excess > 0.0
    assert w.sup_value > w.target
    assert np.linalg.norm(w.xi) > 1.0
    assert w.target >= 1.0 - 1e-9
    assert w.target <= (1.0 + 1e-6) / (np.pi * w.radius**2)
    assert np.linalg.norm(w.y_argmax - w.center) <= w.radius * (1.0 + 1e-9)
    assert np.linalg.norm(w.x - w.center) <= w.radius * (1.0 + 1e-9)


def test_witnesses_cluster_where_the_weight_degenerates():
    report = check_balance(violating_double_phase(), light_probe())
    xs = np.array([w.x[0] for w in report.witnesses])
    assert xs.min() < 0.2


def test_failed_scan_reports_no_passing_constant():
    scan = smallest_passing_cm(violating_double_phase(), schedule=(2.0,),
                               probe=light_probe())
    assert scan.smallest_passing is None
    assert not scan.reports[2.0].passed


def test_oversized_and_misfit_balls_are_skipped():
    nf = ConstantPower(p=2.0, dim=1, domain=INTERVAL)
    probe = light_probe(radius_schedule=(0.6, 0.5))
    report = check_balance(nf, probe)
    assert report.balls_tested == 0
    assert report.passed
    assert len(report.notes) == 2
    assert "exceeds 1" in report.notes[0]
    assert "does not fit" in report.notes[1]

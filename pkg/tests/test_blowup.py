"""Smooth characteristic-ensemble model: stepping, crossing, certificates."""

import math

import numpy as np
import pytest

from wnlo.blowup import (
    CERT_NO_CROSSING,
    CERT_OUTSIDE,
    CERT_WITHIN_BOUND,
    THRESHOLD_RATIO,
    BlowupSignal,
    detect_blowup,
    init_ensembles,
    step_rk4,
    weighted_mean,
    write_blowup_report,
)
from wnlo.initial import FieldSpec
from wnlo.kernel import EntropyWaveSpec

SINE = FieldSpec("sine", {"amplitude": 1.0})
ZERO = FieldSpec("zero")
COS4PI = EntropyWaveSpec("trig_polynomial", {"cos_coeffs": (1.0,)})


def test_init_validation_and_fields():
    with pytest.raises(ValueError, match="64"):
        init_ensembles(SINE, ZERO, 32)
    with pytest.raises(ValueError, match="C1"):
        init_ensembles(FieldSpec("sawtooth", {"slope": 1.0}), ZERO, 128)

    e1, e3 = init_ensembles(SINE, ZERO, 128)
    assert e1.family == 1 and e3.family == 3
    assert np.array_equal(e1.z, np.arange(128) / 128.0)
    assert np.array_equal(e1.x, e1.z)
    assert np.allclose(e1.u, np.sin(2.0 * np.pi * e1.z), atol=0)
    assert np.all(e3.u == 0.0)
    assert np.all(e1.jacobian() == 1.0)
    assert np.all(e3.jacobian() == 1.0)
    assert SINE.total_variation() == 4.0


def test_decoupled_step_is_linear_advection():
    c = 0.3
    e1, e3 = init_ensembles(FieldSpec("constant", {"value": c}),
                            FieldSpec("constant", {"value": c}), 64)
    for _ in range(5):
        e1, e3 = step_rk4(e1, e3, 2.0, 0.0, None, 0.01)
    assert np.allclose(e1.x, e1.z + 2.0 * c * 0.05, atol=1e-14)
    assert np.allclose(e3.x, e3.z - 2.0 * c * 0.05, atol=1e-14)
    assert np.all(e1.u == c) and np.all(e3.u == c)
    assert e1.t == pytest.approx(0.05)
    # positions stay strictly increasing across the label seam
    assert np.all(np.diff(e1.x) > 0.0)
    assert e1.x[0] + 1.0 > e1.x[-1]


def test_step_signal_and_pre_violation():
    e1, e3 = init_ensembles(SINE, ZERO, 128)
    with pytest.raises(BlowupSignal) as exc:
        step_rk4(e1, e3, 1.0, 0.0, None, 0.3)
    sig = exc.value
    assert sig.t_lo == 0.0 and sig.t_hi == pytest.approx(0.3)
    assert sig.family == 1 and sig.min_jac <= 0.0

    # force a folded state and check the precondition guard
    bad1, bad3 = init_ensembles(SINE, ZERO, 128)
    bad1.x = bad1.z - 1.5 * np.sin(2.0 * np.pi * bad1.z) / (2.0 * np.pi)
    with pytest.raises(ValueError, match="classical"):
        step_rk4(bad1, bad3, 1.0, 0.0, None, 0.01)


def test_burgers_sine_crossing_time():
    rep = detect_blowup(SINE, ZERO, alpha=1.0, beta=0.0, n_labels=512)
    t_star = 1.0 / (2.0 * np.pi)
    assert rep.m_i == 4.0
    assert rep.condition_met
    assert rep.certificate == CERT_WITHIN_BOUND
    assert rep.t_b == pytest.approx(t_star, rel=0.02)
    assert rep.bracket[0] <= rep.t_b <= rep.bracket[1]
    assert rep.bracket[1] - rep.bracket[0] <= 1e-5
    assert rep.family_cross == 1
    # steepest compression of sin(2 pi x) sits at x = 1/2
    assert abs(rep.z_cross - 0.5) <= 0.01
    assert rep.min_jacobian[0] == 1.0
    assert rep.min_jacobian[-1] <= 0.0
    assert rep.ode_residual_max <= 1e-9


def test_family3_crossing_mirror():
    rep = detect_blowup(ZERO, SINE, alpha=1.0, beta=0.0, n_labels=512)
    assert rep.bootstrap_family == 3
    assert rep.family_cross == 3
    assert rep.t_b == pytest.approx(1.0 / (2.0 * np.pi), rel=0.02)
    assert rep.certificate == CERT_WITHIN_BOUND


def test_coupled_double_threshold_within_bound():
    # strength at twice the certification threshold for this profile
    spec1 = FieldSpec("sine", {"amplitude": 0.25})
    e_tilde = COS4PI.sup_derivative()
    assert e_tilde == pytest.approx(4.0 * np.pi, rel=1e-10)
    beta = 1.0 / (2.0 * THRESHOLD_RATIO * e_tilde)
    assert beta == pytest.approx(1.061e-3, rel=1e-3)
    rep = detect_blowup(spec1, ZERO, alpha=1.0, beta=beta, sigma2=COS4PI)
    assert rep.m_i == pytest.approx(1.0)
    assert rep.condition_met
    assert rep.threshold == pytest.approx(0.5)
    assert rep.certificate == CERT_WITHIN_BOUND
    assert rep.t_b is not None and rep.t_b <= 6.0 * 1.05
    assert rep.gradient_bound_ok()
    assert rep.bootstrap_ok()
    # initial steep slope sits at the quarter-strength level
    assert rep.steep_slope[0] == pytest.approx(-0.25, abs=0.01)
    assert rep.ode_residual_max <= 1e-9


def test_outside_hypothesis_certificate():
    # same data, coupling far above the certification threshold
    spec1 = FieldSpec("sine", {"amplitude": 0.25})
    beta = 4.0 / (THRESHOLD_RATIO * COS4PI.sup_derivative())
    rep = detect_blowup(spec1, ZERO, alpha=1.0, beta=beta, sigma2=COS4PI,
                        dt=2e-3)
    assert not rep.condition_met
    assert rep.t_b is not None
    assert rep.certificate == CERT_OUTSIDE


def test_constant_data_never_crosses():
    rep = detect_blowup(FieldSpec("constant", {"value": 0.2}), ZERO,
                        alpha=1.0, beta=0.0, horizon=0.5)
    assert rep.t_b is None
    assert rep.certificate == CERT_NO_CROSSING
    assert rep.m_i == 0.0
    assert math.isinf(rep.bound)
    assert np.allclose(rep.min_jacobian, 1.0, atol=1e-10)


def test_quadrature_consistency_on_refinement():
    # doubling the label count should shrink trajectory differences at
    # second order (the quadrature weights carry the O(P^-2) error)
    spec1 = FieldSpec("sine", {"amplitude": 0.25})
    spec3 = FieldSpec("cosine", {"amplitude": 0.2})
    beta, dt, steps = 0.05, 2e-3, 100

    def run_traj(P):
        e1, e3 = init_ensembles(spec1, spec3, P)
        for _ in range(steps):
            e1, e3 = step_rk4(e1, e3, 1.0, beta, COS4PI, dt)
        return e1, e3

    ref1, ref3 = run_traj(512)
    errs = []
    for P in (64, 128):
        e1, e3 = run_traj(P)
        sub = 512 // P
        errs.append(max(
            float(np.max(np.abs(e1.x - ref1.x[::sub]))),
            float(np.max(np.abs(e3.x - ref3.x[::sub]))),
            float(np.max(np.abs(e1.u - ref1.u[::sub]))),
            float(np.max(np.abs(e3.u - ref3.u[::sub]))),
        ))
    assert errs[1] <= errs[0] / 2.5 + 1e-13


def test_coupling_paths_agree():
    # piecewise-linear profiles take the pairwise route; a trig profile
    # evaluated both ways must agree up to reassociation noise
    spec1 = FieldSpec("sine", {"amplitude": 0.25})
    spec3 = FieldSpec("cosine", {"amplitude": 0.2})
    e1, e3 = init_ensembles(spec1, spec3, 128)
    from wnlo.blowup import _coupling
    from wnlo.kernel import kernel_value

    w3 = e3.u * e3.jacobian()
    fast = _coupling(e1.x, e3.x, w3, COS4PI, 0.05)
    kmat = kernel_value(COS4PI, 0.05, e1.x[:, None] + e3.x[None, :])
    slow = (2.0 / 128) * (kmat @ w3)
    assert np.allclose(fast, slow, atol=1e-14)


def test_mean_conservation():
    spec1 = FieldSpec("sine", {"amplitude": 0.25})
    spec3 = FieldSpec("cosine", {"amplitude": 0.2})
    e1, e3 = init_ensembles(spec1, spec3, 256)
    assert abs(weighted_mean(e1)) <= 1e-14
    for _ in range(100):
        e1, e3 = step_rk4(e1, e3, 1.0, 0.05, COS4PI, 2e-3)
    assert abs(weighted_mean(e1)) <= 1e-5
    assert abs(weighted_mean(e3)) <= 1e-5


def test_report_series_and_writer(tmp_path):
    rep = detect_blowup(SINE, ZERO, alpha=1.0, beta=0.0, n_labels=128,
                        dt=1e-3)
    n = rep.t.size
    for col in (rep.min_jacobian, rep.argmin_z, rep.l1_w1, rep.l1_w3,
                rep.steep_slope):
        assert col.size == n
    assert np.all(np.diff(rep.t) > 0.0)
    assert np.all(rep.l1_w3 == 0.0)
    assert rep.l1_w1[0] == pytest.approx(4.0, rel=1e-3)

    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_blowup_report(str(f1), rep)
    write_blowup_report(str(f2), rep)
    data = f1.read_bytes()
    assert data == f2.read_bytes()
    lines = data.decode().splitlines()
    assert lines[0] == "t,min_jacobian,argmin_z,l1_w1,l1_w3"
    assert lines[-1] == f"certificate,{CERT_WITHIN_BOUND}"
    assert len(lines) == 2 + n
    assert float(lines[1].split(",")[1]) == 1.0


def test_dt_respects_resolution_target():
    rep = detect_blowup(SINE, ZERO, alpha=1.0, beta=0.0, n_labels=64)
    assert rep.dt <= 1e-3 / (1.0 * rep.m_i) + 1e-15
    assert rep.horizon == pytest.approx(1.2 * rep.bound)

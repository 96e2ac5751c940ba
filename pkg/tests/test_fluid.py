import math

import numpy as np
import pytest

from geodesk import exprlang
from geodesk.fluid import (
    EOS_CLASSES,
    FluidError,
    efe_check,
    efe_pressure_density,
    eos_classify,
    flow_kinematics,
    fluid_fit,
    identity_k9_residual,
    pressure_density,
    trace_identity,
)
from geodesk.geometry import Chart, InsufficientOrderError, MetricField, vector_field
from geodesk.models import build_model, sample_points
from geodesk.report import Verdict
from geodesk.soliton import SolitonData, SolitonError

from oracles import metric_fn, riemann_fd


def fit_model(name, count=6, seed=5, **params):
    spec = build_model(name, params)
    pts = sample_points(spec, count, seed)
    return spec, pts, fluid_fit(spec.metric, spec.velocity, pts, k_grav=spec.k_grav)


def metric_oracle(spec):
    comps = [[exprlang.to_string(c) for c in row] for row in spec.metric.components]
    return metric_fn(comps, spec.chart.coords)


def test_de_sitter_is_dark_energy():
    spec, pts, fd = fit_model("de-sitter")
    assert fd.succeeded
    np.testing.assert_allclose(fd.alpha1, 3.0, rtol=1e-10)
    assert np.max(np.abs(fd.beta1)) < 1e-8
    np.testing.assert_allclose(fd.tau, 4 * fd.alpha1, rtol=1e-10)
    rep = efe_check(fd)
    assert rep.verdict == Verdict.PASS
    assert set(rep.details["eos"]) == {"dark_energy"}


def test_minkowski_is_vacuum():
    spec, pts, fd = fit_model("minkowski")
    assert np.max(np.abs(fd.alpha1)) == 0.0
    assert np.max(np.abs(fd.beta1)) == 0.0
    assert trace_identity(fd).max_residual == 0.0
    p, s, o = efe_pressure_density(fd)
    assert np.all(p == 0) and np.all(s == 0)
    assert all(v is None for v in o)
    kin = flow_kinematics(spec.metric, spec.velocity, pts)
    assert max(map(abs, kin.divergence)) == 0.0
    assert kin.max_rotation == 0.0


def test_flrw_matter_is_dust_and_matches_fd_curvature():
    spec, pts, fd = fit_model("flrw")
    assert fd.fit.max_residual < 1e-8
    assert np.all(fd.beta1 > 0)
    p, sigma, _ = efe_pressure_density(fd)
    assert np.max(np.abs(p)) < 1e-6
    rep = efe_check(fd)
    assert rep.max_residual < 1e-8
    assert set(rep.details["eos"]) == {"dust"}
    gfn = metric_oracle(spec)
    for p_, a1, b1 in zip(pts, fd.alpha1, fd.beta1):
        x = np.array(p_)
        ric = riemann_fd(gfn, x).trace(axis1=0, axis2=1)
        tau = np.trace(np.linalg.inv(gfn(x)) @ ric)
        ric_uu = ric[0, 0]  # u = d_t is already unit
        assert a1 == pytest.approx((tau + ric_uu) / 3, rel=1e-5)
        assert b1 == pytest.approx((tau + ric_uu) / 3 + ric_uu, rel=1e-5)


def test_flrw_kinematics():
    spec, pts, _ = fit_model("flrw")
    kin = flow_kinematics(spec.metric, spec.velocity, pts)
    for p, div in zip(pts, kin.divergence):
        assert div == pytest.approx(2 / p[0], rel=1e-12)
    assert kin.max_rotation < 1e-10
    assert kin.report().verdict == Verdict.INDETERMINATE


def test_trace_identity_bounded_by_fit_residual():
    for name in ("flrw", "de-sitter", "minkowski"):
        _, _, fd = fit_model(name)
        rep = trace_identity(fd)
        assert rep.max_residual < 1e-9
        assert rep.max_residual <= fd.n * fd.fit.max_residual + 1e-15


def test_velocity_is_normalized_and_original_norm_reported():
    spec = build_model("de-sitter")
    chart = spec.chart
    pts = sample_points(spec, 3, 0)
    fd = fluid_fit(spec.metric, vector_field(chart, ["2", "0", "0", "0"]), pts)
    np.testing.assert_allclose(fd.norm2, -4.0)
    np.testing.assert_allclose(fd.beta1, 0.0, atol=1e-8)
    assert fd.fit.details["original_norm2"] == [-4.0] * 3


def test_spacelike_and_null_velocity_rejected():
    spec = build_model("minkowski")
    pts = sample_points(spec, 2, 0)
    with pytest.raises(FluidError, match="spacelike"):
        fluid_fit(spec.metric, vector_field(spec.chart, ["0", "1", "0", "0"]), pts)
    with pytest.raises(FluidError, match="null"):
        fluid_fit(spec.metric, vector_field(spec.chart, ["1", "1", "0", "0"]), pts)


def test_riemannian_chart_rejected():
    chart = Chart(("x", "y", "z"))
    g = MetricField(chart, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    with pytest.raises(FluidError, match="Lorentzian"):
        fluid_fit(g, vector_field(chart, ["1", "0", "0"]), [(0, 0, 0)])


@pytest.mark.parametrize("p, sigma, expected", [
    (1.0, 1.0, "stiff"),
    (0.0, 1.0, "dust"),
    (-1.2, 1.0, "phantom"),
    (1.0, 3.0, "radiation"),
    (-1.0, 1.0, "dark_energy"),
    (0.5, 1.0, "generic"),
    (0.0, 0.0, "dust"),
])
def test_eos_classify(p, sigma, expected):
    assert eos_classify(p, sigma, 1e-9) == expected
    assert expected in EOS_CLASSES


def test_pressure_density_inversion():
    p, s, o = pressure_density(0.0, 0.0, 4)
    assert (p, s, o) == (0.0, 0.0, None)
    p, s, _ = pressure_density(3.0, 0.0, 4)
    assert p + s == 0.0
    p, s, o = pressure_density(2 / 3, 4 / 3, 4)
    assert p == pytest.approx(0.0, abs=1e-15)
    assert s == pytest.approx(4 / 3)
    # round trip through the fluid form with a non-unit constant
    p, s, _ = pressure_density(0.7, 1.9, 5, k_grav=2.0)
    assert 2.0 * (p - s) / (2 - 5) == pytest.approx(0.7)
    assert 2.0 * (p + s) == pytest.approx(1.9)


@pytest.mark.parametrize("n, k", [(2, 1.0), (4, 0.0)])
def test_pressure_density_errors(n, k):
    with pytest.raises(FluidError):
        pressure_density(1.0, 1.0, n, k)


def test_k9_vanishes_for_de_sitter_with_constant_potential():
    spec = build_model("de-sitter")
    pts = sample_points(spec, 4, 2)
    reps = identity_k9_residual(spec.metric, spec.velocity, spec.soliton, pts)
    assert [r.name for r in reps] == ["fluid.k9.grouping_a", "fluid.k9.grouping_b"]
    for r in reps:
        assert r.max_residual < 1e-12


def test_k9_nonzero_for_flrw_without_soliton():
    spec = build_model("flrw")
    pts = sample_points(spec, 4, 2)
    reps = identity_k9_residual(spec.metric, spec.velocity, SolitonData("t", 1.0, 0.0, 0.0), pts)
    assert max(r.max_residual for r in reps) > 1e-3


def test_k9_preconditions():
    spec = build_model("de-sitter")
    pts = sample_points(spec, 1, 2)
    with pytest.raises(SolitonError):
        identity_k9_residual(spec.metric, spec.velocity, SolitonData("t", math.inf), pts)
    with pytest.raises(InsufficientOrderError):
        identity_k9_residual(spec.metric, spec.velocity, spec.soliton, pts, order=2)


def test_k9_vanishes_when_every_contracted_term_does():
    # flat, static flow and a potential constant along u: u(w) = u(alpha1) = u(beta) = beta1 = 0
    spec = build_model("minkowski")
    pts = sample_points(spec, 3, 4)
    reps = identity_k9_residual(spec.metric, spec.velocity, SolitonData("x + y^2", 2.0, 0.3, 0.5), pts)
    assert all(r.max_residual == 0.0 for r in reps)

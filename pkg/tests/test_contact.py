import numpy as np
import pytest

from geodesk import exprlang
from geodesk.contact import (
    ContactError,
    ContactStructure,
    check_almost_cokahler,
    check_cokahler,
    check_killing_xi,
    compute_h,
    compute_hprime,
    eta_einstein_fit,
    identity_reports,
    identity_suite,
    jacobi_operator,
    nullity_fit,
    ricci_3d_check,
    validate_structure,
)
from geodesk.geometry import Chart, MetricField, TensorField, one_form, vector_field
from geodesk.models import build_model, sample_points
from geodesk.report import Verdict


def model_points(name, count=8, seed=1, **params):
    spec = build_model(name, params)
    return spec, sample_points(spec, count, seed)


def scaled_phi(s: ContactStructure, factor: float) -> ContactStructure:
    comps = [[f"{factor}*({exprlang.to_string(c)})" for c in row] for row in s.phi.components]
    return ContactStructure(s.metric, TensorField(s.chart, 1, 1, comps), s.xi, s.eta)


def test_example_structure_is_valid_and_almost_cokahler():
    spec, pts = model_points("paper-example")
    assert validate_structure(spec.structure, pts).verdict == Verdict.PASS
    rep = check_almost_cokahler(spec.structure, pts)
    assert rep.verdict == Verdict.PASS
    assert rep.details["d_eta"] < 1e-12


def test_doubled_phi_fails_validation():
    spec, pts = model_points("paper-example", 4)
    rep = validate_structure(scaled_phi(spec.structure, 2.0), pts)
    assert rep.verdict == Verdict.FAIL
    assert rep.details["phi_squared"] > 1.0


def test_even_dimension_rejected():
    chart = Chart(("x", "y"))
    g = MetricField(chart, [["1", "0"], ["0", "1"]])
    with pytest.raises(ContactError, match="odd dimension"):
        ContactStructure(g, TensorField(chart, 1, 1, [["0", "-1"], ["1", "0"]]),
                         vector_field(chart, ["0", "1"]), one_form(chart, ["0", "1"]))


def test_wrong_valence_rejected():
    chart = Chart(("x", "y", "z"))
    g = MetricField(chart, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    phi = TensorField(chart, 1, 1, [["0", "-1", "0"], ["1", "0", "0"], ["0", "0", "0"]])
    with pytest.raises(ContactError, match="valence"):
        ContactStructure(g, phi, one_form(chart, ["0", "0", "1"]), one_form(chart, ["0", "0", "1"]))


def test_flat_structure_has_zero_h_and_is_cokahler():
    spec, pts = model_points("flat-cokahler3", 4)
    s = spec.structure
    for p in pts:
        assert np.max(np.abs(compute_h(s, p))) < 1e-15
        assert np.max(np.abs(jacobi_operator(s, p))) < 1e-15
    assert check_cokahler(s, pts).verdict == Verdict.PASS
    assert check_killing_xi(s, pts).verdict == Verdict.PASS


def test_flat_nullity_has_zero_kappa_and_indeterminate_mu():
    spec, pts = model_points("flat-cokahler3", 4)
    fit = nullity_fit(spec.structure, pts)
    assert fit.kappa == pytest.approx(0.0, abs=1e-12)
    assert fit.mu is None
    assert fit.mu_or_zero == 0.0
    assert fit.succeeded
    assert "indeterminate" in fit.report().notes[0]


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_g_sigma_h_spectrum(sigma):
    spec, pts = model_points("g-sigma", 3, sigma=sigma)
    for p in pts:
        h = compute_h(spec.structure, p)
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(h).real), [-sigma, 0, sigma], atol=1e-12)
        hp = compute_hprime(spec.structure, p)
        assert abs(np.trace(hp)) < 1e-12


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_g_sigma_nullity_and_consequences(sigma):
    spec, pts = model_points("g-sigma", 8, sigma=sigma)
    fit = nullity_fit(spec.structure, pts)
    assert fit.kappa == pytest.approx(-sigma ** 2, abs=1e-6)
    assert fit.mu == pytest.approx(0.0, abs=1e-6)
    for rep in fit.reports():
        assert rep.verdict == Verdict.PASS, rep.name
        assert rep.max_residual < 1e-7
    rep3 = ricci_3d_check(spec.structure, pts, fit)
    assert rep3.verdict == Verdict.PASS


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_g_sigma_is_eta_einstein_with_trace(sigma):
    spec, pts = model_points("g-sigma", 6, sigma=sigma)
    ee = eta_einstein_fit(spec.structure, pts)
    assert ee.a1 == pytest.approx(0.0, abs=1e-9)
    assert ee.b1 == pytest.approx(-2 * sigma ** 2, rel=1e-9)
    assert all(r.verdict == Verdict.PASS for r in ee.reports())


def test_nullity_fit_does_not_depend_on_frame():
    spec, pts = model_points("g-sigma", 5, sigma=1.5)
    a = nullity_fit(spec.structure, pts, frame="coordinate")
    b = nullity_fit(spec.structure, pts, frame=spec.frame)
    c = nullity_fit(spec.structure, pts)
    for other in (b, c):
        assert a.kappa == pytest.approx(other.kappa, abs=1e-9)
        assert a.mu == pytest.approx(other.mu, abs=1e-9)


def test_reversing_reeb_field_flips_h_and_keeps_kappa():
    spec, pts = model_points("g-sigma", 4, sigma=1.0)
    s = spec.structure
    chart = s.chart
    rev = ContactStructure(s.metric, s.phi, vector_field(chart, ["0", "0", "-1"]),
                           one_form(chart, ["0", "0", "-1"]))
    assert validate_structure(rev, pts).verdict == Verdict.PASS
    for p in pts:
        np.testing.assert_allclose(compute_h(rev, p), -compute_h(s, p), atol=1e-14)
    assert nullity_fit(rev, pts).kappa == pytest.approx(nullity_fit(s, pts).kappa, abs=1e-12)


def test_example_identities_hold():
    spec, pts = model_points("paper-example", 16)
    reports = identity_reports(spec.structure, pts)
    assert len(reports) == 9
    for rep in reports:
        assert rep.verdict == Verdict.PASS, (rep.name, rep.max_residual)
        assert rep.max_residual < 1e-7
    combined = identity_suite(spec.structure, pts)
    assert combined.verdict == Verdict.PASS
    assert set(combined.details) == {r.name.rsplit(".", 1)[1] for r in reports}


def test_example_is_not_cokahler_nor_k_structure():
    spec, pts = model_points("paper-example", 6)
    assert check_cokahler(spec.structure, pts).verdict == Verdict.FAIL
    assert check_killing_xi(spec.structure, pts).verdict == Verdict.FAIL


def test_example_nullity_fit_fails():
    spec, pts = model_points("paper-example", 16)
    fit = nullity_fit(spec.structure, pts)
    assert not fit.succeeded
    assert fit.report().max_residual > 1e-3
    assert all(r.verdict == Verdict.SKIPPED for r in fit.extra)


def test_hyperbolic_structure_is_not_almost_cokahler_so_identities_are_skipped():
    spec, pts = model_points("hyperbolic3", 4)
    assert check_almost_cokahler(spec.structure, pts).verdict == Verdict.FAIL
    assert all(r.verdict == Verdict.SKIPPED for r in identity_reports(spec.structure, pts))
    assert identity_suite(spec.structure, pts).verdict == Verdict.SKIPPED


def test_einstein_metric_gives_vanishing_b1():
    spec, pts = model_points("hyperbolic3", 5)
    ee = eta_einstein_fit(spec.structure, pts)
    assert ee.a1 == pytest.approx(-2.0, abs=1e-9)
    assert ee.b1 == pytest.approx(0.0, abs=1e-9)
    assert ee.trace_report.verdict == Verdict.SKIPPED


def test_example_h_matches_published_values():
    spec, pts = model_points("paper-example", 4)
    for p in pts:
        z = p[2]
        h = compute_h(spec.structure, p)
        # h d_x = -exp(z) d_x and h d_y = exp(z) d_y in the model frame
        assert h[:, 0] == pytest.approx([-np.exp(z), 0, 0], abs=1e-12)
        assert h[:, 1] == pytest.approx([0, np.exp(z), 0], abs=1e-12)

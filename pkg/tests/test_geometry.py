import math

import numpy as np
import pytest

from geodesk import exprlang
from geodesk.geometry import (
    Chart,
    GeometryError,
    LocalGeometry,
    MetricField,
    SignatureError,
    SingularMetricError,
    TensorField,
    bracket,
    christoffel,
    covariant_derivative,
    divergence,
    exterior_derivative,
    gradient,
    hessian,
    laplacian_trace,
    lie_derivative,
    one_form,
    ricci,
    riemann,
    scalar_curvature,
    vector_field,
)

from oracles import christoffel_fd, metric_fn, partial_fd, random_expr, random_metric, rel_err, riemann_fd, scalar_fn

XYZ = ("x", "y", "z")


def sphere():
    chart = Chart(("theta", "phi"))
    return MetricField(chart, [["1", "0"], ["0", "sin(theta)^2"]])


def random_metrics(count=5, seed=11):
    rng = np.random.default_rng(seed)
    chart = Chart(XYZ)
    out = []
    for _ in range(count):
        comps = random_metric(rng, list(XYZ))
        out.append((MetricField(chart, comps), metric_fn(comps, XYZ)))
    return out


def test_sphere_curvature():
    g = sphere()
    th = 0.9
    r = LocalGeometry(g, (th, 0.3)).riemann_lowered.value
    assert r[0, 1, 0, 1] == pytest.approx(math.sin(th) ** 2)
    assert scalar_curvature(g, (th, 0.3)) == pytest.approx(2.0)
    np.testing.assert_allclose(ricci(g, (th, 0.3)), [[1, 0], [0, math.sin(th) ** 2]], atol=1e-13)


def test_sphere_christoffel():
    gam = christoffel(sphere(), (0.7, 0.0))
    assert gam[0, 1, 1] == pytest.approx(-math.sin(0.7) * math.cos(0.7))
    assert gam[1, 0, 1] == pytest.approx(1 / math.tan(0.7))


def test_flat_space_polar_has_zero_curvature():
    chart = Chart(("r", "t"))
    g = MetricField(chart, [["1", "0"], ["0", "r^2"]])
    assert np.max(np.abs(riemann(g, (1.3, 0.2)))) < 1e-13


def test_christoffel_and_riemann_match_fd_on_random_metrics():
    rng = np.random.default_rng(3)
    for metric, gfn in random_metrics():
        for _ in range(8):
            p = rng.uniform(-0.8, 0.8, 3)
            geo = LocalGeometry(metric, p, 2)
            assert rel_err(geo.christoffel.value, christoffel_fd(gfn, p)) < 1e-5
            assert rel_err(geo.riemann.value, riemann_fd(gfn, p)) < 1e-5


def test_christoffel_is_symmetric_and_metric_compatible():
    for metric, _ in random_metrics(2, seed=5):
        geo = LocalGeometry(metric, (0.1, -0.2, 0.3))
        gam = geo.christoffel.value
        assert np.array_equal(gam, gam.transpose(0, 2, 1))
        ng = covariant_derivative(metric, metric, (0.1, -0.2, 0.3))
        assert np.max(np.abs(ng)) < 1e-12


def test_riemann_symmetries_on_random_metric():
    metric, _ = random_metrics(1, seed=8)[0]
    lo = LocalGeometry(metric, (0.2, 0.1, -0.4)).riemann_lowered.value
    s = 1 + np.max(np.abs(lo))
    assert np.max(np.abs(lo + lo.transpose(1, 0, 2, 3))) < 1e-12 * s
    assert np.max(np.abs(lo + lo.transpose(0, 1, 3, 2))) < 1e-12 * s
    assert np.max(np.abs(lo - lo.transpose(2, 3, 0, 1))) < 1e-12 * s
    cyc = lo + lo.transpose(0, 2, 3, 1) + lo.transpose(0, 3, 1, 2)
    assert np.max(np.abs(cyc)) < 1e-12 * s


def test_ricci_is_symmetric():
    metric, _ = random_metrics(1, seed=9)[0]
    ric = ricci(metric, (0.3, 0.3, 0.3))
    np.testing.assert_allclose(ric, ric.T, atol=1e-12)


def test_gradient_hessian_against_fd():
    metric, gfn = random_metrics(1, seed=4)[0]
    w = "x*y + sin(z)*x^2"
    f = scalar_fn(w, XYZ)
    p = np.array([0.3, -0.5, 0.2])
    dw = np.array([partial_fd(f, p, mi) for mi in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]])
    np.testing.assert_allclose(gradient(metric, w, p), np.linalg.solve(gfn(p), dw), rtol=1e-6)
    d2 = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            mi = [0, 0, 0]
            mi[i] += 1
            mi[j] += 1
            d2[i, j] = partial_fd(f, p, tuple(mi))
    ref = d2 - np.einsum("kij,k->ij", christoffel_fd(gfn, p), dw)
    hess = hessian(metric, w, p)
    assert rel_err(hess, ref) < 1e-5
    np.testing.assert_allclose(hess, hess.T, atol=1e-12)


def test_laplacian_exposes_both_signs():
    chart = Chart(("x", "y"))
    g = MetricField(chart, [["1", "0"], ["0", "1"]])
    tr, neg = laplacian_trace(g, "x^2 + 3*y^2", (0.4, 0.1))
    assert tr == pytest.approx(8.0)
    assert neg == pytest.approx(-8.0)


def test_divergence_against_volume_formula():
    metric, gfn = random_metrics(1, seed=6)[0]
    chart = metric.chart
    comps = ["y*z", "exp(x)", "x + z^2"]
    x = vector_field(chart, comps)
    p = np.array([0.1, 0.2, -0.3])
    fns = [scalar_fn(c, XYZ) for c in comps]
    vol = lambda q: math.sqrt(np.linalg.det(gfn(q)))  # noqa: E731
    ref = sum(partial_fd(lambda q, i=i: vol(q) * fns[i](q), p, tuple(int(k == i) for k in range(3)))
              for i in range(3)) / vol(p)
    assert divergence(metric, x, p) == pytest.approx(ref, rel=1e-6)


def test_bracket_against_fd():
    chart = Chart(XYZ)
    xc, yc = ["y", "x*z", "1"], ["exp(z)", "0", "x*y"]
    p = np.array([0.3, 0.4, 0.5])
    fx = [scalar_fn(c, XYZ) for c in xc]
    fy = [scalar_fn(c, XYZ) for c in yc]
    e = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    xv = np.array([f(p) for f in fx])
    yv = np.array([f(p) for f in fy])
    ref = np.array([
        sum(xv[c] * partial_fd(fy[a], p, e[c]) - yv[c] * partial_fd(fx[a], p, e[c]) for c in range(3))
        for a in range(3)
    ])
    got = bracket(vector_field(chart, xc), vector_field(chart, yc), p)
    np.testing.assert_allclose(got, ref, rtol=1e-7, atol=1e-9)


def test_lie_derivative_of_function_is_directional_derivative():
    chart = Chart(XYZ)
    x = vector_field(chart, ["1", "z", "0"])
    f = TensorField(chart, 0, 0, np.array(chart.parse("x*y"), dtype=object))
    assert float(lie_derivative(x, f, (0.5, 2.0, 3.0))) == pytest.approx(2.0 + 3.0 * 0.5)


def test_exterior_derivative():
    chart = Chart(XYZ)
    df = exterior_derivative(one_form(chart, ["y*z", "x*z", "x*y"]), (0.2, 0.3, 0.4))
    assert np.max(np.abs(df)) < 1e-14  # closed: it is d(xyz)
    d = exterior_derivative(one_form(chart, ["0", "x", "0"]), (0.2, 0.3, 0.4))
    assert d[0, 1] == pytest.approx(1.0)
    assert d[1, 0] == pytest.approx(-1.0)
    two = TensorField(chart, 0, 2, [["0", "z", "0"], ["-z", "0", "0"], ["0", "0", "0"]])
    dd = exterior_derivative(two, (0.1, 0.1, 0.1))
    assert dd[0, 1, 2] == pytest.approx(1.0)
    assert dd[2, 1, 0] == pytest.approx(-1.0)


def test_exterior_derivative_rejects_non_antisymmetric():
    chart = Chart(XYZ)
    bad = TensorField(chart, 0, 2, [["0", "z", "0"], ["z", "0", "0"], ["0", "0", "0"]])
    with pytest.raises(GeometryError):
        exterior_derivative(bad, (0.1, 0.1, 0.1))


def test_asymmetric_metric_rejected():
    chart = Chart(("x", "y"))
    with pytest.raises(GeometryError, match="metric not symmetric"):
        MetricField(chart, [["1", "x"], ["y", "1"]])


def test_undeclared_coordinate_rejected():
    with pytest.raises(exprlang.UnboundNameError):
        MetricField(Chart(("x", "y")), [["1", "0"], ["0", "w"]])


def test_singular_and_signature_errors():
    chart = Chart(("x", "y"))
    with pytest.raises(SingularMetricError):
        LocalGeometry(MetricField(chart, [["1", "1"], ["1", "1"]]), (0.0, 0.0))
    with pytest.raises(SignatureError):
        LocalGeometry(MetricField(chart, [["-1", "0"], ["0", "1"]]), (0.0, 0.0))


def test_orthonormal_frame_lorentzian():
    chart = Chart(("t", "x"), signature=(-1, 1))
    geo = LocalGeometry(MetricField(chart, [["-2", "0.5"], ["0.5", "3"]]), (0.0, 0.0), 1)
    e = geo.frame
    gram = e.T @ geo.g.value @ e
    np.testing.assert_allclose(np.sort(np.diag(gram)), [-1, 1], atol=1e-14)
    np.testing.assert_allclose(gram - np.diag(np.diag(gram)), 0, atol=1e-14)


def test_random_expr_metric_is_positive_definite():
    rng = np.random.default_rng(0)
    comps = random_metric(rng, list(XYZ))
    gfn = metric_fn(comps, XYZ)
    for _ in range(20):
        assert np.min(np.linalg.eigvalsh(gfn(rng.uniform(-1, 1, 3)))) > 0
    assert isinstance(random_expr(rng, ["x"]), str)

import math

import numpy as np
import pytest

from geodesk.contact import check_almost_cokahler, check_cokahler, check_killing_xi
from geodesk.models import (
    ENTRIES,
    ModelError,
    ModelLoadError,
    SamplingError,
    build_model,
    catalog,
    dump_model,
    golden_checks,
    list_models,
    load_model,
    loads_model,
    quantity,
    sample_points,
)
from geodesk.report import Verdict
from geodesk.suites import run_suite

FLAT_CONFIG = """
[chart]
name = flat-from-config
coords = x, y, z

[metric]
g.1.1 = 1
g.2.2 = 1
g.3.3 = 1

[structure]
phi.1.2 = -1
phi.2.1 = 1
xi.3 = 1
eta.3 = 1

[golden]
h.1 = 0, 0, 0
scalar_curvature = 0 | analytic
"""


def test_catalog_contents():
    names = [spec.name for spec in catalog()]
    for required in ("euclidean", "flat-cokahler3", "paper-example", "g-sigma", "round-sphere2",
                     "minkowski", "flrw", "de-sitter"):
        assert required in names
    assert names == sorted(names)


def test_list_models_shows_parameters():
    text = list_models()
    for name in ENTRIES:
        assert text.count(f"{name}:") == 1
    assert "sigma (default 1.0)" in text
    assert "H (default 1.0)" in text


def test_underscore_names_and_params():
    spec = build_model("g_sigma", {"sigma": "0.5"})
    assert spec.params["sigma"] == 0.5
    with pytest.raises(ModelError, match="no parameter"):
        build_model("g-sigma", {"tau": 1})
    with pytest.raises(ModelError, match="bad value"):
        build_model("g-sigma", {"sigma": "abc"})
    with pytest.raises(ModelError, match="unknown model"):
        build_model("nosuch")


def test_spec_is_immutable():
    spec = build_model("paper-example")
    with pytest.raises(TypeError):
        spec.expect["contact.cokahler"] = "holds"


def test_example_published_goldens():
    spec = build_model("paper-example")
    p = (0.3, -0.4, 0.8)
    z = p[2]
    ez, e2z = math.exp(z), math.exp(2 * z)
    np.testing.assert_allclose(quantity(spec, "bracket.1.3", p), [0, ez, 0], atol=1e-12)
    np.testing.assert_allclose(quantity(spec, "bracket.1.2", p), [0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(quantity(spec, "connection.3.3", p), [0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(quantity(spec, "connection.2.3", p), [ez, 0, 0], atol=1e-12)
    np.testing.assert_allclose(quantity(spec, "curvature.2.3.3", p),
                               [-2 * math.sqrt(z) * e2z, -e2z, 0], atol=1e-11)
    np.testing.assert_allclose(quantity(spec, "ricci_operator.1", p),
                               [0, -2 * math.sqrt(z) * e2z, 0], atol=1e-11)
    np.testing.assert_allclose(quantity(spec, "h.2", p), [0, ez, 0], atol=1e-12)
    np.testing.assert_allclose(quantity(spec, "hessian_operator.3", p),
                               [0, 0, 2 * e2z * (1 + 2 * z)], rtol=1e-12, atol=1e-11)


def test_every_example_golden_matches():
    spec = build_model("paper-example")
    pts = sample_points(spec, 16, 42)
    reports = golden_checks(spec, pts)
    assert len(reports) == len(spec.goldens)
    for rep in reports:
        assert rep.verdict == Verdict.PASS, (rep.name, rep.max_residual)
        assert rep.max_residual < 1e-8
    published = [r for r in reports if r.details["source"] == "published"]
    assert len(published) == 40


def test_example_frame_is_orthonormal():
    spec = build_model("paper-example")
    for p in sample_points(spec, 8, 3):
        for i in range(3):
            for j in range(3):
                v = quantity(spec, f"metric_frame.{i + 1}.{j + 1}", p)[0]
                assert v == pytest.approx(float(i == j), abs=1e-10)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_g_sigma_structure_classes(sigma):
    spec = build_model("g-sigma", {"sigma": sigma})
    pts = sample_points(spec, 4, 0)
    assert check_almost_cokahler(spec.structure, pts).verdict == Verdict.PASS
    assert check_killing_xi(spec.structure, pts).verdict == Verdict.FAIL
    assert all(r.verdict == Verdict.PASS for r in golden_checks(spec, pts))


def test_flat_cokahler_is_cokahler():
    spec = build_model("flat-cokahler3")
    assert check_cokahler(spec.structure, sample_points(spec, 4, 0)).verdict == Verdict.PASS


def test_config_matches_builtin_flat_model():
    cfg = loads_model(FLAT_CONFIG)
    builtin = build_model("flat-cokahler3")
    a = run_suite(cfg, "contact", 6, 9)
    b = run_suite(builtin, "contact", 6, 9)
    assert [(r.name, r.max_residual, r.verdict) for r in a.checks] == \
        [(r.name, r.max_residual, r.verdict) for r in b.checks]


def test_asymmetric_metric_rejected():
    text = "[chart]\ncoords = x, y\n[metric]\ng.1.1 = 1\ng.2.2 = 1\ng.1.2 = x\ng.2.1 = y\n"
    with pytest.raises(ModelLoadError, match="metric not symmetric"):
        loads_model(text, "bad.ini")


def test_one_sided_off_diagonal_is_mirrored():
    spec = loads_model("[chart]\ncoords = x, y\n[metric]\ng.1.1 = 2\ng.2.2 = 2\ng.1.2 = 0.5\n")
    assert str(spec.metric.components[1, 0]) == str(spec.metric.components[0, 1])


def test_undeclared_coordinate_rejected():
    text = "[chart]\ncoords = x, y\n[metric]\ng.1.1 = 1\ng.2.2 = 1 + w\n"
    with pytest.raises(ModelLoadError) as info:
        loads_model(text, "w.ini")
    msg = str(info.value)
    assert "w.ini [metric] g.2.2" in msg
    assert "'w'" in msg


def test_dimension_mismatch_rejected():
    text = "[chart]\ncoords = x, y\n[metric]\ng.1.1 = 1\ng.2.2 = 1\ng.3.3 = 1\n"
    with pytest.raises(ModelLoadError, match="dimension mismatch"):
        loads_model(text)
    text = "[chart]\ncoords = x, y, z\n[metric]\ng.1.1 = 1\ng.2.2 = 1\ng.3.3 = 1\n[frame]\ne.1 = 1, 0\n"
    with pytest.raises(ModelLoadError, match="chart has dimension 3"):
        loads_model(text)


def test_expression_error_is_located():
    text = "[chart]\ncoords = x, y\n[metric]\ng.1.1 = 1 +* x\ng.2.2 = 1\n"
    with pytest.raises(ModelLoadError) as info:
        loads_model(text, "syntax.ini")
    assert "syntax.ini [metric] g.1.1" in str(info.value)
    assert "offset 3" in str(info.value)


def test_missing_sections_and_unknown_keys():
    with pytest.raises(ModelLoadError, match=r"missing section \[metric\]"):
        loads_model("[chart]\ncoords = x, y\n")
    with pytest.raises(ModelLoadError, match="unknown section"):
        loads_model("[chart]\ncoords = x, y\n[metric]\ng.1.1 = 1\ng.2.2 = 1\n[extras]\na = 1\n")
    with pytest.raises(ModelLoadError, match="unexpected key"):
        loads_model("[chart]\ncoords = x, y\ncolour = red\n[metric]\ng.1.1 = 1\ng.2.2 = 1\n")


def test_load_model_missing_file(tmp_path):
    with pytest.raises(ModelLoadError, match="cannot read"):
        load_model(tmp_path / "absent.ini")


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.name)
def test_dump_roundtrip(spec):
    again = loads_model(dump_model(spec))
    assert dump_model(again) == dump_model(spec)
    pts = sample_points(spec, 2, 1)
    for a, b in zip(golden_checks(spec, pts), golden_checks(again, pts)):
        assert a.max_residual == b.max_residual


def test_sampling_is_deterministic_and_respects_margin():
    spec = build_model("paper-example")
    a = sample_points(spec, 4, 7)
    assert a == sample_points(spec, 4, 7)
    assert a != sample_points(spec, 4, 8)
    assert len(a) == 4
    assert all(p[2] > 0.05 for p in a)


def test_euclidean_accepts_any_point():
    assert len(sample_points(build_model("euclidean"), 4, 0)) == 4


def test_degenerate_domain_raises():
    spec = loads_model("[chart]\ncoords = x, y, z\ndomain = z > 0 and z < 0\n"
                       "[metric]\ng.1.1 = 1\ng.2.2 = 1\ng.3.3 = 1\n")
    with pytest.raises(SamplingError):
        sample_points(spec, 1, 0, max_attempts=200)


def test_golden_source_must_be_known():
    text = FLAT_CONFIG.replace("| analytic", "| folklore")
    with pytest.raises(ModelLoadError, match="golden source"):
        loads_model(text)


def test_flrw_expression_parameter():
    spec = build_model("flrw", {"a": "t^0.5"})
    assert spec.params["a"] == "t^0.5"
    pts = sample_points(spec, 2, 0)
    assert all(p[0] > 0 for p in pts)

"""Check suites binding a model to the geometry, contact, soliton and fluid checks."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import __version__, contact, fluid, soliton
from .geometry import DEFAULT_ORDER, LocalGeometry, MetricField, covariant_derivative_jet
from .models import GOLDEN_TOL, ModelSpec, golden_checks, sample_points
from .report import CheckReport, Residuals, SuiteReport, Verdict, aggregate

SUITES = ("geometry", "contact", "soliton", "fluid")

DEFAULT_TOLERANCES = {
    "geometry.torsion": 1e-9,
    "geometry.metric_compatibility": 1e-9,
    "geometry.riemann_symmetries": 1e-8,
    "geometry.first_bianchi": 1e-8,
    "geometry.contracted_bianchi": 1e-7,
    "geometry.reconstruction_3d": 1e-8,
    "geometry.frame_orthonormality": 1e-10,
    "golden": GOLDEN_TOL,
    "contact.structure": contact.STRUCTURE_TOL,
    "contact.almost_cokahler": contact.STRUCTURE_TOL,
    "contact.cokahler": contact.STRUCTURE_TOL,
    "contact.killing_xi": contact.STRUCTURE_TOL,
    "contact.identity": contact.IDENTITY_TOL,
    "contact.nullity": contact.IDENTITY_TOL,
    "contact.ricci_3d": contact.IDENTITY_TOL,
    "contact.eta_einstein": contact.IDENTITY_TOL,
    "soliton.residual": soliton.SOLITON_TOL,
    "soliton.curvature_identity": soliton.IDENTITY_TOL,
    "fluid.fit": fluid.FIT_TOL,
    "fluid.trace_identity": fluid.TRACE_TOL,
    "fluid.field_equations": fluid.EFE_TOL,
    "fluid.k9": fluid.K9_TOL,
}

REF_TORSION = "Gamma^k_ij = Gamma^k_ji"
REF_COMPAT = "nabla g = 0"
REF_SYMMETRIES = "R_ijkl = -R_jikl = -R_ijlk = R_klij"
REF_BIANCHI1 = "R_ijkl + R_iklj + R_iljk = 0"
REF_BIANCHI2 = "div Ric = d tau / 2"
REF_3D = ("K(E,F)G = Ric(F,G)E - Ric(E,G)F + g(F,G)QE - g(E,G)QF"
          " - (tau/2)(g(F,G)E - g(E,G)F)")
REF_FRAME = "g(e_i, e_j) = diag(signature)"


class Tolerances:
    """Per-check defaults, or a single value that overrides all of them."""

    def __init__(self, override: float | None = None):
        if override is not None and not override > 0:
            raise ValueError("tolerance must be positive")
        self.override = override

    def __call__(self, name: str) -> float:
        if self.override is not None:
            return self.override
        key = name
        while key:
            if key in DEFAULT_TOLERANCES:
                return DEFAULT_TOLERANCES[key]
            key = key.rpartition(".")[0]
        return 1e-8


def geometry_checks(metric: MetricField, points: Sequence, tol: Tolerances,
                    order: int = DEFAULT_ORDER, frame=None) -> list[CheckReport]:
    names = ["torsion", "metric_compatibility", "riemann_symmetries", "first_bianchi"]
    accs = {k: Residuals() for k in names}
    bianchi2 = Residuals() if order >= 3 else None
    recon = Residuals() if metric.chart.dim == 3 else None
    ortho = Residuals() if frame is not None else None
    for p in points:
        geo = LocalGeometry(metric, p, order)
        f0 = lambda m: geo.to_frame(m, up=0)  # noqa: E731
        gam = geo.christoffel.value
        accs["torsion"].add(gam - gam.transpose(0, 2, 1), [gam])
        nabla_g = covariant_derivative_jet(geo, geo.g, up=0).value
        accs["metric_compatibility"].add(f0(nabla_g), [f0(geo.g.value)])
        lo = f0(geo.riemann_lowered.value)
        sym = np.concatenate([
            (lo + lo.transpose(1, 0, 2, 3)).ravel(),
            (lo + lo.transpose(0, 1, 3, 2)).ravel(),
            (lo - lo.transpose(2, 3, 0, 1)).ravel(),
        ])
        accs["riemann_symmetries"].add(sym, [lo])
        cyc = lo + lo.transpose(0, 2, 3, 1) + lo.transpose(0, 3, 1, 2)
        accs["first_bianchi"].add(cyc, [lo])
        if bianchi2 is not None:
            q = geo.ricci_operator
            div_q = covariant_derivative_jet(geo, q, up=1).value.trace(axis1=0, axis2=2)
            half_dtau = 0.5 * geo.scalar_curvature.grad().value
            bianchi2.add(geo.to_frame(div_q - half_dtau, up=0),
                         [geo.to_frame(div_q, up=0), geo.to_frame(half_dtau, up=0)])
        if recon is not None:
            g, ric, q = geo.g.value, geo.ricci.value, geo.ricci_operator.value
            tau = float(np.trace(q))
            eye = np.eye(3)
            # model[l, i, j, k] = components of K(d_i, d_j) d_k
            model = (np.einsum("jk,li->lijk", ric, eye) - np.einsum("ik,lj->lijk", ric, eye)
                     + np.einsum("jk,li->lijk", g, q) - np.einsum("ik,lj->lijk", g, q)
                     - tau / 2 * (np.einsum("jk,li->lijk", g, eye) - np.einsum("ik,lj->lijk", g, eye)))
            r = geo.riemann.value
            recon.add(geo.to_frame(r - model, up=1), [geo.to_frame(r, up=1)])
        if ortho is not None:
            e = np.column_stack([geo.field(v).value for v in frame])
            gram = e.T @ geo.g.value @ e
            ortho.add(gram - np.diag(metric.chart.signature), [gram])
    out = [accs[k].report(f"geometry.{k}", ref, tol(f"geometry.{k}"))
           for k, ref in zip(names, (REF_TORSION, REF_COMPAT, REF_SYMMETRIES, REF_BIANCHI1))]
    if bianchi2 is not None:
        out.append(bianchi2.report("geometry.contracted_bianchi", REF_BIANCHI2,
                                   tol("geometry.contracted_bianchi")))
    else:
        out.append(CheckReport.skipped("geometry.contracted_bianchi", REF_BIANCHI2,
                                       "needs jet order >= 3", tol("geometry.contracted_bianchi")))
    if recon is not None:
        out.append(recon.report("geometry.reconstruction_3d", REF_3D, tol("geometry.reconstruction_3d")))
    if ortho is not None:
        out.append(ortho.report("geometry.frame_orthonormality", REF_FRAME,
                                tol("geometry.frame_orthonormality")))
    return out


def _skip_all(names: Sequence[tuple[str, str]], reason: str, tol: Tolerances) -> list[CheckReport]:
    return [CheckReport.skipped(n, ref, reason, tol(n)) for n, ref in names]


def contact_checks(spec: ModelSpec, points: Sequence, tol: Tolerances,
                   order: int = DEFAULT_ORDER) -> list[CheckReport]:
    s = spec.structure
    if s is None:
        return _skip_all([("contact.structure", contact.REF_STRUCTURE)],
                         "model has no almost contact structure", tol)
    out = [contact.validate_structure(s, points, tol("contact.structure"), order)]
    if not out[0].holds:
        return out
    out.append(contact.check_almost_cokahler(s, points, tol("contact.almost_cokahler"), order))
    out += contact.identity_reports(s, points, tol("contact.identity"), order)
    out.append(contact.check_cokahler(s, points, tol("contact.cokahler"), order))
    out.append(contact.check_killing_xi(s, points, tol("contact.killing_xi"), order))
    nullity = contact.nullity_fit(s, points, tol("contact.nullity"), order)
    out += nullity.reports()
    out.append(contact.ricci_3d_check(s, points, nullity, tol("contact.ricci_3d"), order))
    out += contact.eta_einstein_fit(s, points, tol("contact.eta_einstein"), order).reports()
    return out


def soliton_checks(spec: ModelSpec, points: Sequence, tol: Tolerances,
                   order: int = DEFAULT_ORDER) -> list[CheckReport]:
    sd = spec.soliton
    if sd is None:
        return _skip_all([("soliton.residual", soliton.REF_SOLITON),
                          ("soliton.curvature_identity", soliton.REF_CURVATURE)],
                         "model has no soliton data", tol)
    out = [soliton.soliton_residual(spec.metric, sd, points, tol("soliton.residual"), order)]
    if order >= 3:
        out.append(soliton.soliton_curvature_identity(spec.metric, sd, points,
                                                      tol("soliton.curvature_identity"), order))
    else:
        out.append(CheckReport.skipped("soliton.curvature_identity", soliton.REF_CURVATURE,
                                       "needs jet order >= 3", tol("soliton.curvature_identity")))
    return out


def fluid_checks(spec: ModelSpec, points: Sequence, tol: Tolerances,
                 order: int = DEFAULT_ORDER) -> list[CheckReport]:
    u = spec.velocity
    k9_names = [("fluid.k9.grouping_a", fluid.REF_K9_A), ("fluid.k9.grouping_b", fluid.REF_K9_B)]
    if u is None:
        return _skip_all([("fluid.fit", fluid.REF_FIT)], "model has no fluid velocity", tol)
    fd = fluid.fluid_fit(spec.metric, u, points, tol("fluid.fit"), spec.k_grav, order)
    out = [fd.fit, fluid.trace_identity(fd, tol("fluid.trace_identity")),
           fluid.efe_check(fd, tol("fluid.field_equations")),
           fluid.flow_kinematics(spec.metric, u, points, order).report()]
    sd = spec.soliton
    if sd is None or math.isinf(sd.m):
        out += _skip_all(k9_names, "needs soliton data with finite m", tol)
    elif order < 3:
        out += _skip_all(k9_names, "needs jet order >= 3", tol)
    else:
        out += fluid.identity_k9_residual(spec.metric, u, sd, points, tol("fluid.k9"), order)
    return out


def run_suite(spec: ModelSpec, suite: str = "all", points: int = 16, seed: int = 42,
              tol: float | None = None, order: int = DEFAULT_ORDER,
              sample: Sequence | None = None) -> SuiteReport:
    """Run one suite (or ``"all"``) and aggregate the reports.

    Each report is re-judged against the model's recorded expectation, so a
    model can state that an identity is known to fail.
    """
    selected = SUITES if suite == "all" else (suite,)
    for s in selected:
        if s not in SUITES:
            raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    tols = Tolerances(tol)
    pts = list(sample) if sample is not None else sample_points(spec, points, seed)
    reports: list[CheckReport] = []
    if "geometry" in selected:
        reports += geometry_checks(spec.metric, pts, tols, order, spec.frame)
        if spec.goldens:
            reports += golden_checks(spec, pts, tols("golden"), order)
    if "contact" in selected:
        reports += contact_checks(spec, pts, tols, order)
    if "soliton" in selected:
        reports += soliton_checks(spec, pts, tols, order)
    if "fluid" in selected:
        reports += fluid_checks(spec, pts, tols, order)
    for r in reports:
        if r.verdict not in (Verdict.SKIPPED, Verdict.INDETERMINATE):
            r.expect(spec.expected(r.name))
    meta = {
        "model": spec.name,
        "params": dict(spec.params),
        "suite": suite,
        "points": len(pts),
        "seed": seed if sample is None else None,
        "tolerance": tol,
        "order": order,
        "version": __version__,
        "sample": [list(p) for p in pts],
    }
    return aggregate(reports, meta)

"""Almost contact metric structures and the almost co-Kähler identities.

The Reeb field is called ``xi`` everywhere (it is also commonly written
zeta).  Structure tensors are stored in coordinates: ``phi[a, b] = phi^a_b``,
``xi[a]`` and ``eta[b]``.  Derived operators at a point:

* ``h = 1/2 Lie_xi(phi)`` and ``h' = h o phi``
* the Jacobi operator ``l = K(., xi) xi``
* the fundamental 2-form ``Phi(X, Y) = g(X, phi Y)``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .geometry import (
    DEFAULT_ORDER,
    GeometryError,
    LocalGeometry,
    MetricField,
    TensorField,
    covariant_derivative_jet,
    exterior_derivative_jet,
    lie_derivative_jet,
)
from .jets import Jet, einsum
from .report import HOLDS, CheckReport, Residuals, Verdict

IDENTITY_TOL = 1e-7
STRUCTURE_TOL = 1e-8
CONSTANT_TOL = 1e-6

REF_STRUCTURE = "phi^2 + I = eta (x) xi, eta(xi) = 1; g(X,Y) = g(phi X, phi Y) + eta(X) eta(Y)"
REF_ALMOST_COKAHLER = "d eta = 0 and d Phi = 0, Phi(X,Y) = g(X, phi Y)"
REF_COKAHLER = "nabla Phi = 0"
REF_KILLING = "Lie_xi g = 0"
REF_NULLITY = "K(X,Y)xi = kappa(eta(Y)X - eta(X)Y) + mu(eta(Y)hX - eta(X)hY)"
REF_H2 = "h^2 = kappa phi^2"
REF_Q_NULLITY = "Q = 2n kappa eta (x) xi + mu h"
REF_RIC_XI = "Ric(xi, xi) = 2n kappa"
REF_Q_3D = "Q = (tau/2 - kappa) I + (3 kappa - tau/2) eta (x) xi + mu h"
REF_ETA_EINSTEIN = "Ric = a1 g + b1 eta (x) eta"
REF_ETA_EINSTEIN_TRACE = "a1 + b1 = -tr h^2"

IDENTITIES = {
    "h_xi": "h xi = 0",
    "phi_h_anticommute": "phi h + h phi = 0",
    "trace_h": "tr h = 0 = tr h'",
    "h_self_adjoint": "g(hX, Y) = g(X, hY), g(h'X, Y) = g(X, h'Y)",
    "nabla_xi_phi": "nabla_xi phi = 0",
    "nabla_xi": "nabla xi = h'",
    "nabla_xi_h": "nabla_xi h = -h^2 phi - phi l",
    "jacobi": "phi l phi - l = 2 h^2",
    "ricci_xi": "Ric(xi, xi) + tr h^2 = 0",
}


class ContactError(GeometryError):
    pass


@dataclass(frozen=True, eq=False)
class ContactStructure:
    metric: MetricField
    phi: TensorField
    xi: TensorField
    eta: TensorField

    def __post_init__(self):
        chart = self.metric.chart
        if chart.dim % 2 == 0:
            raise ContactError(f"almost contact structures need odd dimension, chart has {chart.dim}")
        for name, tf, valence in (("phi", self.phi, (1, 1)), ("xi", self.xi, (1, 0)),
                                  ("eta", self.eta, (0, 1))):
            if (tf.up, tf.down) != valence:
                raise ContactError(f"{name} must have valence {valence}, got {(tf.up, tf.down)}")
            if tf.chart.coords != chart.coords:
                raise ContactError(f"{name} is defined on a different chart")

    @property
    def chart(self):
        return self.metric.chart

    @property
    def n(self) -> int:
        return (self.chart.dim - 1) // 2

    def at(self, point, order: int = DEFAULT_ORDER) -> "LocalStructure":
        return LocalStructure(self, LocalGeometry(self.metric, point, order))


class LocalStructure:
    """Structure tensors and derived operators at one point."""

    def __init__(self, s: ContactStructure, geo: LocalGeometry):
        self.s = s
        self.geo = geo
        self.phi = geo.field(s.phi)
        self.xi = geo.field(s.xi)
        self.eta = geo.field(s.eta)

    @property
    def dim(self) -> int:
        return self.geo.dim

    @cached_property
    def h(self) -> Jet:
        return lie_derivative_jet(self.xi, self.phi, up=1) * 0.5

    @cached_property
    def hprime(self) -> Jet:
        return einsum("ac,cb->ab", self.h, self.phi)

    @cached_property
    def jacobi(self) -> Jet:
        """``l^a_b`` with ``l X = K(X, xi) xi``."""
        r = einsum("abjk,j->abk", self.geo.riemann, self.xi)
        return einsum("abk,k->ab", r, self.xi)

    @cached_property
    def fundamental_form(self) -> Jet:
        return einsum("ik,kj->ij", self.geo.g, self.phi)

    @cached_property
    def nabla_phi(self) -> Jet:
        return covariant_derivative_jet(self.geo, self.phi, up=1)

    @cached_property
    def nabla_xi(self) -> Jet:
        """``nabla_xi[a, c] = (nabla_c xi)^a``."""
        return covariant_derivative_jet(self.geo, self.xi, up=1)

    @cached_property
    def nabla_h(self) -> Jet:
        return covariant_derivative_jet(self.geo, self.h, up=1)

    def operator(self, name: str) -> np.ndarray:
        return getattr(self, name).value


def validate_structure(s: ContactStructure, points: Sequence, tol: float = STRUCTURE_TOL,
                       order: int = 1) -> CheckReport:
    acc = Residuals()
    parts = {"phi_squared": 0.0, "eta_xi": 0.0, "compatibility": 0.0, "eta_phi_and_phi_xi": 0.0}
    for p in points:
        ls = s.at(p, order)
        g = ls.geo.g.value
        phi, xi, eta = ls.phi.value, ls.xi.value, ls.eta.value
        n = len(xi)
        r1 = ls.geo.to_frame(phi @ phi + np.eye(n) - np.outer(xi, eta), up=1)
        r2 = np.array([eta @ xi - 1.0])
        r3 = ls.geo.to_frame(phi.T @ g @ phi - g + np.outer(eta, eta), up=0)
        r4 = np.concatenate([ls.geo.to_frame(eta @ phi, up=0), ls.geo.to_frame(phi @ xi, up=1)])
        for key, r in zip(parts, (r1, r2, r3, r4)):
            parts[key] = max(parts[key], float(np.max(np.abs(r))))
        acc.add(np.concatenate([r1.ravel(), r2, r3.ravel(), r4]),
                [ls.geo.to_frame(phi, up=1), ls.geo.to_frame(xi, up=1), ls.geo.to_frame(eta, up=0)])
    return acc.report("contact.structure", REF_STRUCTURE, tol, details=parts)


def compute_h(s: ContactStructure, point, order: int = 1) -> np.ndarray:
    return s.at(point, order).h.value


def compute_hprime(s: ContactStructure, point, order: int = 1) -> np.ndarray:
    return s.at(point, order).hprime.value


def jacobi_operator(s: ContactStructure, point, order: int = 2) -> np.ndarray:
    return s.at(point, order).jacobi.value


def check_almost_cokahler(s: ContactStructure, points: Sequence, tol: float = STRUCTURE_TOL,
                          order: int = 1) -> CheckReport:
    acc = Residuals()
    d_eta_max = d_phi_max = 0.0
    for p in points:
        ls = s.at(p, order)
        d_eta = ls.geo.to_frame(exterior_derivative_jet(ls.eta).value, up=0)
        d_form = ls.geo.to_frame(exterior_derivative_jet(ls.fundamental_form).value, up=0)
        d_eta_max = max(d_eta_max, float(np.max(np.abs(d_eta))))
        d_phi_max = max(d_phi_max, float(np.max(np.abs(d_form))))
        acc.add(np.concatenate([d_eta.ravel(), d_form.ravel()]),
                [ls.geo.to_frame(ls.eta.value, up=0), ls.geo.to_frame(ls.fundamental_form.value, up=0)])
    return acc.report("contact.almost_cokahler", REF_ALMOST_COKAHLER, tol,
                      details={"d_eta": d_eta_max, "d_Phi": d_phi_max})


def check_cokahler(s: ContactStructure, points: Sequence, tol: float = STRUCTURE_TOL,
                   order: int = 1, expected: str = HOLDS) -> CheckReport:
    acc = Residuals()
    for p in points:
        ls = s.at(p, order)
        form = ls.fundamental_form
        nabla = covariant_derivative_jet(ls.geo, form, up=0).value
        acc.add(ls.geo.to_frame(nabla, up=0), [ls.geo.to_frame(form.value, up=0)])
    return acc.report("contact.cokahler", REF_COKAHLER, tol, expected=expected)


def check_killing_xi(s: ContactStructure, points: Sequence, tol: float = STRUCTURE_TOL,
                     order: int = 1, expected: str = HOLDS) -> CheckReport:
    acc = Residuals()
    for p in points:
        ls = s.at(p, order)
        lie_g = lie_derivative_jet(ls.xi, ls.geo.g, up=0).value
        acc.add(ls.geo.to_frame(lie_g, up=0), [ls.geo.to_frame(ls.xi.value, up=1)])
    return acc.report("contact.killing_xi", REF_KILLING, tol, expected=expected)


def identity_suite(s: ContactStructure, points: Sequence, tol: float = IDENTITY_TOL,
                   order: int = DEFAULT_ORDER) -> CheckReport:
    """One report whose residual is the worst over all almost co-Kähler identities."""
    parts = identity_reports(s, points, tol, order)
    name, ref = "contact.identity_suite", "; ".join(IDENTITIES.values())
    if any(r.verdict == Verdict.SKIPPED for r in parts):
        return CheckReport.skipped(name, ref, parts[0].notes[0], tol)
    worst = max(parts, key=lambda r: r.max_residual)
    return CheckReport.judged(name, ref, worst.points_used, worst.max_residual, tol, worst.scale,
                              details={r.name.rsplit(".", 1)[1]: r.max_residual for r in parts})


def identity_reports(s: ContactStructure, points: Sequence, tol: float = IDENTITY_TOL,
                     order: int = DEFAULT_ORDER, require_almost_cokahler: bool = True) -> list[CheckReport]:
    """Per-identity residuals of the identities every almost co-Kähler structure satisfies.

    The structure is first tested for ``d eta = d Phi = 0``; if that fails the
    identities are not claimed and every entry is reported as skipped.
    """
    if require_almost_cokahler:
        gate = check_almost_cokahler(s, points, STRUCTURE_TOL, min(order, 2))
        if not gate.holds:
            reason = f"structure is not almost co-Kähler (residual {gate.max_residual:.3g})"
            return [CheckReport.skipped(f"contact.identity.{k}", ref, reason, tol)
                    for k, ref in IDENTITIES.items()]
    if order < 2:
        raise GeometryError("the identity suite needs jet order >= 2")
    accs = {k: Residuals() for k in IDENTITIES}
    for p in points:
        ls = s.at(p, order)
        geo = ls.geo
        g = geo.g.value
        phi, xi, eta = ls.phi.value, ls.xi.value, ls.eta.value
        h, hp, ell = ls.h.value, ls.hprime.value, ls.jacobi.value
        f = lambda m, up=1: geo.to_frame(m, up=up)  # noqa: E731
        hf, hpf, phif, ellf = f(h), f(hp), f(phi), f(ell)
        base = [hf, phif, hpf]

        accs["h_xi"].add(f(h @ xi), base)
        accs["phi_h_anticommute"].add(f(phi @ h + h @ phi), base)
        accs["trace_h"].add(np.array([np.trace(h), np.trace(hp)]), base)
        gh, ghp = g @ h, g @ hp
        accs["h_self_adjoint"].add(
            np.concatenate([f(gh - gh.T, 0).ravel(), f(ghp - ghp.T, 0).ravel()]), base)
        nabla_phi = ls.nabla_phi.value
        accs["nabla_xi_phi"].add(f(np.einsum("abc,c->ab", nabla_phi, xi)),
                                 [geo.to_frame(nabla_phi, up=1), phif])
        nabla_xi = ls.nabla_xi.value
        accs["nabla_xi"].add(f(nabla_xi - hp), [f(nabla_xi), hpf])
        nabla_h_xi = np.einsum("abc,c->ab", ls.nabla_h.value, xi)
        rhs = -h @ h @ phi - phi @ ell
        accs["nabla_xi_h"].add(f(nabla_h_xi - rhs), [f(nabla_h_xi), f(rhs), ellf, hf])
        lhs = phi @ ell @ phi - ell
        accs["jacobi"].add(f(lhs - 2 * h @ h), [f(lhs), ellf, f(h @ h)])
        ric = geo.ricci.value
        ric_xx = xi @ ric @ xi
        tr_h2 = np.trace(h @ h)
        accs["ricci_xi"].add(abs(ric_xx + tr_h2), [ric_xx, tr_h2])
    return [accs[k].report(f"contact.identity.{k}", ref, tol) for k, ref in IDENTITIES.items()]


def _frame_vectors(ls: LocalStructure, frame) -> np.ndarray:
    if frame is None or frame == "orthonormal":
        return ls.geo.frame
    if frame == "coordinate":
        return np.eye(ls.dim)
    cols = [ls.geo.field(v).value for v in frame]
    return np.column_stack(cols)


@dataclass
class NullityParams:
    """Fitted nullity constants; ``mu`` is ``None`` when ``h`` vanishes."""

    kappa: float
    mu: float | None
    per_point: list[tuple[float, float | None]]
    deviation: float
    residual: float
    scale: float
    tolerance: float
    points_used: int
    constant_tol: float = CONSTANT_TOL
    extra: list[CheckReport] = field(default_factory=list)

    @property
    def succeeded(self) -> bool:
        return self.residual < self.tolerance and self.deviation < self.constant_tol

    @property
    def mu_or_zero(self) -> float:
        return 0.0 if self.mu is None else self.mu

    def report(self, expected: str = HOLDS) -> CheckReport:
        notes = []
        if self.mu is None:
            notes.append("h vanishes at the fitting points: mu is indeterminate")
        # the fit holds when the residual is small and the coefficients are constant
        combined = max(self.residual, self.deviation * self.tolerance / self.constant_tol)
        return CheckReport.judged(
            "contact.nullity_fit", REF_NULLITY, self.points_used, combined, self.tolerance,
            self.scale, expected, notes=notes,
            details={"kappa": self.kappa, "mu": self.mu, "fit_residual": self.residual,
                     "deviation": self.deviation,
                     "per_point_kappa": [k for k, _ in self.per_point],
                     "per_point_mu": [m for _, m in self.per_point]})

    def reports(self, expected: str = HOLDS) -> list[CheckReport]:
        return [self.report(expected)] + list(self.extra)


def nullity_fit(s: ContactStructure, points: Sequence, tol: float = IDENTITY_TOL,
                order: int = 2, frame=None, constant_tol: float = CONSTANT_TOL) -> NullityParams:
    """Least-squares (kappa, mu) at each point over all ordered frame pairs."""
    per_point: list[tuple[float, float | None]] = []
    fit = Residuals()
    for p in points:
        ls = s.at(p, order)
        geo = ls.geo
        r = geo.riemann.value
        xi, eta, h = ls.xi.value, ls.eta.value, ls.h.value
        e = _frame_vectors(ls, frame)
        n = ls.dim
        rows_b, rows_1, rows_2 = [], [], []
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                ea, eb = e[:, a], e[:, b]
                lhs = np.einsum("lijk,i,j,k->l", r, ea, eb, xi)
                c1 = (eta @ eb) * ea - (eta @ ea) * eb
                c2 = (eta @ eb) * (h @ ea) - (eta @ ea) * (h @ eb)
                # compare in an orthonormal basis so the least-squares norm is the metric norm
                rows_b.append(geo.coframe @ lhs)
                rows_1.append(geo.coframe @ c1)
                rows_2.append(geo.coframe @ c2)
        bvec = np.concatenate(rows_b)
        a1 = np.concatenate(rows_1)
        a2 = np.concatenate(rows_2)
        if np.linalg.norm(a2) <= 1e-10 * (1.0 + np.linalg.norm(a1)):
            kappa = float(a1 @ bvec / (a1 @ a1)) if a1 @ a1 > 0 else 0.0
            mu = None
            model = kappa * a1
        else:
            mat = np.column_stack([a1, a2])
            kappa, mu = np.linalg.solve(mat.T @ mat, mat.T @ bvec)
            kappa, mu = float(kappa), float(mu)
            model = mat @ np.array([kappa, mu])
        per_point.append((kappa, mu))
        fit.add(bvec - model, [bvec])

    kappas = np.array([k for k, _ in per_point])
    mus = [m for _, m in per_point]
    mu_known = [m for m in mus if m is not None]
    deviation = float(np.ptp(kappas)) if len(kappas) else 0.0
    if mu_known:
        deviation = max(deviation, float(np.ptp(mu_known)))
    mu_mean = float(np.mean(mu_known)) if len(mu_known) == len(mus) and mus else None
    params = NullityParams(
        kappa=float(np.mean(kappas)), mu=mu_mean, per_point=per_point, deviation=deviation,
        residual=fit.worst, scale=fit.scale, tolerance=tol, points_used=fit.count,
        constant_tol=constant_tol,
    )
    params.extra = _nullity_consequences(s, points, params, tol, order)
    return params


def _nullity_consequences(s: ContactStructure, points, params: NullityParams, tol: float,
                          order: int) -> list[CheckReport]:
    if not params.succeeded:
        reason = "nullity fit failed: no constant (kappa, mu)"
        return [CheckReport.skipped("contact.nullity.h2_kappa_phi2", REF_H2, reason, tol),
                CheckReport.skipped("contact.nullity.ricci_operator", REF_Q_NULLITY, reason, tol),
                CheckReport.skipped("contact.nullity.ricci_xi", REF_RIC_XI, reason, tol)]
    gate = check_almost_cokahler(s, points, STRUCTURE_TOL, min(order, 2))
    if not gate.holds:
        reason = "structure is not almost co-Kähler"
        return [CheckReport.skipped("contact.nullity.h2_kappa_phi2", REF_H2, reason, tol),
                CheckReport.skipped("contact.nullity.ricci_operator", REF_Q_NULLITY, reason, tol),
                CheckReport.skipped("contact.nullity.ricci_xi", REF_RIC_XI, reason, tol)]
    kappa, mu = params.kappa, params.mu_or_zero
    acc_h2, acc_q, acc_xx = Residuals(), Residuals(), Residuals()
    for p in points:
        ls = s.at(p, order)
        h, phi, xi, eta = ls.h.value, ls.phi.value, ls.xi.value, ls.eta.value
        q = ls.geo.ricci_operator.value
        f = lambda m: ls.geo.to_frame(m, up=1)  # noqa: E731
        acc_h2.add(f(h @ h - kappa * phi @ phi), [f(h @ h), f(phi @ phi) * abs(kappa)])
        model = 2 * s.n * kappa * np.outer(xi, eta) + mu * h
        acc_q.add(f(q - model), [f(q), f(model)])
        ric_xx = xi @ ls.geo.ricci.value @ xi
        acc_xx.add(abs(ric_xx - 2 * s.n * kappa), [ric_xx, 2 * s.n * kappa])
    return [acc_h2.report("contact.nullity.h2_kappa_phi2", REF_H2, tol),
            acc_q.report("contact.nullity.ricci_operator", REF_Q_NULLITY, tol),
            acc_xx.report("contact.nullity.ricci_xi", REF_RIC_XI, tol)]


def ricci_3d_check(s: ContactStructure, points: Sequence, nullity: NullityParams,
                   tol: float = IDENTITY_TOL, order: int = 2) -> CheckReport:
    name = "contact.ricci_3d"
    if s.chart.dim != 3:
        return CheckReport.skipped(name, REF_Q_3D, "only defined in dimension 3", tol)
    if not nullity.succeeded:
        return CheckReport.skipped(name, REF_Q_3D, "nullity fit failed", tol)
    kappa, mu = nullity.kappa, nullity.mu_or_zero
    acc = Residuals()
    for p in points:
        ls = s.at(p, order)
        q = ls.geo.ricci_operator.value
        tau = float(np.trace(q))
        xi, eta, h = ls.xi.value, ls.eta.value, ls.h.value
        model = (tau / 2 - kappa) * np.eye(3) + (3 * kappa - tau / 2) * np.outer(xi, eta) + mu * h
        f = lambda m: ls.geo.to_frame(m, up=1)  # noqa: E731
        acc.add(f(q - model), [f(q), f(model)])
    return acc.report(name, REF_Q_3D, tol, details={"kappa": kappa, "mu": mu})


@dataclass
class EtaEinsteinCoeffs:
    a1: float
    b1: float
    per_point: list[tuple[float, float]]
    deviation: float
    residual: float
    scale: float
    tolerance: float
    points_used: int
    trace_report: CheckReport | None = None
    constant_tol: float = CONSTANT_TOL

    @property
    def succeeded(self) -> bool:
        return self.residual < self.tolerance and self.deviation < self.constant_tol

    def report(self, expected: str = HOLDS) -> CheckReport:
        combined = max(self.residual, self.deviation * self.tolerance / self.constant_tol)
        return CheckReport.judged(
            "contact.eta_einstein", REF_ETA_EINSTEIN, self.points_used, combined, self.tolerance,
            self.scale, expected,
            details={"a1": self.a1, "b1": self.b1, "fit_residual": self.residual,
                     "deviation": self.deviation,
                     "per_point_a1": [a for a, _ in self.per_point],
                     "per_point_b1": [b for _, b in self.per_point]})

    def reports(self, expected: str = HOLDS) -> list[CheckReport]:
        out = [self.report(expected)]
        if self.trace_report is not None:
            out.append(self.trace_report)
        return out


def eta_einstein_fit(s: ContactStructure, points: Sequence, tol: float = IDENTITY_TOL,
                     order: int = 2, constant_tol: float = CONSTANT_TOL) -> EtaEinsteinCoeffs:
    fit = Residuals()
    per_point = []
    trace_acc = Residuals()
    gate = check_almost_cokahler(s, points, STRUCTURE_TOL, min(order, 2))
    for p in points:
        ls = s.at(p, order)
        geo = ls.geo
        ric = geo.to_frame(geo.ricci.value, up=0)
        gf = geo.to_frame(geo.g.value, up=0)
        ef = geo.to_frame(ls.eta.value, up=0)
        mat = np.column_stack([gf.ravel(), np.outer(ef, ef).ravel()])
        coef, *_ = np.linalg.lstsq(mat, ric.ravel(), rcond=None)
        a1, b1 = float(coef[0]), float(coef[1])
        per_point.append((a1, b1))
        fit.add(ric.ravel() - mat @ coef, [ric])
        tr_h2 = float(np.trace(ls.h.value @ ls.h.value))
        trace_acc.add(abs(a1 + b1 + tr_h2), [a1, b1, tr_h2])
    a = np.array([x for x, _ in per_point])
    b = np.array([y for _, y in per_point])
    deviation = float(max(np.ptp(a), np.ptp(b))) if len(a) else 0.0
    if gate.holds:
        trace_report = trace_acc.report("contact.eta_einstein.trace", REF_ETA_EINSTEIN_TRACE, tol)
    else:
        trace_report = CheckReport.skipped("contact.eta_einstein.trace", REF_ETA_EINSTEIN_TRACE,
                                           "structure is not almost co-Kähler", tol)
    return EtaEinsteinCoeffs(float(a.mean()), float(b.mean()), per_point, deviation, fit.worst,
                             fit.scale, tol, fit.count, trace_report, constant_tol)


__all__ = [
    "ContactStructure",
    "LocalStructure",
    "NullityParams",
    "EtaEinsteinCoeffs",
    "validate_structure",
    "compute_h",
    "compute_hprime",
    "jacobi_operator",
    "identity_suite",
    "identity_reports",
    "check_almost_cokahler",
    "check_cokahler",
    "check_killing_xi",
    "nullity_fit",
    "ricci_3d_check",
    "eta_einstein_fit",
    "Verdict",
]

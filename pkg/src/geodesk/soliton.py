"""Residual checks for gradient Ricci and quasi-Einstein solitons.

The general equation is

    Ric + Hess w - (1/m) dw (x) dw = (rho * tau + lambda1) g

with ``m = inf`` dropping the quadratic term.  Residuals are tensor max-norms
of orthonormal-frame components, divided by one plus the largest input term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import exprlang
from .exprlang import Expr
from .geometry import (
    DEFAULT_ORDER,
    GeometryError,
    InsufficientOrderError,
    LocalGeometry,
    MetricField,
    covariant_derivative_jet,
    hessian_jet,
)
from .jets import Jet
from .report import HOLDS, CheckReport, Residuals

SOLITON_TOL = 1e-8
IDENTITY_TOL = 1e-7

REF_SOLITON = "Ric + Hess w - (1/m) dw (x) dw = (rho tau + lambda1) g"
REF_GRADIENT_RICCI = "Ric + Hess w = lambda1 g"
REF_GENERALIZED = "Ric + Hess w - alpha dw (x) dw = beta g"
REF_CURVATURE = ("K(E,F)Dw = (nabla_F Q)E - (nabla_E Q)F + (beta/m)(F(w)E - E(w)F)"
                 " + (1/m)(E(w)QF - F(w)QE) + (E beta)F - (F beta)E")


class SolitonError(GeometryError):
    pass


@dataclass(frozen=True)
class SolitonData:
    """Potential and constants of an (m, rho)-quasi-Einstein soliton.

    ``m = math.inf`` marks the gradient (Ricci soliton) limit.
    """

    omega: Expr
    m: float = math.inf
    rho: float = 0.0
    lambda1: float = 0.0

    def __post_init__(self):
        if isinstance(self.omega, str):
            object.__setattr__(self, "omega", exprlang.parse(self.omega))
        m = float(self.m)
        if not m > 0:
            raise SolitonError(f"m must be positive (or inf), got {self.m}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "lambda1", float(self.lambda1))

    @property
    def inv_m(self) -> float:
        return 0.0 if math.isinf(self.m) else 1.0 / self.m

    def beta(self, tau):
        return self.rho * tau + self.lambda1

    def with_omega(self, omega) -> "SolitonData":
        return SolitonData(omega, self.m, self.rho, self.lambda1)


def _omega_jet(geo: LocalGeometry, omega) -> Jet:
    if isinstance(omega, str):
        omega = exprlang.parse(omega)
    return exprlang.evaluate(exprlang.bind(omega, geo.chart.coords), geo.point, geo.chart.coords, geo.order)


def _terms(geo: LocalGeometry, omega: Jet, alpha: float, beta) -> list[np.ndarray]:
    """Frame components of Ric, Hess w, -alpha dw(x)dw and -beta g."""
    dw = omega.grad().value
    f = lambda m: geo.to_frame(m, up=0)  # noqa: E731
    return [
        f(geo.ricci.value),
        f(hessian_jet(geo, omega).value),
        f(-alpha * np.outer(dw, dw)),
        f(-beta * geo.g.value),
    ]


def residual_tensor(g: MetricField, omega, alpha: float, beta: float | None, point,
                    rho: float = 0.0, lambda1: float = 0.0, order: int = 2) -> np.ndarray:
    """Orthonormal-frame components of ``Ric + Hess w - alpha dw(x)dw - beta g``.

    When ``beta`` is ``None`` it is taken to be ``rho * tau + lambda1`` at the point.
    """
    geo = LocalGeometry(g, point, order)
    if beta is None:
        beta = rho * float(geo.scalar_curvature.value) + lambda1
    return sum(_terms(geo, _omega_jet(geo, omega), alpha, beta))


def _run(name: str, reference: str, g: MetricField, omega, alpha: float, beta_of_tau, points,
         tol: float, order: int, expected: str) -> CheckReport:
    acc = Residuals()
    for p in points:
        geo = LocalGeometry(g, p, order)
        beta = beta_of_tau(float(geo.scalar_curvature.value))
        terms = _terms(geo, _omega_jet(geo, omega), alpha, beta)
        acc.add(sum(terms), terms)
    return acc.report(name, reference, tol, expected)


def soliton_residual(g: MetricField, s: SolitonData, points: Sequence, tol: float = SOLITON_TOL,
                     order: int = 2, expected: str = HOLDS) -> CheckReport:
    return _run("soliton.residual", REF_SOLITON, g, s.omega, s.inv_m, s.beta, points, tol, order,
                expected)


def gradient_ricci_residual(g: MetricField, omega, lambda1: float, points: Sequence,
                            tol: float = SOLITON_TOL, order: int = 2,
                            expected: str = HOLDS) -> CheckReport:
    s = SolitonData(omega, math.inf, 0.0, lambda1)
    return _run("soliton.gradient_ricci", REF_GRADIENT_RICCI, g, s.omega, s.inv_m, s.beta, points,
                tol, order, expected)


def generalized_qe_residual(g: MetricField, omega, alpha: float, beta_const: float,
                            points: Sequence, tol: float = SOLITON_TOL, order: int = 2,
                            expected: str = HOLDS) -> CheckReport:
    return _run("soliton.generalized_quasi_einstein", REF_GENERALIZED, g, omega, alpha,
                lambda _tau: beta_const, points, tol, order, expected)


def curvature_identity_terms(geo: LocalGeometry, s: SolitonData) -> tuple[np.ndarray, list[np.ndarray]]:
    """Residual of the gradient curvature identity for every frame pair.

    Returns ``(residual, terms)`` where ``residual[a, b]`` is the orthonormal
    component vector for the pair ``(E_a, E_b)``.
    """
    if geo.order < 3:
        raise InsufficientOrderError("the curvature identity needs jet order >= 3 (for nabla Q)")
    omega = _omega_jet(geo, s.omega)
    e = geo.frame
    dw = omega.grad().value
    grad_w = geo.ginv.value @ dw
    q_jet = geo.ricci_operator
    q = q_jet.value
    nabla_q = covariant_derivative_jet(geo, q_jet, up=1).value  # [a, b, c] = (nabla_c Q)^a_b
    beta_jet = geo.scalar_curvature * s.rho + s.lambda1
    beta = float(beta_jet.value)
    dbeta = beta_jet.grad().value
    inv_m = s.inv_m

    r = geo.riemann.value
    lhs = np.einsum("lijk,ia,jb,k->abl", r, e, e, grad_w)
    nq = np.einsum("xyc,ya,cb->abx", nabla_q, e, e)  # (nabla_{E_b} Q) E_a
    t_q = nq - nq.transpose(1, 0, 2)  # (nabla_F Q)E - (nabla_E Q)F
    ew = dw @ e  # E_a(w)
    eb = dbeta @ e  # E_a(beta)
    t_beta = inv_m * beta * (np.einsum("b,xa->abx", ew, e) - np.einsum("a,xb->abx", ew, e))
    qe = q @ e
    t_q2 = inv_m * (np.einsum("a,xb->abx", ew, qe) - np.einsum("b,xa->abx", ew, qe))
    t_db = np.einsum("a,xb->abx", eb, e) - np.einsum("b,xa->abx", eb, e)
    rhs = t_q + t_beta + t_q2 + t_db
    to_on = lambda v: np.einsum("ix,abx->abi", geo.coframe, v)  # noqa: E731
    terms = [to_on(t) for t in (lhs, t_q, t_beta, t_q2, t_db)]
    return to_on(lhs - rhs), terms


def soliton_curvature_identity(g: MetricField, s: SolitonData, points: Sequence,
                               tol: float = IDENTITY_TOL, order: int = DEFAULT_ORDER,
                               expected: str = HOLDS) -> CheckReport:
    acc = Residuals()
    base = soliton_residual(g, s, points, SOLITON_TOL, max(2, min(order, 2)))
    for p in points:
        geo = LocalGeometry(g, p, order)
        res, terms = curvature_identity_terms(geo, s)
        acc.add(res, terms)
    notes = []
    if not base.holds:
        notes.append("the soliton equation itself does not hold at these points; "
                     "the identity is not expected to hold")
    return acc.report("soliton.curvature_identity", REF_CURVATURE, tol, expected, notes=notes,
                      details={"soliton_residual": base.max_residual})


__all__ = [
    "SolitonData",
    "SolitonError",
    "soliton_residual",
    "gradient_ricci_residual",
    "generalized_qe_residual",
    "soliton_curvature_identity",
    "curvature_identity_terms",
    "residual_tensor",
]

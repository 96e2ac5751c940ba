"""Perfect-fluid analysis on Lorentzian charts.

A spacetime is a perfect fluid when ``Ric = alpha1 g + beta1 A (x) A`` for the
one-form ``A = g(., u)`` of a unit timelike velocity ``u``.  With Einstein's
equations ``Ric - (tau/2) g = k T`` and ``T = (p + sigma) A (x) A + p g`` the
coefficients determine pressure ``p`` and energy density ``sigma``.

Naming: the velocity is ``u``, the gravitational constant ``k_grav``; the
soliton scalar keeps the name ``rho``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jets
from .geometry import (
    DEFAULT_ORDER,
    GeometryError,
    InsufficientOrderError,
    LocalGeometry,
    MetricField,
    TensorField,
    divergence_jet,
    exterior_derivative_jet,
)
from .jets import Jet, einsum
from .report import HOLDS, CheckReport, Residuals, Verdict
from .soliton import SolitonData, SolitonError, _omega_jet

FIT_TOL = 1e-8
TRACE_TOL = 1e-9
EFE_TOL = 1e-8
K9_TOL = 1e-7
EOS_TOL = 1e-6

REF_FIT = "Ric = alpha1 g + beta1 A (x) A, A = g(., u), g(u, u) = -1"
REF_TRACE = "tau = n alpha1 - beta1"
REF_EFE = "Ric - (tau/2) g = k T, T = (p + sigma) A (x) A + p g"
REF_KINEMATICS = "div u and |dA|"
REF_K9_A = "{m/(1-n)(alpha1 - beta1) + beta - alpha1} u(w) = m{(1-n)[u(alpha1) + u(beta)] - beta1 div u}"
REF_K9_B = "{m/(1-n)(alpha1 - beta1) + beta - alpha1} u(w) = m(1-n)[u(alpha1) + u(beta) - beta1 div u]"

EOS_CLASSES = ("dust", "stiff", "radiation", "dark_energy", "phantom", "generic")


class FluidError(GeometryError):
    pass


@dataclass
class FluidPoint:
    """Per-point jets kept for derivative terms."""

    geo: LocalGeometry
    u: Jet  # normalized velocity
    a: Jet  # velocity one-form
    alpha1: Jet
    beta1: Jet


@dataclass
class FluidData:
    metric: MetricField
    velocity: TensorField
    points: list
    alpha1: np.ndarray
    beta1: np.ndarray
    tau: np.ndarray
    norm2: np.ndarray  # g(u, u) before normalization
    fit: CheckReport
    k_grav: float = 1.0
    local: list[FluidPoint] = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return self.metric.chart.dim

    @property
    def succeeded(self) -> bool:
        return self.fit.holds


def _local(g: MetricField, u: TensorField, point, order: int) -> tuple[FluidPoint, float]:
    geo = LocalGeometry(g, point, order)
    uj = geo.field(u)
    norm2 = einsum("i,i->", einsum("ij,j->i", geo.g, uj), uj)
    n2 = float(norm2.value)
    if not n2 < -1e-12:
        kind = "null" if abs(n2) <= 1e-12 else "spacelike"
        raise FluidError(f"velocity is {kind} at {list(map(float, point))} (g(u,u) = {n2:.6g})")
    unit = uj * (1.0 / jets.sqrt(norm2 * -1.0))
    a = einsum("ij,j->i", geo.g, unit)
    ric_uu = einsum("i,i->", einsum("ij,j->i", geo.ricci, unit), unit) if order >= 2 else None
    n = geo.dim
    alpha1 = (geo.scalar_curvature + ric_uu) * (1.0 / (n - 1))
    beta1 = alpha1 + ric_uu
    return FluidPoint(geo, unit, a, alpha1, beta1), n2


def fluid_fit(g: MetricField, u: TensorField, points: Sequence, tol: float = FIT_TOL,
              k_grav: float = 1.0, order: int = DEFAULT_ORDER) -> FluidData:
    """Least-squares ``(alpha1, beta1)`` at each point after normalizing ``u``."""
    if not g.chart.lorentzian:
        raise FluidError("fluid analysis needs a Lorentzian chart")
    if order < 2:
        raise InsufficientOrderError("curvature needs jet order >= 2")
    acc = Residuals()
    alphas, betas, taus, norms, local = [], [], [], [], []
    for p in points:
        fp, n2 = _local(g, u, p, order)
        geo = fp.geo
        ric = geo.to_frame(geo.ricci.value, up=0)
        gf = geo.to_frame(geo.g.value, up=0)
        af = geo.to_frame(fp.a.value, up=0)
        mat = np.column_stack([gf.ravel(), np.outer(af, af).ravel()])
        coef, *_ = np.linalg.lstsq(mat, ric.ravel(), rcond=None)
        acc.add(ric.ravel() - mat @ coef, [ric])
        alphas.append(float(coef[0]))
        betas.append(float(coef[1]))
        taus.append(float(geo.scalar_curvature.value))
        norms.append(n2)
        local.append(fp)
    report = acc.report("fluid.fit", REF_FIT, tol,
                        details={"alpha1": alphas, "beta1": betas, "original_norm2": norms})
    return FluidData(g, u, [tuple(map(float, p)) for p in points], np.array(alphas),
                     np.array(betas), np.array(taus), np.array(norms), report, float(k_grav), local)


def trace_identity(fd: FluidData, tol: float = TRACE_TOL, expected: str = HOLDS) -> CheckReport:
    if not fd.succeeded:
        return CheckReport.skipped("fluid.trace_identity", REF_TRACE, "fluid fit failed", tol)
    acc = Residuals()
    n = fd.n
    for tau, a1, b1 in zip(fd.tau, fd.alpha1, fd.beta1):
        acc.add(abs(tau - (n * a1 - b1)), [tau, n * a1, b1])
    return acc.report("fluid.trace_identity", REF_TRACE, tol, expected)


def pressure_density(alpha1: float, beta1: float, n: int,
                     k_grav: float = 1.0) -> tuple[float, float, float | None]:
    """Invert ``alpha1 = k(p - sigma)/(2 - n)``, ``beta1 = k(p + sigma)``.

    Returns ``(p, sigma, p / sigma)``; the ratio is ``None`` when ``sigma`` is 0.
    """
    if n == 2:
        raise FluidError("pressure and density are undefined in dimension 2")
    if k_grav == 0:
        raise FluidError("gravitational constant must be nonzero")
    a = alpha1 * (2 - n) / k_grav
    b = beta1 / k_grav
    p = (a + b) / 2
    sigma = (b - a) / 2
    omega = p / sigma if sigma != 0 else None
    return p, sigma, omega


def efe_pressure_density(fd: FluidData) -> tuple[np.ndarray, np.ndarray, list[float | None]]:
    ps, sigmas, omegas = [], [], []
    for a1, b1 in zip(fd.alpha1, fd.beta1):
        p, s, o = pressure_density(float(a1), float(b1), fd.n, fd.k_grav)
        ps.append(p)
        sigmas.append(s)
        omegas.append(o)
    return np.array(ps), np.array(sigmas), omegas


def eos_classify(p: float, sigma: float, tol: float = EOS_TOL) -> str:
    """Name the equation of state satisfied by ``(p, sigma)``.

    Tests run in the order of ``EOS_CLASSES``, so vacuum (``p = sigma = 0``)
    reads as dust.  The tolerance is relative to ``1 + max(|p|, |sigma|)``.
    """
    t = tol * (1.0 + max(abs(p), abs(sigma)))
    if abs(p) < t:
        return "dust"
    if abs(p - sigma) < t:
        return "stiff"
    if abs(p - sigma / 3) < t:
        return "radiation"
    if abs(p + sigma) < t:
        return "dark_energy"
    if p + sigma < -t:
        return "phantom"
    return "generic"


def efe_check(fd: FluidData, tol: float = EFE_TOL, eos_tol: float = EOS_TOL,
              expected: str = HOLDS) -> CheckReport:
    """Round trip: pressure and density from the fit must solve the field equations."""
    name = "fluid.field_equations"
    if not fd.succeeded:
        return CheckReport.skipped(name, REF_EFE, "fluid fit failed", tol)
    ps, sigmas, omegas = efe_pressure_density(fd)
    acc = Residuals()
    k = fd.k_grav
    for fp, p, s in zip(fd.local, ps, sigmas):
        geo = fp.geo
        gval = geo.g.value
        a = fp.a.value
        t = (p + s) * np.outer(a, a) + p * gval
        tau = float(geo.scalar_curvature.value)
        f = lambda m: geo.to_frame(m, up=0)  # noqa: E731
        lhs = f(geo.ricci.value - tau / 2 * gval)
        acc.add(lhs - k * f(t), [lhs, k * f(t)])
    classes = [eos_classify(float(p), float(s), eos_tol) for p, s in zip(ps, sigmas)]
    return acc.report(name, REF_EFE, tol, expected, details={
        "p": ps.tolist(), "sigma": sigmas.tolist(), "Omega": omegas, "eos": classes,
        "k_grav": k})


@dataclass
class FlowKinematics:
    divergence: list[float]
    rotation_norm: list[float]

    @property
    def max_rotation(self) -> float:
        return max(self.rotation_norm, default=0.0)

    def report(self) -> CheckReport:
        """Raw primitives only; no verdict is implied by their values."""
        return CheckReport("fluid.flow_kinematics", REF_KINEMATICS, len(self.divergence),
                           self.max_rotation, 0.0, 1.0, Verdict.INDETERMINATE,
                           notes=["reported values only; no implication is checked"],
                           details={"divergence": self.divergence,
                                    "rotation_norm": self.rotation_norm})


def flow_kinematics(g: MetricField, u: TensorField, points: Sequence,
                    order: int = 2) -> FlowKinematics:
    divs, rots = [], []
    for p in points:
        fp, _ = _local(g, u, p, max(order, 2))
        divs.append(float(divergence_jet(fp.geo, fp.u).value))
        da = fp.geo.to_frame(exterior_derivative_jet(fp.a).value, up=0)
        rots.append(float(np.max(np.abs(da))))
    return FlowKinematics(divs, rots)


def k9_terms(fp: FluidPoint, s: SolitonData) -> dict[str, float]:
    geo = fp.geo
    u = fp.u.value
    omega = _omega_jet(geo, s.omega)
    beta = geo.scalar_curvature * s.rho + s.lambda1
    return {
        "alpha1": float(fp.alpha1.value),
        "beta1": float(fp.beta1.value),
        "beta": float(beta.value),
        "u_omega": float(omega.grad().value @ u),
        "u_alpha1": float(fp.alpha1.grad().value @ u),
        "u_beta": float(beta.grad().value @ u),
        "div_u": float(divergence_jet(geo, fp.u).value),
    }


def k9_sides(t: dict[str, float], m: float, n: int) -> tuple[float, float, float]:
    """Left side and both groupings of the right side."""
    lhs = (m / (1 - n) * (t["alpha1"] - t["beta1"]) + t["beta"] - t["alpha1"]) * t["u_omega"]
    rhs_a = m * ((1 - n) * (t["u_alpha1"] + t["u_beta"]) - t["beta1"] * t["div_u"])
    rhs_b = m * (1 - n) * (t["u_alpha1"] + t["u_beta"] - t["beta1"] * t["div_u"])
    return lhs, rhs_a, rhs_b


def identity_k9_residual(g: MetricField, u: TensorField, s: SolitonData, points: Sequence,
                         tol: float = K9_TOL, order: int = DEFAULT_ORDER) -> list[CheckReport]:
    """Both bracket groupings of the velocity-contracted soliton identity."""
    if s.inv_m == 0:
        raise SolitonError("this identity needs a finite m")
    if order < 3:
        raise InsufficientOrderError("derivatives of alpha1 and beta need jet order >= 3")
    acc_a, acc_b = Residuals(), Residuals()
    for p in points:
        fp, _ = _local(g, u, p, order)
        t = k9_terms(fp, s)
        lhs, ra, rb = k9_sides(t, s.m, fp.geo.dim)
        scale_terms = [lhs, s.m * t["beta1"] * t["div_u"],
                       s.m * (fp.geo.dim - 1) * (abs(t["u_alpha1"]) + abs(t["u_beta"]))]
        acc_a.add(abs(lhs - ra), scale_terms)
        acc_b.add(abs(lhs - rb), scale_terms)
    return [acc_a.report("fluid.k9.grouping_a", REF_K9_A, tol),
            acc_b.report("fluid.k9.grouping_b", REF_K9_B, tol)]


__all__ = [
    "FluidData",
    "FluidError",
    "FlowKinematics",
    "fluid_fit",
    "trace_identity",
    "pressure_density",
    "efe_pressure_density",
    "efe_check",
    "eos_classify",
    "flow_kinematics",
    "identity_k9_residual",
    "EOS_CLASSES",
]

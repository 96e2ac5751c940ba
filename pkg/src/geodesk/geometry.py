"""Pointwise Riemannian and Lorentzian operators on a coordinate chart.

Conventions used throughout the package:

* Curvature is ``K(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``.
* ``riemann[l, i, j, k]`` holds ``R^l_ijk`` with ``K(d_i, d_j) d_k = R^l_ijk d_l``.
* The lowered tensor is ``R_ijkl = g(K(d_i, d_j) d_l, d_k)``, so the round
  sphere has ``R_{theta phi theta phi} = sin^2 theta`` and
  ``R_ijkl = -R_jikl = -R_ijlk = R_klij``.
* ``Ric(Y, Z) = trace(X -> K(X, Y) Z)``, ``Q = g^-1 Ric`` and the scalar
  curvature is the trace of ``Q``.
* Covariant derivatives append the derivative slot as the *last* index:
  ``nabla(T)[..., c] = (nabla_c T)[...]``.
* Mixed tensors list contravariant axes first, then covariant ones.

Everything is computed from jets of the metric at a single point, so a metric
evaluated to order ``K`` yields Christoffel symbols to order ``K-1`` and
curvature to order ``K-2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import exprlang
from .exprlang import Expr, Predicate
from .jets import Jet, einsum, matinv

DEFAULT_ORDER = 3
_LETTERS = "abcdefghijklmn"


class GeometryError(ValueError):
    pass


class SingularMetricError(GeometryError):
    pass


class SignatureError(GeometryError):
    pass


class InsufficientOrderError(GeometryError):
    pass


@dataclass(frozen=True)
class Chart:
    """Coordinate patch: names, domain predicate, signature and a sampling box."""

    coords: tuple[str, ...]
    domain: Predicate | None = None
    signature: tuple[int, ...] | None = None
    ranges: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) < 2:
            raise GeometryError("a chart needs at least two coordinates")
        if len(set(coords)) != len(coords):
            raise GeometryError(f"duplicate coordinate names in {coords}")
        sig = tuple(self.signature) if self.signature is not None else (1,) * len(coords)
        if len(sig) != len(coords) or any(s not in (1, -1) for s in sig):
            raise GeometryError(f"signature {sig} does not match {len(coords)} coordinates")
        object.__setattr__(self, "signature", sig)
        rng = self.ranges if self.ranges is not None else ((-1.0, 1.0),) * len(coords)
        rng = tuple((float(lo), float(hi)) for lo, hi in rng)
        if len(rng) != len(coords) or any(lo >= hi for lo, hi in rng):
            raise GeometryError(f"bad sampling ranges {rng}")
        object.__setattr__(self, "ranges", rng)
        if self.domain is not None:
            for c in self.domain.terms:
                exprlang.bind(c.left, coords)
                exprlang.bind(c.right, coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def lorentzian(self) -> bool:
        return self.signature.count(-1) == 1

    def margin(self, point: Sequence[float]) -> float:
        if self.domain is None:
            return math.inf
        return exprlang.predicate_margin(self.domain, point, self.coords)

    def parse(self, text: str) -> Expr:
        return exprlang.bind(exprlang.parse(text), self.coords)


def _as_expr(chart: Chart, item) -> Expr:
    if isinstance(item, str):
        return chart.parse(item)
    if isinstance(item, (int, float)):
        return exprlang.Num(float(item))
    return exprlang.bind(item, chart.coords)


@dataclass(frozen=True, eq=False)
class TensorField:
    """Tensor field with ``up`` contravariant and ``down`` covariant slots."""

    chart: Chart
    up: int
    down: int
    components: np.ndarray

    def __post_init__(self):
        comps = np.empty(np.shape(np.asarray(self.components, dtype=object)), dtype=object)
        src = np.asarray(self.components, dtype=object)
        for idx in np.ndindex(src.shape):
            comps[idx] = _as_expr(self.chart, src[idx])
        expected = (self.chart.dim,) * (self.up + self.down)
        if comps.shape != expected:
            raise GeometryError(
                f"valence ({self.up},{self.down}) on a {self.chart.dim}-dimensional chart "
                f"needs component shape {expected}, got {comps.shape}"
            )
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    @property
    def rank(self) -> int:
        return self.up + self.down

    def jet(self, point: Sequence[float], order: int = DEFAULT_ORDER) -> Jet:
        return exprlang.evaluate_many(self.components, point, self.chart.coords, order)


def vector_field(chart: Chart, components: Sequence) -> TensorField:
    return TensorField(chart, 1, 0, np.array(list(components), dtype=object))


def one_form(chart: Chart, components: Sequence) -> TensorField:
    return TensorField(chart, 0, 1, np.array(list(components), dtype=object))


def scalar_field(chart: Chart, expr) -> TensorField:
    return TensorField(chart, 0, 0, np.array(_as_expr(chart, expr), dtype=object))


class MetricField(TensorField):
    """Symmetric (0,2) field; only one of ``g_ij``/``g_ji`` needs to be given."""

    def __init__(self, chart: Chart, components):
        n = chart.dim
        src = np.asarray(components, dtype=object)
        if src.shape != (n, n):
            raise GeometryError(f"metric needs shape ({n}, {n}), got {src.shape}")
        comps = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                comps[i, j] = _as_expr(chart, src[i, j])
        for i in range(n):
            for j in range(i + 1, n):
                a, b = comps[i, j], comps[j, i]
                if a != b:
                    raise GeometryError(
                        f"metric not symmetric: g[{i + 1},{j + 1}] = {exprlang.to_string(a)!r} but "
                        f"g[{j + 1},{i + 1}] = {exprlang.to_string(b)!r}"
                    )
        super().__init__(chart, 0, 2, comps)

    @classmethod
    def from_entries(cls, chart: Chart, entries: Mapping[tuple[int, int], object]) -> "MetricField":
        """Build from zero-based ``(i, j) -> expr`` entries; missing mirrors are filled in."""
        n = chart.dim
        comps = np.full((n, n), exprlang.Num(0.0), dtype=object)
        given: dict[tuple[int, int], Expr] = {}
        for (i, j), item in entries.items():
            if not (0 <= i < n and 0 <= j < n):
                raise GeometryError(f"metric index ({i + 1},{j + 1}) outside dimension {n}")
            given[i, j] = _as_expr(chart, item)
        for (i, j), e in given.items():
            comps[i, j] = e
            if (j, i) not in given:
                comps[j, i] = e
        return cls(chart, comps)


# local geometry -----------------------------------------------------------

def orthonormal_frame(gval: np.ndarray) -> np.ndarray:
    """Columns form a frame with ``E^T g E = diag(+-1)``, ordered by eigenvalue."""
    lam, vec = np.linalg.eigh(gval)
    return vec / np.sqrt(np.abs(lam))


class LocalGeometry:
    """Metric jets and everything derived from them at one point."""

    def __init__(self, metric: MetricField, point: Sequence[float], order: int = DEFAULT_ORDER):
        if order < 1:
            raise InsufficientOrderError("connection needs metric jets of order >= 1")
        self.metric = metric
        self.chart = metric.chart
        self.point = np.asarray(point, dtype=float)
        self.order = order
        self.dim = self.chart.dim
        self.g = metric.jet(self.point, order)
        gval = self.g.value
        lam = np.linalg.eigvalsh(gval)
        scale = max(1.0, float(np.max(np.abs(lam))))
        if np.min(np.abs(lam)) <= 1e-12 * scale:
            raise SingularMetricError(f"metric is singular at {self.point.tolist()}")
        negatives = int(np.sum(lam < 0))
        if negatives != self.chart.signature.count(-1):
            raise SignatureError(
                f"metric at {self.point.tolist()} has {negatives} negative eigenvalue(s); "
                f"chart signature {self.chart.signature}"
            )

    def _need(self, order: int, what: str) -> None:
        if self.order < order:
            raise InsufficientOrderError(f"{what} needs jet order >= {order}, have {self.order}")

    def field(self, tf: TensorField) -> Jet:
        if tf.chart.coords != self.chart.coords:
            raise GeometryError("field lives on a different chart")
        return tf.jet(self.point, self.order)

    @cached_property
    def ginv(self) -> Jet:
        return matinv(self.g)

    @cached_property
    def dg(self) -> Jet:
        """``dg[i, j, c] = d_c g_ij``."""
        return self.g.grad()

    @cached_property
    def christoffel(self) -> Jet:
        """``Gamma[k, i, j] = Gamma^k_ij``."""
        dg = self.dg
        # lowered[i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
        lowered = dg.transpose(2, 0, 1) + dg.transpose(0, 2, 1) - dg
        return einsum("kl,ijl->kij", self.ginv, lowered) * 0.5

    @cached_property
    def riemann(self) -> Jet:
        """``R[l, i, j, k] = R^l_ijk``."""
        self._need(2, "curvature")
        gam = self.christoffel
        dgam = gam.grad()  # dgam[l, j, k, i] = d_i Gamma^l_jk
        d_i = dgam.transpose(0, 3, 1, 2)  # [l, i, j, k]
        quad = einsum("lim,mjk->lijk", gam, gam)
        return d_i - d_i.swapaxes(1, 2) + quad - quad.swapaxes(1, 2)

    @cached_property
    def riemann_lowered(self) -> Jet:
        """``R_ijkl = g(K(d_i, d_j) d_l, d_k)``."""
        return einsum("km,mijl->ijkl", self.g, self.riemann)

    @cached_property
    def ricci(self) -> Jet:
        return self.riemann.trace(0, 1)

    @cached_property
    def ricci_operator(self) -> Jet:
        return einsum("ik,kj->ij", self.ginv, self.ricci)

    @cached_property
    def scalar_curvature(self) -> Jet:
        return self.ricci_operator.trace(0, 1)

    @cached_property
    def frame(self) -> np.ndarray:
        return orthonormal_frame(self.g.value)

    @cached_property
    def coframe(self) -> np.ndarray:
        return np.linalg.inv(self.frame)

    def to_frame(self, values: np.ndarray, up: int, frame: np.ndarray | None = None) -> np.ndarray:
        """Components of a (up, rank-up) tensor in ``frame`` (default: orthonormal)."""
        e = self.frame if frame is None else frame
        einv = self.coframe if frame is None else np.linalg.inv(frame)
        out = np.asarray(values, dtype=float)
        for axis in range(out.ndim):
            m = einv if axis < up else e.T
            out = np.moveaxis(np.tensordot(m, out, axes=([1], [axis])), 0, axis)
        return out


# operators on jets ---------------------------------------------------------

def covariant_derivative_jet(geo: LocalGeometry, t: Jet, up: int) -> Jet:
    rank = len(t.shape)
    letters = _LETTERS[:rank]
    out = letters + "z"
    gam = geo.christoffel
    result = t.grad()
    for p in range(rank):
        swapped = letters[:p] + "y" + letters[p + 1:]
        if p < up:
            result = result + einsum(f"{letters[p]}zy,{swapped}->{out}", gam, t)
        else:
            result = result - einsum(f"yz{letters[p]},{swapped}->{out}", gam, t)
    return result


def lie_derivative_jet(x: Jet, t: Jet, up: int) -> Jet:
    rank = len(t.shape)
    letters = _LETTERS[:rank]
    dx = x.grad()  # dx[a, c] = d_c X^a
    result = einsum(f"z,{letters}z->{letters}", x, t.grad())
    for p in range(rank):
        swapped = letters[:p] + "y" + letters[p + 1:]
        if p < up:
            result = result - einsum(f"{letters[p]}y,{swapped}->{letters}", dx, t)
        else:
            result = result + einsum(f"y{letters[p]},{swapped}->{letters}", dx, t)
    return result


def bracket_jet(x: Jet, y: Jet) -> Jet:
    return lie_derivative_jet(x, y, up=1)


def exterior_derivative_jet(form: Jet, atol: float = 1e-12) -> Jet:
    k = len(form.shape)
    if k > 2:
        raise GeometryError("exterior derivative is implemented for 0-, 1- and 2-forms")
    if k == 2:
        c = form.coeffs
        if np.max(np.abs(c + np.swapaxes(c, 0, 1)), initial=0.0) > atol * (1 + np.max(np.abs(c))):
            raise GeometryError("2-form components are not antisymmetric")
    grad = form.grad()
    nd = k + 1
    out = None
    for j in range(nd):
        coeffs = np.moveaxis(grad.coeffs, k, j)
        term = Jet(coeffs if j % 2 == 0 else -coeffs, form.nvars, grad.order)
        out = term if out is None else out + term
    return out


def gradient_jet(geo: LocalGeometry, w: Jet) -> Jet:
    return einsum("ij,j->i", geo.ginv, w.grad())


def hessian_jet(geo: LocalGeometry, w: Jet) -> Jet:
    return covariant_derivative_jet(geo, w.grad(), up=0)


def divergence_jet(geo: LocalGeometry, x: Jet) -> Jet:
    return covariant_derivative_jet(geo, x, up=1).trace(0, 1)


# value-level API ----------------------------------------------------------

def _geo(metric: MetricField, point, order: int) -> LocalGeometry:
    return LocalGeometry(metric, point, order)


def christoffel(metric: MetricField, point, order: int = 1) -> np.ndarray:
    return _geo(metric, point, order).christoffel.value


def riemann(metric: MetricField, point, order: int = 2) -> np.ndarray:
    return _geo(metric, point, order).riemann.value


def ricci(metric: MetricField, point, order: int = 2) -> np.ndarray:
    return _geo(metric, point, order).ricci.value


def ricci_operator(metric: MetricField, point, order: int = 2) -> np.ndarray:
    return _geo(metric, point, order).ricci_operator.value


def scalar_curvature(metric: MetricField, point, order: int = 2) -> float:
    return float(_geo(metric, point, order).scalar_curvature.value)


def _scalar_jet(geo: LocalGeometry, omega) -> Jet:
    if isinstance(omega, Jet):
        return omega
    expr = _as_expr(geo.chart, omega)
    return exprlang.evaluate(expr, geo.point, geo.chart.coords, geo.order)


def gradient(metric: MetricField, omega, point, order: int = 1) -> np.ndarray:
    geo = _geo(metric, point, order)
    return gradient_jet(geo, _scalar_jet(geo, omega)).value


def hessian(metric: MetricField, omega, point, order: int = 2) -> np.ndarray:
    geo = _geo(metric, point, order)
    return hessian_jet(geo, _scalar_jet(geo, omega)).value


def laplacian_trace(metric: MetricField, omega, point, order: int = 2) -> tuple[float, float]:
    """Trace of the Hessian and its negative (the ``-div grad`` sign convention)."""
    geo = _geo(metric, point, order)
    h = hessian_jet(geo, _scalar_jet(geo, omega)).value
    tr = float(np.einsum("ij,ij->", geo.ginv.value, h))
    return tr, -tr


def covariant_derivative(metric: MetricField, t: TensorField, point, order: int = 2) -> np.ndarray:
    geo = _geo(metric, point, order)
    return covariant_derivative_jet(geo, geo.field(t), t.up).value


def lie_derivative(x: TensorField, t: TensorField, point, order: int = 1) -> np.ndarray:
    if (x.up, x.down) != (1, 0):
        raise GeometryError("Lie derivative needs a vector field")
    xj = x.jet(point, order)
    return lie_derivative_jet(xj, t.jet(point, order), t.up).value


def bracket(x: TensorField, y: TensorField, point, order: int = 1) -> np.ndarray:
    return bracket_jet(x.jet(point, order), y.jet(point, order)).value


def exterior_derivative(form: TensorField, point, order: int = 1) -> np.ndarray:
    if form.up != 0:
        raise GeometryError("exterior derivative needs a covariant tensor")
    return exterior_derivative_jet(form.jet(point, order)).value


def divergence(metric: MetricField, x: TensorField, point, order: int = 1) -> float:
    geo = _geo(metric, point, order)
    return float(divergence_jet(geo, geo.field(x)).value)


@dataclass(frozen=True)
class PointFrame:
    """Frame vectors (coordinate components as columns) at one point."""

    point: np.ndarray
    vectors: np.ndarray

    def gram(self, gval: np.ndarray) -> np.ndarray:
        return self.vectors.T @ gval @ self.vectors

    def orthonormality_defect(self, gval: np.ndarray, signature: Sequence[int]) -> float:
        return float(np.max(np.abs(self.gram(gval) - np.diag(signature))))

    def components(self, v: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.vectors, v)

"""Built-in model catalog, model config files, point sampling and golden values.

Config files are INI-style.  Indices are 1-based and expressions are written
verbatim::

    [chart]
    name = example
    coords = x, y, z
    domain = z > 0
    signature = 1, 1, 1
    range.z = 0, 2

    [metric]
    g.1.1 = 1
    g.1.3 = -y/(2*sqrt(z))

    [frame]
    e.1 = 1, 0, 0

    [structure]
    phi.2.1 = 1          # phi^2_1
    xi.3 = 1
    eta.3 = 1

    [soliton]
    omega = z
    m = 1                # or inf
    rho = 0
    lambda1 = 0

    [fluid]
    u.1 = 1
    k_grav = 1

    [golden]
    h.1 = -exp(z), 0, 0 | published

    [expect]
    contact.cokahler = violated

Golden keys name frame components of a quantity at the frame fields ``e_i``
(the coordinate basis when no frame is given): ``bracket.i.j`` is
``[e_i, e_j]``, ``connection.i.j`` is ``nabla_{e_i} e_j``,
``curvature.i.j.k`` is ``K(e_i, e_j) e_k``, ``ricci_operator.i``, ``h.i`` and
``phi.i`` apply the operator to ``e_i``, ``gradient`` is ``grad w``,
``hessian_operator.i`` is ``nabla_{e_i} grad w``; ``scalar_curvature`` and
``metric_frame.i.j`` are scalars.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import exprlang
from .contact import ContactStructure, LocalStructure
from .exprlang import Expr, ExprError
from .geometry import (
    DEFAULT_ORDER,
    Chart,
    GeometryError,
    LocalGeometry,
    MetricField,
    TensorField,
    bracket_jet,
    covariant_derivative_jet,
    gradient_jet,
    one_form,
    vector_field,
)
from .report import HOLDS, VIOLATED, CheckReport, Residuals
from .soliton import SolitonData

SAMPLE_MARGIN = 0.05
MAX_ATTEMPTS = 10_000
GOLDEN_TOL = 1e-8
SOURCES = ("published", "analytic", "derived")


class ModelError(ValueError):
    pass


class ModelLoadError(ModelError):
    pass


class SamplingError(ModelError):
    pass


@dataclass(frozen=True)
class Golden:
    """Closed-form expected components of one quantity, evaluated per point."""

    quantity: str
    components: tuple[Expr, ...]
    source: str = "derived"

    def values(self, point, coords) -> np.ndarray:
        return np.array([exprlang.value(c, point, coords) for c in self.components])

    def text(self) -> str:
        return ", ".join(exprlang.to_string(c) for c in self.components)


_QUANTITY_ARITY = {
    "bracket": 2,
    "connection": 2,
    "curvature": 3,
    "ricci_operator": 1,
    "h": 1,
    "phi": 1,
    "gradient": 0,
    "hessian_operator": 1,
    "scalar_curvature": 0,
    "metric_frame": 2,
}
_SCALAR_QUANTITIES = ("scalar_curvature", "metric_frame")


def _split_quantity(key: str, dim: int) -> tuple[str, tuple[int, ...]]:
    head, *rest = key.split(".")
    if head not in _QUANTITY_ARITY:
        raise ModelError(f"unknown golden quantity {key!r}; known: {sorted(_QUANTITY_ARITY)}")
    if len(rest) != _QUANTITY_ARITY[head]:
        raise ModelError(f"golden quantity {key!r} needs {_QUANTITY_ARITY[head]} indices")
    try:
        idx = tuple(int(r) - 1 for r in rest)
    except ValueError:
        raise ModelError(f"bad indices in golden quantity {key!r}") from None
    if any(not 0 <= i < dim for i in idx):
        raise ModelError(f"golden quantity {key!r} has an index outside 1..{dim}")
    return head, idx


@dataclass(frozen=True, eq=False)
class ModelSpec:
    name: str
    chart: Chart
    metric: MetricField
    structure: ContactStructure | None = None
    frame: tuple[TensorField, ...] | None = None
    soliton: SolitonData | None = None
    velocity: TensorField | None = None
    goldens: tuple[Golden, ...] = ()
    expect: Mapping[str, str] = field(default_factory=dict)
    params: Mapping[str, Any] = field(default_factory=dict)
    description: str = ""
    k_grav: float = 1.0

    def __post_init__(self):
        dim = self.chart.dim
        if self.metric.chart != self.chart:
            raise ModelError("metric is defined on a different chart")
        if self.structure is not None and self.structure.metric is not self.metric:
            raise ModelError("contact structure uses a different metric")
        if self.frame is not None:
            frame = tuple(self.frame)
            if len(frame) != dim or any((f.up, f.down) != (1, 0) for f in frame):
                raise ModelError(f"frame needs {dim} vector fields")
            object.__setattr__(self, "frame", frame)
        if self.velocity is not None and (self.velocity.up, self.velocity.down) != (1, 0):
            raise ModelError("fluid velocity must be a vector field")
        if self.soliton is not None:
            exprlang.bind(self.soliton.omega, self.chart.coords)
        for gld in self.goldens:
            head, _ = _split_quantity(gld.quantity, dim)
            want = 1 if head in _SCALAR_QUANTITIES else dim
            if len(gld.components) != want:
                raise ModelError(f"golden {gld.quantity!r} needs {want} component(s)")
            if gld.source not in SOURCES:
                raise ModelError(f"golden source must be one of {SOURCES}, got {gld.source!r}")
            if head in ("h", "phi") and self.structure is None:
                raise ModelError(f"golden {gld.quantity!r} needs a contact structure")
            if head in ("gradient", "hessian_operator") and self.soliton is None:
                raise ModelError(f"golden {gld.quantity!r} needs a soliton potential")
            for c in gld.components:
                exprlang.bind(c, self.chart.coords)
        for k, v in self.expect.items():
            if v not in (HOLDS, VIOLATED):
                raise ModelError(f"expectation for {k!r} must be {HOLDS!r} or {VIOLATED!r}")
        object.__setattr__(self, "goldens", tuple(self.goldens))
        object.__setattr__(self, "expect", MappingProxyType(dict(self.expect)))
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    @property
    def dim(self) -> int:
        return self.chart.dim

    def expected(self, check: str) -> str:
        return self.expect.get(check, HOLDS)


# golden evaluation ---------------------------------------------------------

class _Quantities:
    """Frame components of named quantities at one point."""

    def __init__(self, spec: ModelSpec, point, order: int):
        self.spec = spec
        self.geo = LocalGeometry(spec.metric, point, order)
        self.local = LocalStructure(spec.structure, self.geo) if spec.structure else None
        n = spec.dim
        if spec.frame is not None:
            self.frame_jets = [self.geo.field(f) for f in spec.frame]
        else:
            self.frame_jets = [None] * n
        self.e = np.column_stack([
            j.value if j is not None else np.eye(n)[:, i] for i, j in enumerate(self.frame_jets)
        ])
        self.einv = np.linalg.inv(self.e)

    def _frame_jet(self, i: int):
        j = self.frame_jets[i]
        if j is None:
            comps = np.array([exprlang.Num(float(k == i)) for k in range(self.spec.dim)], dtype=object)
            j = exprlang.evaluate_many(comps, self.geo.point, self.spec.chart.coords, self.geo.order)
            self.frame_jets[i] = j
        return j

    def comp(self, v: np.ndarray) -> np.ndarray:
        return self.einv @ v

    def value(self, key: str) -> np.ndarray:
        head, idx = _split_quantity(key, self.spec.dim)
        geo, e = self.geo, self.e
        if head == "bracket":
            i, j = idx
            return self.comp(bracket_jet(self._frame_jet(i), self._frame_jet(j)).value)
        if head == "connection":
            i, j = idx
            nabla = covariant_derivative_jet(geo, self._frame_jet(j), up=1).value
            return self.comp(nabla @ e[:, i])
        if head == "curvature":
            i, j, k = idx
            r = geo.riemann.value
            return self.comp(np.einsum("lijk,i,j,k->l", r, e[:, i], e[:, j], e[:, k]))
        if head == "ricci_operator":
            return self.comp(geo.ricci_operator.value @ e[:, idx[0]])
        if head == "h":
            return self.comp(self.local.h.value @ e[:, idx[0]])
        if head == "phi":
            return self.comp(self.local.phi.value @ e[:, idx[0]])
        if head == "gradient":
            return self.comp(gradient_jet(geo, self._omega()).value)
        if head == "hessian_operator":
            grad = gradient_jet(geo, self._omega())
            return self.comp(covariant_derivative_jet(geo, grad, up=1).value @ e[:, idx[0]])
        if head == "scalar_curvature":
            return np.array([float(geo.scalar_curvature.value)])
        if head == "metric_frame":
            i, j = idx
            return np.array([e[:, i] @ geo.g.value @ e[:, j]])
        raise ModelError(f"unknown quantity {key!r}")

    def _omega(self):
        return exprlang.evaluate(self.spec.soliton.omega, self.geo.point, self.spec.chart.coords,
                                 self.geo.order)


def quantity(spec: ModelSpec, key: str, point, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Engine value of a golden quantity (frame components) at ``point``."""
    return _Quantities(spec, point, order).value(key)


def golden_checks(spec: ModelSpec, points: Sequence, tol: float = GOLDEN_TOL,
                  order: int = DEFAULT_ORDER) -> list[CheckReport]:
    accs = {g.quantity: Residuals() for g in spec.goldens}
    for p in points:
        q = _Quantities(spec, p, order)
        for g in spec.goldens:
            expected = g.values(p, spec.chart.coords)
            accs[g.quantity].add(q.value(g.quantity) - expected, [expected])
    return [accs[g.quantity].report(f"golden.{g.quantity}", f"{g.quantity} = ({g.text()})", tol,
                                    details={"source": g.source})
            for g in spec.goldens]


# sampling -------------------------------------------------------------------

def sample_points(spec: ModelSpec | Chart, count: int, seed: int,
                  margin: float = SAMPLE_MARGIN, max_attempts: int = MAX_ATTEMPTS) -> list[tuple[float, ...]]:
    """Deterministic points inside the chart's box whose domain slack is at least ``margin``."""
    chart = spec.chart if isinstance(spec, ModelSpec) else spec
    if count < 1:
        raise SamplingError("count must be at least 1")
    rng = np.random.default_rng(seed)
    lo = np.array([r[0] for r in chart.ranges])
    hi = np.array([r[1] for r in chart.ranges])
    points = []
    while len(points) < count:
        for _ in range(max_attempts):
            p = rng.uniform(lo, hi)
            try:
                ok = chart.margin(p) >= margin
            except ExprError:
                ok = False
            if ok:
                points.append(tuple(float(x) for x in p))
                break
        else:
            raise SamplingError(f"no point satisfied the domain after {max_attempts} attempts")
    return points


# catalog --------------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    name: str
    default: Any
    description: str
    kind: type = float


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    params: tuple[Param, ...]
    builder: Callable[..., ModelSpec]

    def build(self, overrides: Mapping[str, Any] | None = None) -> ModelSpec:
        values = {p.name: p.default for p in self.params}
        known = {p.name: p for p in self.params}
        for k, v in (overrides or {}).items():
            if k not in known:
                raise ModelError(f"model {self.name!r} has no parameter {k!r}; "
                                 f"parameters: {sorted(known) or 'none'}")
            kind = known[k].kind
            try:
                values[k] = kind(v) if kind is not float else exprlang.parse_number(str(v))
            except (ValueError, ExprError) as exc:
                raise ModelError(f"bad value {v!r} for parameter {k!r}: {exc}") from None
        return self.builder(**values)


def _num(x: float) -> str:
    return exprlang.to_string(exprlang.Num(float(x)))


def _chart(coords, domain: str | None = None, signature=None, ranges=None) -> Chart:
    pred = exprlang.parse_predicate(domain) if domain else None
    return Chart(tuple(coords), pred, signature, ranges)


def _euclidean(n: int) -> ModelSpec:
    if n < 2:
        raise ModelError("euclidean needs n >= 2")
    chart = _chart([f"x{i + 1}" for i in range(n)])
    metric = MetricField(chart, np.where(np.eye(n, dtype=bool), "1", "0"))
    goldens = (Golden("scalar_curvature", (exprlang.Num(0.0),), "analytic"),)
    return ModelSpec("euclidean", chart, metric, goldens=goldens, params={"n": n},
                     description="flat Euclidean space")


def _flat_cokahler3() -> ModelSpec:
    chart = _chart(["x", "y", "z"])
    metric = MetricField(chart, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    phi = TensorField(chart, 1, 1, [["0", "-1", "0"], ["1", "0", "0"], ["0", "0", "0"]])
    s = ContactStructure(metric, phi, vector_field(chart, ["0", "0", "1"]),
                         one_form(chart, ["0", "0", "1"]))
    zero = exprlang.Num(0.0)
    goldens = tuple(Golden(f"h.{i}", (zero,) * 3, "analytic") for i in (1, 2, 3)) + (
        Golden("scalar_curvature", (zero,), "analytic"),)
    return ModelSpec("flat-cokahler3", chart, metric, s, goldens=goldens,
                     description="flat product R^2 x R with its parallel co-Kähler structure")


def _g(chart: Chart, key: str, comps: Sequence[str], source: str) -> Golden:
    return Golden(key, tuple(chart.parse(c) for c in comps), source)


def _paper_example() -> ModelSpec:
    chart = _chart(["x", "y", "z"], "z > 0", ranges=[(-1, 1), (-1, 1), (0, 2)])
    r = "(2*sqrt(z))"
    metric = MetricField(chart, [
        ["1", "0", f"-y/{r}"],
        ["0", "1", f"-x/{r}"],
        [f"-y/{r}", f"-x/{r}", "(x^2 + y^2 + exp(-2*z))/(4*z)"],
    ])
    frame = (
        vector_field(chart, ["1", "0", "0"]),
        vector_field(chart, ["0", "1", "0"]),
        vector_field(chart, ["y*exp(z)", "x*exp(z)", f"{r}*exp(z)"]),
    )
    phi = TensorField(chart, 1, 1, [["0", "-1", f"x/{r}"], ["1", "0", f"-y/{r}"], ["0", "0", "0"]])
    s = ContactStructure(metric, phi, frame[2], one_form(chart, ["0", "0", f"exp(-z)/{r}"]))
    ez, e2z, w = "exp(z)", "exp(2*z)", "2*sqrt(z)*exp(2*z)"
    pub = "published"
    table = {
        "bracket.1.2": ("0", "0", "0"),
        "bracket.1.3": ("0", ez, "0"),
        "bracket.2.3": (ez, "0", "0"),
        "connection.1.1": ("0", "0", "0"),
        "connection.1.2": ("0", "0", f"-{ez}"),
        "connection.1.3": ("0", ez, "0"),
        "connection.2.1": ("0", "0", f"-{ez}"),
        "connection.2.2": ("0", "0", "0"),
        "connection.2.3": (ez, "0", "0"),
        "connection.3.1": ("0", "0", "0"),
        "connection.3.2": ("0", "0", "0"),
        "connection.3.3": ("0", "0", "0"),
        "curvature.1.2.1": ("0", f"-{e2z}", "0"),
        "curvature.1.2.2": (e2z, "0", "0"),
        "curvature.1.2.3": ("0", "0", "0"),
        "curvature.1.3.1": ("0", "0", e2z),
        "curvature.1.3.2": ("0", "0", w),
        "curvature.1.3.3": (f"-{e2z}", f"-{w}", "0"),
        "curvature.2.3.1": ("0", "0", w),
        "curvature.2.3.2": ("0", "0", e2z),
        "curvature.2.3.3": (f"-{w}", f"-{e2z}", "0"),
        "ricci_operator.1": ("0", f"-{w}", "0"),
        "ricci_operator.2": (f"-{w}", "0", "0"),
        "ricci_operator.3": ("0", "0", f"-2*{e2z}"),
        "h.1": (f"-{ez}", "0", "0"),
        "h.2": ("0", ez, "0"),
        "h.3": ("0", "0", "0"),
        "phi.1": ("0", "1", "0"),
        "phi.2": ("-1", "0", "0"),
        "phi.3": ("0", "0", "0"),
        "gradient": ("0", "0", f"2*sqrt(z)*{ez}"),
        "hessian_operator.1": ("0", w, "0"),
        "hessian_operator.2": (w, "0", "0"),
        "hessian_operator.3": ("0", "0", f"2*{e2z}*(1 + 2*z)"),
    }
    goldens = [_g(chart, k, v, pub) for k, v in table.items()]
    goldens += [_g(chart, f"metric_frame.{i}.{j}", ("1" if i == j else "0",), pub)
                for i in (1, 2, 3) for j in (1, 2, 3) if i <= j]
    goldens.append(_g(chart, "scalar_curvature", (f"-2*{e2z}",), "derived"))
    expect = {
        "contact.cokahler": VIOLATED,
        "contact.killing_xi": VIOLATED,
        "contact.nullity_fit": VIOLATED,
        "contact.eta_einstein": VIOLATED,
    }
    return ModelSpec("paper-example", chart, metric, s, frame, SolitonData(chart.parse("z"), 1, 0, 0),
                     goldens=tuple(goldens), expect=expect,
                     description="strictly almost co-Kähler 3-manifold with a quasi-Einstein potential w = z")


def _g_sigma(sigma: float) -> ModelSpec:
    chart = _chart(["x", "y", "z"])
    s_ = _num(sigma)
    up, down = f"exp(2*{s_}*z)", f"exp(-2*{s_}*z)"
    metric = MetricField(chart, [[up, "0", "0"], ["0", down, "0"], ["0", "0", "1"]])
    # phi sends e1 = exp(-s z) d_x to e2 = exp(s z) d_y and e2 to -e1
    phi = TensorField(chart, 1, 1, [["0", f"-{down}", "0"], [up, "0", "0"], ["0", "0", "0"]])
    frame = (vector_field(chart, [f"exp(-{s_}*z)", "0", "0"]),
             vector_field(chart, ["0", f"exp({s_}*z)", "0"]),
             vector_field(chart, ["0", "0", "1"]))
    s = ContactStructure(metric, phi, frame[2], one_form(chart, ["0", "0", "1"]))
    sq = _num(sigma * sigma)
    goldens = (
        _g(chart, "h.1", ("0", s_, "0"), "derived"),
        _g(chart, "h.2", (s_, "0", "0"), "derived"),
        _g(chart, "h.3", ("0", "0", "0"), "derived"),
        _g(chart, "ricci_operator.1", ("0", "0", "0"), "derived"),
        _g(chart, "ricci_operator.2", ("0", "0", "0"), "derived"),
        _g(chart, "ricci_operator.3", ("0", "0", f"-2*{sq}"), "derived"),
        _g(chart, "scalar_curvature", (f"-2*{sq}",), "derived"),
        _g(chart, "curvature.1.3.3", (f"-{sq}", "0", "0"), "derived"),
        _g(chart, "curvature.2.3.3", ("0", f"-{sq}", "0"), "derived"),
    )
    expect = {}
    if sigma != 0:
        expect = {"contact.cokahler": VIOLATED, "contact.killing_xi": VIOLATED}
    return ModelSpec("g-sigma", chart, metric, s, frame, goldens=goldens, expect=expect,
                     params={"sigma": sigma},
                     description="solvable 3D Lie group with (kappa, mu) = (-sigma^2, 0)")


def _round_sphere2() -> ModelSpec:
    chart = _chart(["theta", "phi"], "theta > 0 and theta < 3.141592653589793",
                   ranges=[(0.3, 2.8), (-3.0, 3.0)])
    metric = MetricField(chart, [["1", "0"], ["0", "sin(theta)^2"]])
    frame = (vector_field(chart, ["1", "0"]), vector_field(chart, ["0", "1/sin(theta)"]))
    goldens = (
        _g(chart, "scalar_curvature", ("2",), "analytic"),
        _g(chart, "curvature.1.2.1", ("0", "-1"), "analytic"),
        _g(chart, "curvature.1.2.2", ("1", "0"), "analytic"),
        _g(chart, "ricci_operator.1", ("1", "0"), "analytic"),
        _g(chart, "ricci_operator.2", ("0", "1"), "analytic"),
    )
    return ModelSpec("round-sphere2", chart, metric, frame=frame, goldens=goldens,
                     description="unit round 2-sphere")


def _lorentz_chart(n: int, time_range=(-1.0, 1.0), domain: str | None = None) -> Chart:
    if n < 2:
        raise ModelError("spacetime dimension must be at least 2")
    space = ["x", "y", "z"] if n == 4 else [f"x{i}" for i in range(1, n)]
    return _chart(["t"] + space, domain, (-1,) + (1,) * (n - 1),
                  [time_range] + [(-1.0, 1.0)] * (n - 1))


def _minkowski(n: int) -> ModelSpec:
    chart = _lorentz_chart(n)
    comps = np.full((n, n), "0", dtype=object)
    comps[0, 0] = "-1"
    for i in range(1, n):
        comps[i, i] = "1"
    u = vector_field(chart, ["1"] + ["0"] * (n - 1))
    goldens = (Golden("scalar_curvature", (exprlang.Num(0.0),), "analytic"),)
    return ModelSpec("minkowski", chart, MetricField(chart, comps), velocity=u, goldens=goldens,
                     params={"n": n}, description="flat Minkowski spacetime, u = d_t")


FLRW_DEFAULT_A = "t^0.6666666666666666"


def _flrw_spec(name: str, a: str, n: int, time_range, domain, goldens_src, params) -> ModelSpec:
    chart = _lorentz_chart(n, time_range, domain)
    a_expr = exprlang.to_string(chart.parse(a))
    comps = np.full((n, n), "0", dtype=object)
    comps[0, 0] = "-1"
    for i in range(1, n):
        comps[i, i] = f"({a_expr})^2"
    u = vector_field(chart, ["1"] + ["0"] * (n - 1))
    goldens = tuple(_g(chart, k, v, "analytic") for k, v in goldens_src)
    return ModelSpec(name, chart, MetricField(chart, comps), velocity=u, goldens=goldens,
                     params=params, description=f"spatially flat FLRW with a(t) = {a_expr}, u = d_t")


def _flrw(a: str, n: int) -> ModelSpec:
    goldens = []
    if a == FLRW_DEFAULT_A and n == 4:
        goldens = [("scalar_curvature", ("4/(3*t^2)",))]
    return _flrw_spec("flrw", a, n, (0.5, 2.0), "t > 0", goldens, {"a": a, "n": n})


def _de_sitter(H: float, n: int) -> ModelSpec:
    h = _num(H)
    goldens = [("scalar_curvature", (f"{n * (n - 1)}*{h}^2",))]
    spec = _flrw_spec("de-sitter", f"exp({h}*t)", n, (-1.0, 1.0), None, goldens,
                      {"H": H, "n": n})
    # Einstein with Ric = (n-1) H^2 g, so a constant potential is a trivial soliton
    sd = SolitonData(exprlang.Num(0.0), 1.0, 0.0, (n - 1) * H * H)
    return dataclasses.replace(spec, soliton=sd)


def _hyperbolic3() -> ModelSpec:
    chart = _chart(["x", "y", "z"])
    metric = MetricField(chart, [["exp(2*z)", "0", "0"], ["0", "exp(2*z)", "0"], ["0", "0", "1"]])
    phi = TensorField(chart, 1, 1, [["0", "-1", "0"], ["1", "0", "0"], ["0", "0", "0"]])
    s = ContactStructure(metric, phi, vector_field(chart, ["0", "0", "1"]),
                         one_form(chart, ["0", "0", "1"]))
    goldens = (_g(chart, "scalar_curvature", ("-6",), "analytic"),)
    expect = {
        "contact.almost_cokahler": VIOLATED,
        "contact.cokahler": VIOLATED,
        "contact.killing_xi": VIOLATED,
    }
    return ModelSpec("hyperbolic3", chart, metric, s, goldens=goldens, expect=expect,
                     description="hyperbolic 3-space (Einstein, Ric = -2g) with an almost "
                                 "contact metric structure that is not almost co-Kähler")


_ENTRIES = (
    CatalogEntry("de-sitter", "de Sitter spacetime as FLRW with a = exp(H t)",
                 (Param("H", 1.0, "Hubble rate"), Param("n", 4, "spacetime dimension", int)),
                 _de_sitter),
    CatalogEntry("euclidean", "flat Euclidean space",
                 (Param("n", 3, "dimension", int),), _euclidean),
    CatalogEntry("flat-cokahler3", "flat R^3 with a parallel co-Kähler structure", (),
                 _flat_cokahler3),
    CatalogEntry("flrw", "spatially flat FLRW spacetime with comoving velocity",
                 (Param("a", FLRW_DEFAULT_A, "scale factor expression in t", str),
                  Param("n", 4, "spacetime dimension", int)), _flrw),
    CatalogEntry("g-sigma", "3D solvable Lie group with a (kappa, mu) structure",
                 (Param("sigma", 1.0, "structure constant"),), _g_sigma),
    CatalogEntry("hyperbolic3", "hyperbolic 3-space, Einstein with Ric = -2g", (), _hyperbolic3),
    CatalogEntry("minkowski", "flat Minkowski spacetime",
                 (Param("n", 4, "spacetime dimension", int),), _minkowski),
    CatalogEntry("paper-example", "almost co-Kähler 3-manifold z > 0 with quasi-Einstein potential",
                 (), _paper_example),
    CatalogEntry("round-sphere2", "unit round 2-sphere", (), _round_sphere2),
)
ENTRIES = {e.name: e for e in _ENTRIES}


def build_model(name: str, params: Mapping[str, Any] | None = None) -> ModelSpec:
    key = name.replace("_", "-")
    if key not in ENTRIES:
        raise ModelError(f"unknown model {name!r}; available: {', '.join(ENTRIES)}")
    return ENTRIES[key].build(params)


def catalog() -> list[ModelSpec]:
    """Every built-in model at its default parameters."""
    return [e.build() for e in _ENTRIES]


def list_models() -> str:
    lines = []
    for e in _ENTRIES:
        lines.append(f"{e.name}: {e.description}")
        for p in e.params:
            lines.append(f"    {p.name} (default {p.default}): {p.description}")
    return "\n".join(lines) + "\n"


# config files ---------------------------------------------------------------

def _split_top(text: str) -> list[str]:
    """Split on commas outside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return parts


_INDEXED = re.compile(r"^([A-Za-z_]+)((?:\.\d+)+)$")


def _indices(key: str, prefix: str, count: int, dim: int, where: str) -> tuple[int, ...]:
    m = _INDEXED.match(key)
    if not m or m.group(1) != prefix:
        raise ModelLoadError(f"{where}: unexpected key {key!r}")
    idx = tuple(int(i) - 1 for i in m.group(2)[1:].split("."))
    if len(idx) != count:
        raise ModelLoadError(f"{where}: {key!r} needs {count} index(es)")
    if any(not 0 <= i < dim for i in idx):
        raise ModelLoadError(f"{where}: index in {key!r} outside 1..{dim} (dimension mismatch)")
    return idx


class _Loader:
    def __init__(self, source: str):
        self.source = source

    def where(self, section: str, key: str | None = None) -> str:
        return f"{self.source} [{section}]" + (f" {key}" if key else "")

    def expr(self, chart: Chart, text: str, section: str, key: str) -> Expr:
        try:
            return chart.parse(text)
        except ExprError as exc:
            raise ModelLoadError(f"{self.where(section, key)}: {exc}") from None

    def load(self, cp: configparser.ConfigParser) -> ModelSpec:
        known = {"chart", "metric", "frame", "structure", "soliton", "fluid", "golden", "expect"}
        for sec in cp.sections():
            if sec not in known:
                raise ModelLoadError(f"{self.source}: unknown section [{sec}]")
        for sec in ("chart", "metric"):
            if not cp.has_section(sec):
                raise ModelLoadError(f"{self.source}: missing section [{sec}]")
        chart, name, desc = self.chart(cp["chart"])
        metric = self.metric(chart, cp["metric"])
        frame = self.frame(chart, cp["frame"]) if cp.has_section("frame") else None
        structure = self.structure(chart, metric, cp["structure"]) if cp.has_section("structure") else None
        soliton = self.soliton(chart, cp["soliton"]) if cp.has_section("soliton") else None
        velocity, k_grav = self.fluid(chart, cp["fluid"]) if cp.has_section("fluid") else (None, 1.0)
        goldens = self.goldens(chart, cp["golden"]) if cp.has_section("golden") else ()
        expect = dict(cp["expect"]) if cp.has_section("expect") else {}
        try:
            return ModelSpec(name, chart, metric, structure, frame, soliton, velocity, goldens,
                             expect, description=desc, k_grav=k_grav)
        except (GeometryError, ExprError) as exc:
            raise ModelLoadError(f"{self.source}: {exc}") from None

    def chart(self, sec) -> tuple[Chart, str, str]:
        where = self.where("chart")
        if "coords" not in sec:
            raise ModelLoadError(f"{where}: missing 'coords'")
        coords = [c.strip() for c in sec["coords"].split(",") if c.strip()]
        domain = None
        if sec.get("domain", "").strip():
            try:
                domain = exprlang.parse_predicate(sec["domain"])
            except ExprError as exc:
                raise ModelLoadError(f"{where} domain: {exc}") from None
        signature = None
        if "signature" in sec:
            try:
                signature = tuple(int(v) for v in sec["signature"].split(","))
            except ValueError:
                raise ModelLoadError(f"{where} signature: expected integers") from None
        ranges = [(-1.0, 1.0)] * len(coords)
        for key, val in sec.items():
            if key.startswith("range."):
                c = key[len("range."):]
                if c not in coords:
                    raise ModelLoadError(f"{where}: range for undeclared coordinate {c!r}")
                try:
                    lo, hi = (exprlang.parse_number(v) for v in val.split(","))
                except (ValueError, ExprError):
                    raise ModelLoadError(f"{where} {key}: expected 'low, high'") from None
                ranges[coords.index(c)] = (lo, hi)
            elif key not in ("name", "coords", "domain", "signature", "description"):
                raise ModelLoadError(f"{where}: unexpected key {key!r}")
        try:
            chart = Chart(tuple(coords), domain, signature, tuple(ranges))
        except (GeometryError, ExprError) as exc:
            raise ModelLoadError(f"{where}: {exc}") from None
        return chart, sec.get("name", "custom").strip(), sec.get("description", "").strip()

    def metric(self, chart: Chart, sec) -> MetricField:
        entries = {}
        for key, val in sec.items():
            i, j = _indices(key, "g", 2, chart.dim, self.where("metric"))
            entries[i, j] = self.expr(chart, val, "metric", key)
        try:
            return MetricField.from_entries(chart, entries)
        except GeometryError as exc:
            raise ModelLoadError(f"{self.where('metric')}: {exc}") from None

    def _vector(self, chart: Chart, text: str, section: str, key: str) -> TensorField:
        parts = _split_top(text)
        if len(parts) != chart.dim:
            raise ModelLoadError(f"{self.where(section, key)}: {len(parts)} components given, "
                                 f"chart has dimension {chart.dim}")
        return vector_field(chart, [self.expr(chart, p, section, key) for p in parts])

    def frame(self, chart: Chart, sec) -> tuple[TensorField, ...]:
        vecs = {}
        for key, val in sec.items():
            (i,) = _indices(key, "e", 1, chart.dim, self.where("frame"))
            vecs[i] = self._vector(chart, val, "frame", key)
        if len(vecs) != chart.dim:
            raise ModelLoadError(f"{self.where('frame')}: need e.1 .. e.{chart.dim}")
        return tuple(vecs[i] for i in range(chart.dim))

    def structure(self, chart: Chart, metric: MetricField, sec) -> ContactStructure:
        n = chart.dim
        zero = exprlang.Num(0.0)
        phi = np.full((n, n), zero, dtype=object)
        xi = np.full(n, zero, dtype=object)
        eta = np.full(n, zero, dtype=object)
        where = self.where("structure")
        for key, val in sec.items():
            e = self.expr(chart, val, "structure", key)
            if key.startswith("phi."):
                phi[_indices(key, "phi", 2, n, where)] = e
            elif key.startswith("xi."):
                xi[_indices(key, "xi", 1, n, where)] = e
            elif key.startswith("eta."):
                eta[_indices(key, "eta", 1, n, where)] = e
            else:
                raise ModelLoadError(f"{where}: unexpected key {key!r}")
        try:
            return ContactStructure(metric, TensorField(chart, 1, 1, phi),
                                    TensorField(chart, 1, 0, xi), TensorField(chart, 0, 1, eta))
        except GeometryError as exc:
            raise ModelLoadError(f"{where}: {exc}") from None

    def soliton(self, chart: Chart, sec) -> SolitonData:
        where = self.where("soliton")
        if "omega" not in sec:
            raise ModelLoadError(f"{where}: missing 'omega'")
        omega = self.expr(chart, sec["omega"], "soliton", "omega")
        try:
            nums = {}
            for key in ("m", "rho", "lambda1"):
                raw = sec.get(key, "inf" if key == "m" else "0").strip()
                nums[key] = math.inf if raw == "inf" else exprlang.parse_number(raw)
            for key in sec:
                if key not in ("omega", "m", "rho", "lambda1"):
                    raise ModelLoadError(f"{where}: unexpected key {key!r}")
            return SolitonData(omega, nums["m"], nums["rho"], nums["lambda1"])
        except (ExprError, GeometryError) as exc:
            raise ModelLoadError(f"{where}: {exc}") from None

    def fluid(self, chart: Chart, sec) -> tuple[TensorField, float]:
        n = chart.dim
        comps = np.full(n, exprlang.Num(0.0), dtype=object)
        k_grav = 1.0
        for key, val in sec.items():
            if key == "k_grav":
                try:
                    k_grav = exprlang.parse_number(val)
                except ExprError as exc:
                    raise ModelLoadError(f"{self.where('fluid', key)}: {exc}") from None
            else:
                comps[_indices(key, "u", 1, n, self.where("fluid"))] = self.expr(chart, val, "fluid", key)
        return TensorField(chart, 1, 0, comps), k_grav

    def goldens(self, chart: Chart, sec) -> tuple[Golden, ...]:
        out = []
        for key, val in sec.items():
            text, _, source = val.partition("|")
            comps = tuple(self.expr(chart, p, "golden", key) for p in _split_top(text))
            out.append(Golden(key, comps, source.strip() or "derived"))
        return tuple(out)


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    return cp


def loads_model(text: str, source: str = "<string>") -> ModelSpec:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ModelLoadError(f"{source}: {exc}") from None
    try:
        return _Loader(source).load(cp)
    except ModelError as exc:
        if isinstance(exc, ModelLoadError):
            raise
        raise ModelLoadError(f"{source}: {exc}") from None


def load_model(path: str | Path) -> ModelSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelLoadError(f"cannot read {path}: {exc.strerror}") from None
    return loads_model(text, str(path))


def dump_model(spec: ModelSpec) -> str:
    """Config text that loads back to an equivalent model."""
    s = exprlang.to_string
    chart = spec.chart
    cp = _parser()
    sec: dict[str, str] = {"name": spec.name, "coords": ", ".join(chart.coords)}
    if spec.description:
        sec["description"] = spec.description
    if chart.domain is not None:
        sec["domain"] = exprlang.predicate_to_string(chart.domain)
    sec["signature"] = ", ".join(str(v) for v in chart.signature)
    for c, (lo, hi) in zip(chart.coords, chart.ranges):
        sec[f"range.{c}"] = f"{_num(lo)}, {_num(hi)}"
    cp["chart"] = sec
    n = chart.dim
    comps = spec.metric.components
    cp["metric"] = {f"g.{i + 1}.{j + 1}": s(comps[i, j]) for i in range(n) for j in range(i, n)
                    if not exprlang.is_zero(comps[i, j])}
    if spec.frame is not None:
        cp["frame"] = {f"e.{i + 1}": ", ".join(s(c) for c in f.components)
                       for i, f in enumerate(spec.frame)}
    if spec.structure is not None:
        st = spec.structure
        entries = {}
        for (i, j), c in np.ndenumerate(st.phi.components):
            if not exprlang.is_zero(c):
                entries[f"phi.{i + 1}.{j + 1}"] = s(c)
        for name, tf in (("xi", st.xi), ("eta", st.eta)):
            for i, c in enumerate(tf.components):
                if not exprlang.is_zero(c):
                    entries[f"{name}.{i + 1}"] = s(c)
        cp["structure"] = entries
    if spec.soliton is not None:
        sd = spec.soliton
        cp["soliton"] = {"omega": s(sd.omega), "m": "inf" if math.isinf(sd.m) else _num(sd.m),
                         "rho": _num(sd.rho), "lambda1": _num(sd.lambda1)}
    if spec.velocity is not None:
        entries = {f"u.{i + 1}": s(c) for i, c in enumerate(spec.velocity.components)
                   if not exprlang.is_zero(c)}
        entries["k_grav"] = _num(spec.k_grav)
        cp["fluid"] = entries
    if spec.goldens:
        cp["golden"] = {g.quantity: f"{g.text()} | {g.source}" for g in spec.goldens}
    if spec.expect:
        cp["expect"] = dict(spec.expect)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


__all__ = [
    "ModelSpec",
    "Golden",
    "ModelError",
    "ModelLoadError",
    "SamplingError",
    "catalog",
    "build_model",
    "list_models",
    "load_model",
    "loads_model",
    "dump_model",
    "sample_points",
    "golden_checks",
    "quantity",
    "ENTRIES",
]

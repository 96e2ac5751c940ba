"""Truncated multivariate Taylor jets.

A :class:`Jet` stores the Taylor coefficients of a function of ``nvars``
variables around a point, up to total degree ``order``.  Coefficients are
kept densely in a graded multi-index ordering, so truncating to a lower order
is a plain slice.  The coefficient array may carry leading axes, which makes a
single ``Jet`` an array of jets (a tensor whose components are jets); all
arithmetic broadcasts over those axes like numpy does.

Coefficients are *Taylor* coefficients: the partial derivative divided by the
multi-index factorial.  :meth:`Jet.partial` returns the raw derivative.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np


class JetError(Exception):
    pass


class JetShapeError(JetError, ValueError):
    pass


class JetDomainError(JetError, ValueError):
    def __init__(self, func: str, value):
        self.func = func
        self.value = value
        super().__init__(f"{func}: argument {value!r} outside the function's domain")


class JetOrderError(JetError, ValueError):
    pass


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class _Table:
    """Multi-index bookkeeping shared by every jet with the same (nvars, order)."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.indices = tuple(
            mi for deg in range(order + 1) for mi in _compositions(deg, nvars)
        )
        self.size = len(self.indices)
        self.lookup = {mi: k for k, mi in enumerate(self.indices)}
        self.factorials = np.array(
            [math.prod(math.factorial(a) for a in mi) for mi in self.indices], dtype=float
        )
        self.degrees = np.array([sum(mi) for mi in self.indices])

        mul = np.zeros((self.size, self.size, self.size))
        for p, a in enumerate(self.indices):
            for q, b in enumerate(self.indices):
                c = tuple(x + y for x, y in zip(a, b))
                r = self.lookup.get(c)
                if r is not None:
                    mul[p, q, r] = 1.0
        self.mul = mul
        self.mul_flat = mul.reshape(self.size * self.size, self.size)

    @property
    def lower(self) -> "_Table":
        return table(self.nvars, self.order - 1)

    @lru_cache(maxsize=None)
    def derivative_map(self, var: int) -> tuple[np.ndarray, np.ndarray]:
        """Source positions and factors for the partial in ``var`` (order drops by one)."""
        low = self.lower
        src = np.empty(low.size, dtype=int)
        fac = np.empty(low.size)
        for k, mi in enumerate(low.indices):
            up = list(mi)
            up[var] += 1
            src[k] = self.lookup[tuple(up)]
            fac[k] = up[var]
        return src, fac


@lru_cache(maxsize=None)
def table(nvars: int, order: int) -> _Table:
    if nvars < 1:
        raise JetShapeError(f"nvars must be >= 1, got {nvars}")
    if order < 0:
        raise JetOrderError(f"order must be >= 0, got {order}")
    return _Table(nvars, order)


def coefficient_count(nvars: int, order: int) -> int:
    return math.comb(nvars + order, order)


def multi_indices(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    return table(nvars, order).indices


class Jet:
    """Array of truncated Taylor jets.

    ``coeffs`` has shape ``shape + (ncoef,)``.  Jets are treated as immutable;
    every operation returns a new object.
    """

    __slots__ = ("coeffs", "nvars", "order")
    __array_priority__ = 100  # so ndarray * Jet defers to Jet.__rmul__

    def __init__(self, coeffs, nvars: int, order: int):
        coeffs = np.asarray(coeffs, dtype=float)
        t = table(nvars, order)
        if coeffs.ndim == 0 or coeffs.shape[-1] != t.size:
            raise JetShapeError(
                f"expected trailing axis of length {t.size} for nvars={nvars}, "
                f"order={order}; got shape {coeffs.shape}"
            )
        self.coeffs = coeffs
        self.nvars = nvars
        self.order = order

    # construction ---------------------------------------------------------
    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        t = table(nvars, order)
        c = np.zeros(value.shape + (t.size,))
        c[..., 0] = value
        return cls(c, nvars, order)

    @classmethod
    def variable(cls, index: int, value: float, nvars: int, order: int) -> "Jet":
        if not 0 <= index < nvars:
            raise JetShapeError(f"variable index {index} out of range for nvars={nvars}")
        jet = cls.constant(value, nvars, order)
        if order >= 1:
            # degree-1 multi-indices follow the constant, in variable order
            jet.coeffs[1 + index] = 1.0
        return jet

    @classmethod
    def stack(cls, jets: Sequence["Jet"], axis: int = 0) -> "Jet":
        jets = _common(*jets)
        if axis < 0:
            axis -= 1
        return cls(np.stack([j.coeffs for j in jets], axis=axis), jets[0].nvars, jets[0].order)

    # basic properties -----------------------------------------------------
    @property
    def table(self) -> _Table:
        return table(self.nvars, self.order)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def __len__(self) -> int:
        return self.shape[0]

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key) or len(key) > len(self.shape):
            raise IndexError("jet indexing addresses tensor axes only")
        return Jet(self.coeffs[key], self.nvars, self.order)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order}, value={self.value!r})"

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        n = table(self.nvars, order).size
        return Jet(self.coeffs[..., :n], self.nvars, order)

    def transpose(self, *axes: int) -> "Jet":
        return Jet(np.transpose(self.coeffs, tuple(axes) + (len(axes),)), self.nvars, self.order)

    def swapaxes(self, a: int, b: int) -> "Jet":
        nd = len(self.shape)
        return Jet(np.swapaxes(self.coeffs, a % nd, b % nd), self.nvars, self.order)

    def reshape(self, *shape: int) -> "Jet":
        return Jet(self.coeffs.reshape(tuple(shape) + (self.coeffs.shape[-1],)), self.nvars, self.order)

    def sum(self, axis=None) -> "Jet":
        nd = len(self.shape)
        if axis is None:
            axis = tuple(range(nd))
        elif isinstance(axis, int):
            axis = (axis % nd,)
        else:
            axis = tuple(a % nd for a in axis)
        return Jet(self.coeffs.sum(axis=axis), self.nvars, self.order)

    def trace(self, axis1: int = 0, axis2: int = 1) -> "Jet":
        nd = len(self.shape)
        c = np.trace(self.coeffs, axis1=axis1 % nd, axis2=axis2 % nd)
        return Jet(c, self.nvars, self.order)

    # derivatives ----------------------------------------------------------
    def partial(self, multi_index: Iterable[int]) -> np.ndarray | float:
        """Raw partial derivative at the expansion point."""
        mi = tuple(int(a) for a in multi_index)
        if len(mi) != self.nvars:
            raise JetShapeError(f"multi-index {mi} has wrong length for nvars={self.nvars}")
        if any(a < 0 for a in mi):
            raise JetShapeError(f"negative entry in multi-index {mi}")
        if sum(mi) > self.order:
            raise JetOrderError(f"derivative of degree {sum(mi)} exceeds jet order {self.order}")
        t = self.table
        k = t.lookup[mi]
        out = self.coeffs[..., k] * t.factorials[k]
        return float(out) if np.ndim(out) == 0 else out

    def diff(self, var: int) -> "Jet":
        """Partial derivative in ``var`` as a jet of one lower order."""
        if self.order == 0:
            raise JetOrderError("cannot differentiate an order-0 jet")
        src, fac = self.table.derivative_map(var)
        return Jet(self.coeffs[..., src] * fac, self.nvars, self.order - 1)

    def grad(self) -> "Jet":
        """All first partials; the derivative index is appended as the last tensor axis."""
        return Jet.stack([self.diff(i) for i in range(self.nvars)], axis=-1)

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            return other
        if isinstance(other, (int, float, np.floating, np.integer, np.ndarray)):
            return Jet.constant(other, self.nvars, self.order)
        return None

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs, self.nvars, self.order)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b = _common(self, o)
        return Jet(a.coeffs + b.coeffs, a.nvars, a.order)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b = _common(self, o)
        return Jet(a.coeffs - b.coeffs, a.nvars, a.order)

    def __rsub__(self, other) -> "Jet":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other) -> "Jet":
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.coeffs * other, self.nvars, self.order)
        if isinstance(other, np.ndarray):
            return Jet(self.coeffs * other[..., None], self.nvars, self.order)
        if not isinstance(other, Jet):
            return NotImplemented
        a, b = _common(self, other)
        return Jet(_mul(a.coeffs, b.coeffs, a.table), a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, (int, float, np.floating, np.integer)):
            if other == 0:
                raise JetDomainError("div", float(other))
            return Jet(self.coeffs / other, self.nvars, self.order)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b = _common(self, o)
        return _divide(a, b)

    def __rtruediv__(self, other) -> "Jet":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, exponent) -> "Jet":
        return power(self, exponent)


def _common(*jets: Jet) -> list[Jet]:
    nvars = {j.nvars for j in jets}
    if len(nvars) != 1:
        raise JetShapeError(f"jets over different numbers of variables: {sorted(nvars)}")
    order = min(j.order for j in jets)
    return [j.truncate(order) for j in jets]


def _mul(a: np.ndarray, b: np.ndarray, t: _Table) -> np.ndarray:
    outer = a[..., :, None] * b[..., None, :]
    return outer.reshape(outer.shape[:-2] + (t.size * t.size,)) @ t.mul_flat


def _divide(a: Jet, b: Jet) -> Jet:
    b0 = b.coeffs[..., 0]
    if np.any(b0 == 0):
        raise JetDomainError("div", b.value)
    # q = a/b0 - (b - b0) q / b0, iterated; (b - b0) is nilpotent so order+1 passes are exact
    tail = b.coeffs.copy()
    tail[..., 0] = 0.0
    t = a.table
    a_scaled = a.coeffs / b0[..., None]
    q = a_scaled
    for _ in range(a.order):
        q = a_scaled - _mul(tail, q, t) / b0[..., None]
    return Jet(q, a.nvars, a.order)


def jet_variable(index: int, value: float, nvars: int, order: int) -> Jet:
    return Jet.variable(index, value, nvars, order)


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    """Strict binary arithmetic: both operands must agree in nvars and order."""
    if a.nvars != b.nvars or a.order != b.order:
        raise JetShapeError(
            f"jet shape mismatch: (nvars={a.nvars}, order={a.order}) vs "
            f"(nvars={b.nvars}, order={b.order})"
        )
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown jet operation {op!r}")


def extract_partial(a: Jet, multi_index: Iterable[int]):
    return a.partial(multi_index)


# univariate functions -----------------------------------------------------

def _compose(a: Jet, series: list[np.ndarray]) -> Jet:
    """Evaluate sum_k series[k] * (a - a0)^k by Horner's rule."""
    t = a.table
    d = a.coeffs.copy()
    d[..., 0] = 0.0
    out = np.zeros_like(a.coeffs)
    out[..., 0] = series[-1]
    for ck in reversed(series[:-1]):
        out = _mul(out, d, t)
        out[..., 0] += ck
    return Jet(out, a.nvars, a.order)


def _require(cond, func: str, a: Jet) -> None:
    if not np.all(cond):
        raise JetDomainError(func, a.value)


def exp(a: Jet) -> Jet:
    x0 = a.coeffs[..., 0]
    e = np.exp(x0)
    return _compose(a, [e / math.factorial(k) for k in range(a.order + 1)])


def log(a: Jet) -> Jet:
    x0 = a.coeffs[..., 0]
    _require(x0 > 0, "log", a)
    series = [np.log(x0)]
    for k in range(1, a.order + 1):
        series.append((-1.0) ** (k + 1) / (k * x0**k))
    return _compose(a, series)


def _real_power_series(x0: np.ndarray, r: float, order: int) -> list[np.ndarray]:
    series = []
    coef = 1.0
    for k in range(order + 1):
        series.append(coef * x0 ** (r - k))
        coef *= (r - k) / (k + 1)
    return series


def sqrt(a: Jet) -> Jet:
    x0 = a.coeffs[..., 0]
    _require(x0 > 0, "sqrt", a)
    return _compose(a, _real_power_series(x0, 0.5, a.order))


def power(a: Jet, r) -> Jet:
    """a**r for a real exponent; integer exponents allow non-positive bases."""
    r = float(r)
    if r.is_integer():
        n = int(r)
        if n >= 0:
            out = Jet.constant(np.ones(a.shape), a.nvars, a.order)
            base = a
            while n:
                if n & 1:
                    out = out * base
                n >>= 1
                if n:
                    base = base * base
            return out
        x0 = a.coeffs[..., 0]
        _require(x0 != 0, "pow", a)
        return _compose(a, _real_power_series(x0, r, a.order))
    x0 = a.coeffs[..., 0]
    _require(x0 > 0, "pow", a)
    return _compose(a, _real_power_series(x0, r, a.order))


def sin(a: Jet) -> Jet:
    x0 = a.coeffs[..., 0]
    cyc = [np.sin(x0), np.cos(x0), -np.sin(x0), -np.cos(x0)]
    return _compose(a, [cyc[k % 4] / math.factorial(k) for k in range(a.order + 1)])


def cos(a: Jet) -> Jet:
    x0 = a.coeffs[..., 0]
    cyc = [np.cos(x0), -np.sin(x0), -np.cos(x0), np.sin(x0)]
    return _compose(a, [cyc[k % 4] / math.factorial(k) for k in range(a.order + 1)])


def tan(a: Jet) -> Jet:
    c = cos(a)
    _require(np.abs(c.coeffs[..., 0]) > 1e-300, "tan", a)
    return sin(a) / c


FUNCTIONS = {
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "sin": sin,
    "cos": cos,
    "tan": tan,
}


def jet_func(a: Jet, f: str, exponent: float | None = None) -> Jet:
    if f == "pow":
        if exponent is None:
            raise ValueError("pow needs an exponent")
        return power(a, exponent)
    try:
        fn = FUNCTIONS[f]
    except KeyError:
        raise ValueError(f"unknown jet function {f!r}") from None
    return fn(a)


# tensor helpers -----------------------------------------------------------

def einsum(subscripts: str, a, b) -> Jet:
    """Two-operand einsum where components are jets (or plain arrays).

    Subscripts use lowercase letters only and refer to tensor axes.  Jet
    operands are truncated to their common order.
    """
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b = _common(a, b)
        t = a.table
        c = np.einsum(f"{sa}Y,{sb}Z->{out}YZ", a.coeffs, b.coeffs)
        c = c.reshape(c.shape[:-2] + (t.size * t.size,)) @ t.mul_flat
        return Jet(c, a.nvars, a.order)
    if isinstance(a, Jet):
        return Jet(np.einsum(f"{sa}Y,{sb}->{out}Y", a.coeffs, np.asarray(b, float)), a.nvars, a.order)
    if isinstance(b, Jet):
        return Jet(np.einsum(f"{sa},{sb}Y->{out}Y", np.asarray(a, float), b.coeffs), b.nvars, b.order)
    raise TypeError("einsum needs at least one Jet operand")


def matinv(m: Jet) -> Jet:
    """Inverse of a jet-valued square matrix.

    The value matrix is inverted numerically; higher coefficients come from the
    terminating Neumann series of G = G0 (I + G0^-1 N) with N nilpotent.
    """
    if len(m.shape) != 2 or m.shape[0] != m.shape[1]:
        raise JetShapeError(f"matinv needs a square matrix, got shape {m.shape}")
    g0 = m.coeffs[..., 0]
    ginv0 = np.linalg.inv(g0)
    n = m.coeffs.copy()
    n[..., 0] = 0.0
    nil = Jet(n, m.nvars, m.order)
    base = Jet.constant(ginv0, m.nvars, m.order)
    step = -einsum("ij,jk->ik", ginv0, nil)  # -G0^-1 N
    term = base
    out = base
    for _ in range(m.order):
        term = einsum("ij,jk->ik", step, term)
        out = out + term
    return out


def variables(point: Sequence[float], order: int) -> list[Jet]:
    """Seed jets for every coordinate at ``point``."""
    n = len(point)
    return [Jet.variable(i, float(point[i]), n, order) for i in range(n)]


def taylor_polynomial(a: Jet, offset: Sequence[float]):
    """Evaluate the stored Taylor polynomial at ``point + offset`` (testing aid)."""
    t = a.table
    off = np.asarray(offset, dtype=float)
    mono = np.array([np.prod(off ** np.array(mi)) for mi in t.indices])
    return a.coeffs @ mono


__all__ = [
    "Jet",
    "JetError",
    "JetShapeError",
    "JetDomainError",
    "JetOrderError",
    "coefficient_count",
    "multi_indices",
    "jet_variable",
    "jet_arith",
    "jet_func",
    "extract_partial",
    "exp",
    "log",
    "sqrt",
    "sin",
    "cos",
    "tan",
    "power",
    "einsum",
    "matinv",
    "variables",
    "taylor_polynomial",
]

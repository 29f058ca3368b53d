"""A small closed-form function algebra with exact first and second derivatives.

Used for the frame functions alpha(t), l_a(t), v_a(t) and for the scalar
coefficients F_a0(omega_a), F_00(t).  Every object is immutable and
evaluates on scalars or numpy arrays.
"""
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import ConstructionError


class TimeFunction:
    form: ClassVar[str] = ""

    def __call__(self, t):
        return self.derivative(t, 0)

    def d1(self, t):
        return self.derivative(t, 1)

    def d2(self, t):
        return self.derivative(t, 2)

    def derivative(self, t, order):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def __add__(self, other):
        return Sum((self, as_timefunction(other)))

    __radd__ = __add__

    def __mul__(self, other):
        return Product(self, as_timefunction(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Product(Constant(-1.0), self)

    def __sub__(self, other):
        return self + (-as_timefunction(other))


def _like(t, value):
    return np.full_like(np.asarray(t, dtype=float), value) if np.ndim(t) else float(value)


@dataclass(frozen=True)
class Constant(TimeFunction):
    c: float = 0.0
    form: ClassVar[str] = "constant"

    def derivative(self, t, order):
        return _like(t, self.c if order == 0 else 0.0)

    def to_dict(self):
        return {"form": self.form, "c": self.c}


@dataclass(frozen=True)
class Linear(TimeFunction):
    c0: float = 0.0
    c1: float = 0.0
    form: ClassVar[str] = "linear"

    def derivative(self, t, order):
        if order == 0:
            return self.c0 + self.c1 * np.asarray(t, dtype=float) if np.ndim(t) else self.c0 + self.c1 * t
        return _like(t, self.c1 if order == 1 else 0.0)

    def to_dict(self):
        return {"form": self.form, "c0": self.c0, "c1": self.c1}


@dataclass(frozen=True)
class Polynomial(TimeFunction):
    """sum_j coeffs[j] t^j, degree at most 4."""

    coeffs: tuple = (0.0,)
    form: ClassVar[str] = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not 1 <= len(self.coeffs) <= 5:
            raise ConstructionError("polynomial needs 1..5 coefficients (degree <= 4)")

    def derivative(self, t, order):
        p = np.polynomial.Polynomial(self.coeffs).deriv(order)
        return p(np.asarray(t, dtype=float)) if np.ndim(t) else float(p(t))

    def to_dict(self):
        return {"form": self.form, "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class Sinusoid(TimeFunction):
    """A sin(w t + phase) + B."""

    A: float = 1.0
    w: float = 1.0
    phase: float = 0.0
    B: float = 0.0
    form: ClassVar[str] = "sinusoid"

    def derivative(self, t, order):
        arg = self.w * np.asarray(t, dtype=float) + self.phase
        if order == 0:
            out = self.A * np.sin(arg) + self.B
        elif order == 1:
            out = self.A * self.w * np.cos(arg)
        else:
            out = -self.A * self.w ** 2 * np.sin(arg)
        return out if np.ndim(t) else float(out)

    def to_dict(self):
        return {"form": self.form, "A": self.A, "w": self.w, "phase": self.phase, "B": self.B}


@dataclass(frozen=True)
class Exp(TimeFunction):
    """A exp(r t)."""

    A: float = 1.0
    r: float = 1.0
    form: ClassVar[str] = "exp"

    def derivative(self, t, order):
        out = self.A * self.r ** order * np.exp(self.r * np.asarray(t, dtype=float))
        return out if np.ndim(t) else float(out)

    def to_dict(self):
        return {"form": self.form, "A": self.A, "r": self.r}


@dataclass(frozen=True)
class Power(TimeFunction):
    """c t^n for integer n (negative powers allowed; t = 0 is then singular)."""

    c: float = 1.0
    n: int = 1
    form: ClassVar[str] = "power"

    def derivative(self, t, order):
        n = int(self.n)
        coef = self.c
        for j in range(order):
            coef *= n - j
        tt = np.asarray(t, dtype=float)
        out = coef * tt ** float(n - order) if coef != 0.0 else np.zeros_like(tt)
        return out if np.ndim(t) else float(out)

    def to_dict(self):
        return {"form": self.form, "c": self.c, "n": int(self.n)}


@dataclass(frozen=True)
class Sech2(TimeFunction):
    """A sech^2(t)."""

    A: float = 1.0
    form: ClassVar[str] = "sech2"

    def derivative(self, t, order):
        tt = np.asarray(t, dtype=float)
        s2 = 1.0 / np.cosh(tt) ** 2
        th = np.tanh(tt)
        if order == 0:
            out = s2
        elif order == 1:
            out = -2.0 * s2 * th
        else:
            out = s2 * (4.0 * th ** 2 - 2.0 * s2)
        out = self.A * out
        return out if np.ndim(t) else float(out)

    def to_dict(self):
        return {"form": self.form, "A": self.A}


@dataclass(frozen=True)
class Sum(TimeFunction):
    terms: tuple = ()
    form: ClassVar[str] = "sum"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def derivative(self, t, order):
        total = _like(t, 0.0)
        for term in self.terms:
            total = total + term.derivative(t, order)
        return total

    def to_dict(self):
        return {"form": self.form, "terms": [f.to_dict() for f in self.terms]}


@dataclass(frozen=True)
class Product(TimeFunction):
    first: TimeFunction = Constant(1.0)
    second: TimeFunction = Constant(1.0)
    form: ClassVar[str] = "product"

    def derivative(self, t, order):
        f, g = self.first, self.second
        if order == 0:
            return f(t) * g(t)
        if order == 1:
            return f.d1(t) * g(t) + f(t) * g.d1(t)
        return f.d2(t) * g(t) + 2.0 * f.d1(t) * g.d1(t) + f(t) * g.d2(t)

    def to_dict(self):
        return {"form": self.form, "factors": [self.first.to_dict(), self.second.to_dict()]}


_FORMS = {cls.form: cls for cls in (Constant, Linear, Polynomial, Sinusoid, Exp, Power, Sech2, Sum, Product)}


def as_timefunction(obj):
    if isinstance(obj, TimeFunction):
        return obj
    if isinstance(obj, (int, float, np.floating, np.integer)):
        return Constant(float(obj))
    if isinstance(obj, dict):
        return from_dict(obj)
    raise TypeError(f"cannot interpret {obj!r} as a TimeFunction")


def from_dict(record):
    """Inverse of ``to_dict``; unknown forms or keys raise ConstructionError."""
    if not isinstance(record, dict) or "form" not in record:
        raise ConstructionError(f"time function record needs a 'form' key: {record!r}")
    form = record["form"]
    if form not in _FORMS:
        raise ConstructionError(f"unknown time function form {form!r}")
    params = {k: v for k, v in record.items() if k != "form"}
    allowed = {"sum": {"terms"}, "product": {"factors"}, "polynomial": {"coeffs"}}.get(
        form, set(_FORMS[form].__dataclass_fields__)
    )
    unknown = set(params) - allowed
    if unknown:
        raise ConstructionError(f"unknown keys {sorted(unknown)} in {form!r} record")
    try:
        if form == "sum":
            return Sum(tuple(from_dict(r) for r in params["terms"]))
        if form == "product":
            a, b = params["factors"]
            return Product(from_dict(a), from_dict(b))
        if form == "polynomial":
            return Polynomial(tuple(params["coeffs"]))
        return _FORMS[form](**params)
    except (TypeError, KeyError, ValueError) as exc:
        raise ConstructionError(f"bad {form!r} record {record!r}: {exc}") from exc

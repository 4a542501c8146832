"""Closed-form coefficient fields.

Symbols carry their X-dependent coefficients as small expression objects
rather than sampled arrays, so the same object can be evaluated on a
lattice, on a spectral grid, or at Newton iterates without resampling.
Every field knows whether it is constant; the split-step integrator uses
that to route terms to the exact Fourier flow.
"""

from __future__ import annotations

import numpy as np


class Field:
    """Scalar field X -> value, evaluable on arrays of shape (..., d).

    `fn` maps an (..., d) position array to a (...) value array.  `expr`
    is a printable closed form used in serialized symbols and sidecars.
    """

    __slots__ = ("_fn", "expr")

    def __init__(self, fn, expr: str):
        self._fn = fn
        self.expr = expr

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return self._fn(X)

    @property
    def is_constant(self) -> bool:
        return False

    def __add__(self, other):
        other = as_field(other)
        if isinstance(other, Constant) and other.value == 0:
            return self
        return Field(lambda X, a=self, b=other: a(X) + b(X),
                     f"({self.expr} + {other.expr})")

    __radd__ = __add__

    def __neg__(self):
        return Field(lambda X, a=self: -a(X), f"(-{self.expr})")

    def __sub__(self, other):
        return self + (-as_field(other))

    def __rsub__(self, other):
        return as_field(other) + (-self)

    def __mul__(self, other):
        other = as_field(other)
        if isinstance(other, Constant):
            if other.value == 1:
                return self
            if other.value == 0:
                return Constant(0.0)
        return Field(lambda X, a=self, b=other: a(X) * b(X),
                     f"({self.expr} * {other.expr})")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_field(other)
        if isinstance(other, Constant):
            if other.value == 0:
                raise ZeroDivisionError("field divided by constant zero")
            return self * (1.0 / other.value)
        return Field(lambda X, a=self, b=other: a(X) / b(X),
                     f"({self.expr} / {other.expr})")

    def __rtruediv__(self, other):
        other = as_field(other)
        return Field(lambda X, a=other, b=self: a(X) / b(X),
                     f"({other.expr} / {self.expr})")

    def conj(self):
        return Field(lambda X, a=self: np.conj(a(X)), f"conj({self.expr})")

    def __repr__(self):
        return f"Field({self.expr})"


class Constant(Field):
    """Constant field; the value is inspectable for splitting decisions."""

    __slots__ = ("value",)

    def __init__(self, value):
        value = complex(value)
        if value.imag == 0:
            value = value.real
        self.value = value
        super().__init__(lambda X: np.full(X.shape[:-1], value), repr(value))

    @property
    def is_constant(self) -> bool:
        return True

    def __add__(self, other):
        other = as_field(other)
        if isinstance(other, Constant):
            return Constant(self.value + other.value)
        return super().__add__(other)

    __radd__ = __add__

    def __neg__(self):
        return Constant(-self.value)

    def __mul__(self, other):
        other = as_field(other)
        if isinstance(other, Constant):
            return Constant(self.value * other.value)
        if self.value == 1:
            return other
        if self.value == 0:
            return Constant(0.0)
        return super().__mul__(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_field(other)
        if isinstance(other, Constant):
            return Constant(self.value / other.value)
        return super().__truediv__(other)

    def conj(self):
        return Constant(np.conj(self.value))


def as_field(x) -> Field:
    if isinstance(x, Field):
        return x
    return Constant(x)


ZERO = Constant(0.0)
ONE = Constant(1.0)


def func_field(fn, expr: str) -> Field:
    """Wrap an arbitrary vectorized closed form."""
    return Field(fn, expr)


def argscale(f: Field, s: float) -> Field:
    """X -> f(s X); constants stay constants."""
    if f.is_constant:
        return f
    return Field(lambda X, g=f, s=s: g(s * np.asarray(X, dtype=float)),
                 f"{f.expr}[X -> {s:g} X]")


def component(i: int) -> Field:
    """Coordinate field X -> X_i."""
    return Field(lambda X, i=i: np.asarray(X, dtype=float)[..., i], f"X{i + 1}")


def tanh_switch(scale: float = 1.0, component_index: int = 1) -> Field:
    """Smooth switch tanh(scale * X_i): -1 on one side, +1 on the other."""
    return Field(
        lambda X, s=scale, i=component_index: np.tanh(s * np.asarray(X, dtype=float)[..., i]),
        f"tanh({scale:g} X{component_index + 1})")


def plane_wave(w) -> Field:
    """X -> exp(i w . X)."""
    w = np.asarray(w, dtype=float)
    return Field(lambda X, w=w: np.exp(1j * (np.asarray(X, dtype=float) @ w)),
                 f"exp(i[{w[0]:g},{w[1]:g}].X)")


class VectorField:
    """Small container for R^d -> C^m fields (strain vectors, gradients)."""

    __slots__ = ("_fn", "expr", "m")

    def __init__(self, fn, expr: str, m: int = 2):
        self._fn = fn
        self.expr = expr
        self.m = m

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        out = np.asarray(self._fn(X))
        return out

    @classmethod
    def constant(cls, vec):
        vec = np.asarray(vec)
        return cls(lambda X, v=vec: np.broadcast_to(v, X.shape[:-1] + v.shape).copy(),
                   repr(list(vec)), m=len(vec))

    @classmethod
    def from_components(cls, fields):
        fields = [as_field(f) for f in fields]
        expr = "[" + ", ".join(f.expr for f in fields) + "]"
        return cls(lambda X, fs=fields: np.stack([f(X) for f in fs], axis=-1),
                   expr, m=len(fields))

    def __repr__(self):
        return f"VectorField({self.expr})"

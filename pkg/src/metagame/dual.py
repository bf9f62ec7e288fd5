"""Forward-mode dual numbers.

Components may be floats, numpy arrays, or other :class:`Dual` instances, so
nesting ``Dual(Dual(a, b), Dual(c, e))`` carries exact second derivatives.
"""

from __future__ import annotations

import numbers


class Dual:
    """Dual number ``value + eps * ε`` with ``ε**2 = 0``."""

    __slots__ = ("value", "eps")
    # make numpy arrays defer to our reflected operators instead of building object arrays
    __array_ufunc__ = None

    def __init__(self, value, eps=0.0):
        self.value = value
        self.eps = eps

    @staticmethod
    def _split(other):
        if isinstance(other, Dual):
            return other.value, other.eps
        return other, 0.0

    def __add__(self, other):
        v, e = self._split(other)
        return Dual(self.value + v, self.eps + e)

    __radd__ = __add__

    def __sub__(self, other):
        v, e = self._split(other)
        return Dual(self.value - v, self.eps - e)

    def __rsub__(self, other):
        v, e = self._split(other)
        return Dual(v - self.value, e - self.eps)

    def __neg__(self):
        return Dual(-self.value, -self.eps)

    def __pos__(self):
        return self

    def __mul__(self, other):
        v, e = self._split(other)
        return Dual(self.value * v, self.value * e + self.eps * v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v, e = self._split(other)
        return Dual(self.value / v, (self.eps * v - self.value * e) / (v * v))

    def __rtruediv__(self, other):
        v, e = self._split(other)
        return Dual(v / self.value, (e * self.value - v * self.eps) / (self.value * self.value))

    def __pow__(self, p):
        if not isinstance(p, numbers.Integral) or p < 0:
            raise TypeError("Dual supports only non-negative integer powers")
        if p == 0:
            return Dual(self.value ** 0, 0.0 * self.eps)
        return Dual(self.value ** p, p * self.value ** (p - 1) * self.eps)

    def __repr__(self):
        return f"Dual({self.value!r}, {self.eps!r})"


def derivative(f, x0: float) -> float:
    """``f'(x0)`` for a scalar function written with ordinary arithmetic."""
    return f(Dual(x0, 1.0)).eps


def second_derivative(f, x0: float) -> float:
    out = f(Dual(Dual(x0, 1.0), Dual(1.0, 0.0)))
    return out.eps.eps

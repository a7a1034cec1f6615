"""Truncated multivariate Taylor arithmetic up to third order.

A ``Jet3`` carries the value, gradient, Hessian and third-derivative tensor of
a scalar function of ``n`` variables at a point.  Writing a metric, embedding
or warp factor once as a plain function of jet variables yields machine-exact
derivative callbacks to order three, which is what the analytic
differentiation backend consumes.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["Jet3", "variables", "constant"]


class Jet3:
    __slots__ = ("n", "f", "g", "h", "t")

    def __init__(self, n, f, g=None, h=None, t=None):
        self.n = n
        self.f = float(f)
        self.g = np.zeros(n) if g is None else np.asarray(g, dtype=float)
        self.h = np.zeros((n, n)) if h is None else np.asarray(h, dtype=float)
        self.t = np.zeros((n, n, n)) if t is None else np.asarray(t, dtype=float)

    # -- basic ring operations -------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet3):
            return other
        return Jet3(self.n, float(other))

    def __add__(self, other):
        o = self._coerce(other)
        return Jet3(self.n, self.f + o.f, self.g + o.g, self.h + o.h, self.t + o.t)

    __radd__ = __add__

    def __neg__(self):
        return Jet3(self.n, -self.f, -self.g, -self.h, -self.t)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        f = self.f * o.f
        g = self.g * o.f + self.f * o.g
        h = (self.h * o.f + self.f * o.h
             + np.outer(self.g, o.g) + np.outer(o.g, self.g))
        ab_c = np.einsum("ab,c->abc", self.h, o.g)
        t = (self.t * o.f + self.f * o.t
             + ab_c + ab_c.transpose(0, 2, 1) + ab_c.transpose(2, 0, 1))
        cd_e = np.einsum("ab,c->abc", o.h, self.g)
        t = t + cd_e + cd_e.transpose(0, 2, 1) + cd_e.transpose(2, 0, 1)
        return Jet3(self.n, f, g, h, t)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self._reciprocal()

    def __pow__(self, k):
        if isinstance(k, int):
            if k == 0:
                return Jet3(self.n, 1.0)
            if k < 0:
                return (self._reciprocal()) ** (-k)
            out = self
            for _ in range(k - 1):
                out = out * self
            return out
        u = self.f
        return self._compose(u ** k, k * u ** (k - 1),
                             k * (k - 1) * u ** (k - 2),
                             k * (k - 1) * (k - 2) * u ** (k - 3))

    # -- composition with a univariate function --------------------------
    def _compose(self, h0, h1, h2, h3):
        """Chain rule for h(u) given h, h', h'', h''' at u = self.f."""
        f = h0
        g = h1 * self.g
        h = h2 * np.outer(self.g, self.g) + h1 * self.h
        ggg = np.einsum("a,b,c->abc", self.g, self.g, self.g)
        hg = np.einsum("ab,c->abc", self.h, self.g)
        t = (h3 * ggg
             + h2 * (hg + hg.transpose(0, 2, 1) + hg.transpose(2, 0, 1))
             + h1 * self.t)
        return Jet3(self.n, f, g, h, t)

    def _reciprocal(self):
        u = self.f
        return self._compose(1.0 / u, -1.0 / u ** 2, 2.0 / u ** 3, -6.0 / u ** 4)

    def exp(self):
        e = math.exp(self.f)
        return self._compose(e, e, e, e)

    def log(self):
        u = self.f
        return self._compose(math.log(u), 1.0 / u, -1.0 / u ** 2, 2.0 / u ** 3)

    def sqrt(self):
        u = self.f
        s = math.sqrt(u)
        return self._compose(s, 0.5 / s, -0.25 / (u * s), 0.375 / (u ** 2 * s))

    def sin(self):
        s, c = math.sin(self.f), math.cos(self.f)
        return self._compose(s, c, -s, -c)

    def cos(self):
        s, c = math.sin(self.f), math.cos(self.f)
        return self._compose(c, -s, -c, s)

    def __repr__(self):
        return f"Jet3({self.f:+.6g}, n={self.n})"


def variables(x):
    """Coordinate jets at the point ``x``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    out = []
    for a in range(n):
        g = np.zeros(n)
        g[a] = 1.0
        out.append(Jet3(n, x[a], g))
    return out


def constant(n, value):
    return Jet3(n, value)


def pack_scalar(jet):
    """(value, grad, hess, third) arrays of a scalar jet."""
    return jet.f, jet.g.copy(), jet.h.copy(), jet.t.copy()


def pack_array(jets):
    """Stack a nested list/array of jets into value/derivative arrays.

    Entries may be plain numbers (treated as constants).  Returns arrays of
    shape ``shape``, ``shape+(n,)``, ``shape+(n,n)``, ``shape+(n,n,n)``.
    """
    arr = np.asarray(jets, dtype=object)
    shape = arr.shape
    flat = arr.reshape(-1)
    n = None
    for e in flat:
        if isinstance(e, Jet3):
            n = e.n
            break
    if n is None:
        raise ValueError("no jets in array")
    v = np.empty(shape).reshape(-1)
    g = np.empty(shape + (n,)).reshape(-1, n)
    h = np.empty(shape + (n, n)).reshape(-1, n, n)
    t = np.empty(shape + (n, n, n)).reshape(-1, n, n, n)
    for i, e in enumerate(flat):
        if isinstance(e, Jet3):
            v[i], g[i], h[i], t[i] = e.f, e.g, e.h, e.t
        else:
            v[i] = float(e)
            g[i] = 0.0
            h[i] = 0.0
            t[i] = 0.0
    return (v.reshape(shape), g.reshape(shape + (n,)),
            h.reshape(shape + (n, n)), t.reshape(shape + (n, n, n)))

"""Chart-based tensor values, index algebra and differentiation backends.

Tensors are dense numpy arrays tagged with per-axis index metadata (kind,
variance, dimension) and an integer conformal weight.  Tractor indices use the
slot order (sigma, mu_1..mu_n, rho) for both variances; contracting an up
tractor index with a down one therefore goes through the constant pairing
matrix that swaps the sigma and rho slots (implemented as an axis flip).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

TANGENT = "tangent"
TRACTOR = "tractor"
UP = "up"
DOWN = "down"

__all__ = [
    "Index", "TensorValue", "DiffBackend", "ArrayField", "FieldHandle",
    "tangent_up", "tangent_down", "tractor_up", "tractor_down",
    "contract", "trace", "alt", "sym", "outer", "jet",
]


class TensorError(ValueError):
    pass


@dataclass(frozen=True)
class Index:
    kind: str
    variance: str
    dim: int

    def flipped(self):
        return Index(self.kind, UP if self.variance == DOWN else DOWN, self.dim)


def tangent_up(n):
    return Index(TANGENT, UP, n)


def tangent_down(n):
    return Index(TANGENT, DOWN, n)


def tractor_up(n):
    return Index(TRACTOR, UP, n + 2)


def tractor_down(n):
    return Index(TRACTOR, DOWN, n + 2)


@dataclass(frozen=True)
class TensorValue:
    data: np.ndarray
    indices: tuple = ()
    weight: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "indices", tuple(self.indices))
        if data.shape != tuple(ix.dim for ix in self.indices):
            raise TensorError(
                f"shape {data.shape} does not match indices "
                f"{tuple(ix.dim for ix in self.indices)}")
        if not np.all(np.isfinite(data)):
            raise TensorError("non-finite tensor components")

    @property
    def rank(self):
        return len(self.indices)

    def __add__(self, other):
        if self.indices != other.indices or self.weight != other.weight:
            raise TensorError("incompatible tensors in addition")
        return TensorValue(self.data + other.data, self.indices, self.weight)

    def __sub__(self, other):
        if self.indices != other.indices or self.weight != other.weight:
            raise TensorError("incompatible tensors in subtraction")
        return TensorValue(self.data - other.data, self.indices, self.weight)

    def __mul__(self, scalar):
        return TensorValue(self.data * float(scalar), self.indices, self.weight)

    __rmul__ = __mul__

    def __neg__(self):
        return TensorValue(-self.data, self.indices, self.weight)

    def is_symmetric(self, axes, rtol=1e-12):
        return _symmetry_residual(self.data, axes, +1.0) <= rtol * max(
            1.0, float(np.abs(self.data).max()))

    def is_antisymmetric(self, axes=None, rtol=1e-12):
        axes = tuple(range(self.rank)) if axes is None else tuple(axes)
        return _symmetry_residual(self.data, axes, -1.0) <= rtol * max(
            1.0, float(np.abs(self.data).max()))


def _symmetry_residual(data, axes, sign):
    worst = 0.0
    for perm, s in _signed_transpositions(axes):
        swapped = np.moveaxis(data, axes, perm)
        target = data if (sign > 0 or s > 0) else -data
        worst = max(worst, float(np.abs(swapped - target).max()))
    return worst


def _signed_transpositions(axes):
    out = []
    for i in range(len(axes) - 1):
        perm = list(axes)
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        out.append((tuple(perm), -1))
    return out


def _tr_flip(data, axis):
    """Apply the tractor pairing matrix along ``axis`` (swap sigma/rho)."""
    dim = data.shape[axis]
    order = np.arange(dim)
    order[0], order[-1] = dim - 1, 0
    return np.take(data, order, axis=axis)


def contract(a: TensorValue, b: TensorValue, pairs) -> TensorValue:
    """Einstein contraction of ``a`` with ``b`` over the given axis pairs.

    Each pair (i, j) contracts axis ``i`` of ``a`` against axis ``j`` of
    ``b``; the paired indices must have equal kind and dimension and opposite
    variance.  Tractor pairs insert the invariant pairing between the slot
    representations.  Resulting weight is the sum of weights.
    """
    pairs = [tuple(p) for p in pairs]
    for i, j in pairs:
        ia, ib = a.indices[i], b.indices[j]
        if ia.kind != ib.kind or ia.dim != ib.dim or ia.variance == ib.variance:
            raise TensorError(f"cannot contract {ia} with {ib}")
    bdata = b.data
    for i, j in pairs:
        if a.indices[i].kind == TRACTOR:
            bdata = _tr_flip(bdata, j)
    a_axes = [p[0] for p in pairs]
    b_axes = [p[1] for p in pairs]
    data = np.tensordot(a.data, bdata, axes=(a_axes, b_axes))
    keep_a = [ix for k, ix in enumerate(a.indices) if k not in a_axes]
    keep_b = [ix for k, ix in enumerate(b.indices) if k not in b_axes]
    return TensorValue(data, tuple(keep_a) + tuple(keep_b),
                       a.weight + b.weight)


def trace(a: TensorValue, i, j) -> TensorValue:
    """Contract two indices of a single tensor."""
    ia, ib = a.indices[i], a.indices[j]
    if ia.kind != ib.kind or ia.dim != ib.dim or ia.variance == ib.variance:
        raise TensorError(f"cannot trace {ia} with {ib}")
    data = a.data
    if ia.kind == TRACTOR:
        data = _tr_flip(data, j)
    data = np.trace(data, axis1=i, axis2=j)
    keep = tuple(ix for k, ix in enumerate(a.indices) if k not in (i, j))
    return TensorValue(data, keep, a.weight)


def _project(a: TensorValue, axes, antisym: bool) -> TensorValue:
    axes = tuple(axes)
    ref = a.indices[axes[0]]
    for ax in axes[1:]:
        if a.indices[ax] != ref:
            raise TensorError("symmetrisation over mixed index types")
    out = np.zeros_like(a.data)
    k = len(axes)
    for perm in itertools.permutations(range(k)):
        s = _perm_sign(perm) if antisym else 1.0
        out += s * np.moveaxis(a.data, axes, tuple(axes[p] for p in perm))
    return TensorValue(out / math.factorial(k), a.indices, a.weight)


def _perm_sign(perm):
    sign = 1.0
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def alt(a: TensorValue, axes=None) -> TensorValue:
    """Antisymmetrise over ``axes`` with the 1/k! bracket normalisation."""
    axes = tuple(range(a.rank)) if axes is None else tuple(axes)
    return _project(a, axes, antisym=True)


def sym(a: TensorValue, axes=None) -> TensorValue:
    """Symmetrise over ``axes`` with the 1/k! bracket normalisation."""
    axes = tuple(range(a.rank)) if axes is None else tuple(axes)
    return _project(a, axes, antisym=False)


def alt_array(data, axes=None):
    axes = tuple(range(data.ndim)) if axes is None else tuple(axes)
    out = np.zeros_like(data)
    k = len(axes)
    for perm in itertools.permutations(range(k)):
        out += _perm_sign(perm) * np.moveaxis(data, axes,
                                              tuple(axes[p] for p in perm))
    return out / math.factorial(k)


def sym_array(data, axes=None):
    axes = tuple(range(data.ndim)) if axes is None else tuple(axes)
    out = np.zeros_like(data)
    k = len(axes)
    for perm in itertools.permutations(range(k)):
        out += np.moveaxis(data, axes, tuple(axes[p] for p in perm))
    return out / math.factorial(k)


def outer(a: TensorValue, b: TensorValue) -> TensorValue:
    data = np.multiply.outer(a.data, b.data)
    return TensorValue(data, a.indices + b.indices, a.weight + b.weight)


# --------------------------------------------------------------------------
# Differentiation backend
# --------------------------------------------------------------------------

ANALYTIC = "analytic"
FD = "central-finite-difference"


class JetOrderError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiffBackend:
    """How fields are differentiated.

    FD steps default to 1e-3 for first/second derivatives and 1e-2 for the
    outer level of third derivatives (third derivatives of a metric enter the
    Cotton tensor; the wider step trades truncation against roundoff there).
    """
    mode: str = FD
    step: float = 1e-3
    step3: float = 1e-2
    max_order: int = 3

    def __post_init__(self):
        if self.mode not in (ANALYTIC, FD):
            raise ValueError(f"unknown backend mode {self.mode!r}")
        if self.step <= 0 or self.step3 <= 0:
            raise ValueError("FD steps must be positive")


class ArrayField:
    """Array-valued function of a chart point with derivative access.

    ``fn(x) -> ndarray``; optional analytic callbacks d1/d2/d3 append one,
    two, three trailing coordinate axes.  In FD mode derivatives are nested
    central differences.
    """

    def __init__(self, fn, d1=None, d2=None, d3=None, backend=None,
                 shape=None):
        self.fn = fn
        self.d1 = d1
        self.d2 = d2
        self.d3 = d3
        self.backend = backend or DiffBackend()
        self.shape = shape

    def value(self, x):
        v = np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)
        if not np.all(np.isfinite(v)):
            raise JetOrderError("non-finite field evaluation")
        return v

    def jets(self, x, order):
        x = np.asarray(x, dtype=float)
        if order > self.backend.max_order:
            raise JetOrderError(
                f"order {order} exceeds backend max_order "
                f"{self.backend.max_order}")
        if self.backend.mode == ANALYTIC:
            cbs = [None, self.d1, self.d2, self.d3]
            out = [self.value(x)]
            for k in range(1, order + 1):
                if cbs[k] is None:
                    raise JetOrderError(
                        f"analytic backend lacks order-{k} callback")
                out.append(np.asarray(cbs[k](x), dtype=float))
            return out
        return self._fd_jets(x, order)

    def _fd_jets(self, x, order):
        n = x.size
        v = self.value(x)
        out = [v]
        h = self.backend.step
        if order >= 1:
            out.append(self._fd1(x, h))
        if order >= 2:
            out.append(self._fd2(x, h))
        if order >= 3:
            h3 = self.backend.step3
            d3 = np.empty(v.shape + (n, n, n))
            for c in range(n):
                e = np.zeros(n)
                e[c] = h3
                d3[..., c] = (self._fd2(x + e, h) - self._fd2(x - e, h)) / (2 * h3)
            # symmetrise the mixed third derivatives
            d3 = (d3 + d3.transpose(*range(v.ndim), *(v.ndim + np.array([1, 2, 0]))) +
                  d3.transpose(*range(v.ndim), *(v.ndim + np.array([2, 0, 1]))) +
                  d3.transpose(*range(v.ndim), *(v.ndim + np.array([0, 2, 1]))) +
                  d3.transpose(*range(v.ndim), *(v.ndim + np.array([1, 0, 2]))) +
                  d3.transpose(*range(v.ndim), *(v.ndim + np.array([2, 1, 0])))) / 6.0
            out.append(d3)
        return out

    def _fd1(self, x, h):
        n = x.size
        v = self.value(x)
        d1 = np.empty(v.shape + (n,))
        for a in range(n):
            e = np.zeros(n)
            e[a] = h
            d1[..., a] = (self.value(x + e) - self.value(x - e)) / (2 * h)
        return d1

    def _fd2(self, x, h):
        n = x.size
        v = self.value(x)
        d2 = np.empty(v.shape + (n, n))
        for a in range(n):
            ea = np.zeros(n)
            ea[a] = h
            d2[..., a, a] = (self.value(x + ea) - 2 * v + self.value(x - ea)) / h ** 2
            for b in range(a + 1, n):
                eb = np.zeros(n)
                eb[b] = h
                mixed = (self.value(x + ea + eb) - self.value(x + ea - eb)
                         - self.value(x - ea + eb) + self.value(x - ea - eb)) / (4 * h ** 2)
                d2[..., a, b] = mixed
                d2[..., b, a] = mixed
        return d2


@dataclass
class FieldHandle:
    """A tensor-valued field: evaluation plus derivative access."""
    field: ArrayField
    indices: tuple = ()
    weight: int = 0

    def __call__(self, x) -> TensorValue:
        return TensorValue(self.field.value(x), self.indices, self.weight)


def jet(handle: FieldHandle, x, order):
    """Value and partial derivatives of a field as TensorValues.

    The k-th entry carries k extra trailing down tangent indices and is
    symmetric in them.
    """
    x = np.asarray(x, dtype=float)
    arrays = handle.field.jets(x, order)
    n = x.size
    out = []
    for k, arr in enumerate(arrays):
        ixs = handle.indices + tuple(tangent_down(n) for _ in range(k))
        out.append(TensorValue(arr, ixs, handle.weight))
    return out

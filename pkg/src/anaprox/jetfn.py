"""Combinators over jet-evaluable functions.

Anything with a ``jets(ts, m) -> (len(ts), m+1)`` method (derivative
values, not Taylor coefficients) can be combined here: linear
combinations, Leibniz products, cutoff-masked products, and polynomial
extensions.  All combinators are immutable and pure.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "binom_conv", "ZeroFn", "ConstFn", "SumFn", "ScaledFn", "ProductFn",
    "CutoffProductFn", "TaylorPolyFn", "LeftExtendedFn", "as_jet_fn",
]


def _binom_matrix(m: int) -> np.ndarray:
    return np.array([[math.comb(k, j) if j <= k else 0
                      for j in range(m + 1)] for k in range(m + 1)],
                    dtype=float)


def binom_conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Leibniz rule: derivative jets of a product from factor jets.

    ``a``, ``b`` have shape (n, m+1); entry k of the result is
    sum_j C(k,j) a_j b_{k-j}.
    """
    n, m1 = a.shape
    out = np.zeros_like(a)
    for k in range(m1):
        acc = np.zeros(n)
        for j in range(k + 1):
            acc += math.comb(k, j) * a[:, j] * b[:, k - j]
        out[:, k] = acc
    return out


class JetFn:
    """Mixin giving scalar and value-only access on top of ``jets``."""

    def jet(self, t: float, m: int):
        from .fnspec import Jet
        return Jet(m, self.jets(np.array([float(t)]), m)[0])

    def __call__(self, ts):
        return self.jets(np.atleast_1d(np.asarray(ts, dtype=float)), 0)[:, 0]


class ZeroFn(JetFn):
    def jets(self, ts, m):
        return np.zeros((len(ts), m + 1))


class ConstFn(JetFn):
    def __init__(self, value: float):
        self.value = float(value)

    def jets(self, ts, m):
        out = np.zeros((len(ts), m + 1))
        out[:, 0] = self.value
        return out


class SumFn(JetFn):
    """Linear combination sum_i w_i f_i."""

    def __init__(self, fns, weights=None):
        self.fns = list(fns)
        self.weights = [1.0] * len(self.fns) if weights is None else list(weights)

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((ts.shape[0], m + 1))
        for w, f in zip(self.weights, self.fns):
            out += w * f.jets(ts, m)
        return out


class ScaledFn(JetFn):
    def __init__(self, fn, scale: float):
        self.fn = fn
        self.scale = float(scale)

    def jets(self, ts, m):
        return self.scale * self.fn.jets(ts, m)


class ProductFn(JetFn):
    def __init__(self, left, right):
        self.left = left
        self.right = right

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        return binom_conv(self.left.jets(ts, m), self.right.jets(ts, m))


class CutoffProductFn(JetFn):
    """Product cutoff * inner, exactly zero where the cutoff jet is zero.

    The inner function is only evaluated where the cutoff is active, so
    it may be undefined (or expensive) outside the cutoff support.
    """

    def __init__(self, cutoff, inner):
        self.cutoff = cutoff
        self.inner = inner

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        cj = self.cutoff.jets(ts, m)
        out = np.zeros((ts.shape[0], m + 1))
        active = np.any(cj != 0.0, axis=1)
        if np.any(active):
            ij = self.inner.jets(ts[active], m)
            out[active] = binom_conv(cj[active], ij)
        return out


class TaylorPolyFn(JetFn):
    """Polynomial with given derivative jet at a center point."""

    def __init__(self, center: float, derivs):
        self.center = float(center)
        self.derivs = np.asarray(derivs, dtype=float)

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        r = len(self.derivs) - 1
        dt = ts - self.center
        out = np.zeros((ts.shape[0], m + 1))
        for k in range(min(m, r) + 1):
            # k-th derivative of the Taylor polynomial
            acc = np.zeros(ts.shape[0])
            for j in range(r - k + 1):
                acc += self.derivs[k + j] * dt ** j / math.factorial(j)
            out[:, k] = acc
        return out


class LeftExtendedFn(JetFn):
    """A function on [b0, hi) extended to the left of b0.

    ``mode`` is "expression" (evaluate the first-piece expression as-is)
    or "taylor" (freeze the order-r jet at b0 into a polynomial).
    """

    def __init__(self, fn, b0: float, mode: str, taylor_order: int = 0):
        self.fn = fn
        self.b0 = float(b0)
        self.mode = mode
        if mode == "taylor":
            self.poly = TaylorPolyFn(b0, fn.jet(b0, taylor_order).coeffs)
        elif mode != "expression":
            raise ValueError(mode)

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        left = ts < self.b0
        if not np.any(left):
            return self.fn.jets(ts, m)
        out = np.empty((ts.shape[0], m + 1))
        if np.any(~left):
            out[~left] = self.fn.jets(ts[~left], m)
        if self.mode == "expression":
            out[left] = self.fn.pieces[0].expr.jets(ts[left], m)
        else:
            out[left] = self.poly.jets(ts[left], m)
        return out


def as_jet_fn(obj):
    """Adapt common inputs (numbers, jet-evaluables) to the JetFn protocol."""
    if isinstance(obj, (int, float)):
        return ConstFn(obj)
    if hasattr(obj, "jets"):
        return obj
    raise TypeError(f"not jet-evaluable: {obj!r}")

"""Batched truncated Taylor-series arithmetic.

A series is an ndarray of shape ``(m+1, n)``: row ``k`` holds the k-th
Taylor coefficient (derivative divided by k!) at each of ``n`` evaluation
points.  All recurrences below are the standard exact propagation rules,
applied elementwise over the batch, so a single call differentiates an
expression at many points at once.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import EvaluationDomainError

__all__ = [
    "variable", "constant", "smul", "sdiv", "sexp", "slog", "spow_int",
    "spow_real", "ssqrt", "ssin", "scos", "ssin_cos", "stanh", "sneg",
    "coeffs_to_derivs", "derivs_to_coeffs",
]


def variable(t: np.ndarray, m: int) -> np.ndarray:
    """Series of the identity at points ``t``."""
    s = np.zeros((m + 1, t.shape[0]))
    s[0] = t
    if m >= 1:
        s[1] = 1.0
    return s


def constant(c: float, m: int, n: int) -> np.ndarray:
    s = np.zeros((m + 1, n))
    s[0] = c
    return s


def sneg(a):
    return -a


def smul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cauchy product."""
    m1, n = a.shape
    out = np.zeros_like(a)
    for k in range(m1):
        # fixed summation order for determinism
        acc = np.zeros(n)
        for j in range(k + 1):
            acc += a[j] * b[k - j]
        out[k] = acc
    return out


def sdiv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if np.any(b[0] == 0.0):
        raise EvaluationDomainError("division by zero")
    m1, n = a.shape
    out = np.zeros_like(a)
    inv = 1.0 / b[0]
    for k in range(m1):
        acc = a[k].copy()
        for j in range(k):
            acc -= out[j] * b[k - j]
        out[k] = acc * inv
    return out


def sexp(u: np.ndarray) -> np.ndarray:
    m1, n = u.shape
    w = np.zeros_like(u)
    w[0] = np.exp(u[0])
    for k in range(1, m1):
        acc = np.zeros(n)
        for j in range(1, k + 1):
            acc += j * u[j] * w[k - j]
        w[k] = acc / k
    return w


def slog(u: np.ndarray) -> np.ndarray:
    if np.any(u[0] <= 0.0):
        raise EvaluationDomainError("log of non-positive argument")
    m1, n = u.shape
    w = np.zeros_like(u)
    w[0] = np.log(u[0])
    inv = 1.0 / u[0]
    for k in range(1, m1):
        acc = u[k].copy()
        for j in range(1, k):
            acc -= (j / k) * w[j] * u[k - j]
        w[k] = acc * inv
    return w


def spow_int(u: np.ndarray, p: int) -> np.ndarray:
    """Integer power by repeated squaring; negative exponents via division."""
    m1, n = u.shape
    if p == 0:
        return constant(1.0, m1 - 1, n)
    if p < 0:
        if np.any(u[0] == 0.0):
            raise EvaluationDomainError("zero raised to a negative power")
        return sdiv(constant(1.0, m1 - 1, n), spow_int(u, -p))
    result = None
    base = u
    e = p
    while e > 0:
        if e & 1:
            result = base if result is None else smul(result, base)
        e >>= 1
        if e:
            base = smul(base, base)
    return result


def spow_real(u: np.ndarray, alpha: float) -> np.ndarray:
    """Real power, base required positive."""
    if np.any(u[0] <= 0.0):
        raise EvaluationDomainError("real power of non-positive base")
    m1, n = u.shape
    w = np.zeros_like(u)
    w[0] = u[0] ** alpha
    inv = 1.0 / u[0]
    for k in range(1, m1):
        acc = np.zeros(n)
        for j in range(1, k + 1):
            acc += ((alpha + 1.0) * j - k) * u[j] * w[k - j]
        w[k] = acc * inv / k
    return w


def ssqrt(u: np.ndarray) -> np.ndarray:
    if np.any(u[0] < 0.0):
        raise EvaluationDomainError("sqrt of negative argument")
    if u.shape[0] == 1:
        return np.sqrt(u)
    return spow_real(u, 0.5)


def ssin_cos(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m1, n = u.shape
    s = np.zeros_like(u)
    c = np.zeros_like(u)
    s[0] = np.sin(u[0])
    c[0] = np.cos(u[0])
    for k in range(1, m1):
        sa = np.zeros(n)
        ca = np.zeros(n)
        for j in range(1, k + 1):
            sa += j * u[j] * c[k - j]
            ca += j * u[j] * s[k - j]
        s[k] = sa / k
        c[k] = -ca / k
    return s, c


def ssin(u):
    return ssin_cos(u)[0]


def scos(u):
    return ssin_cos(u)[1]


def stanh(u: np.ndarray) -> np.ndarray:
    # propagate w = tanh(u) together with v = 1 - w^2 = sech^2(u)
    m1, n = u.shape
    w = np.zeros_like(u)
    v = np.zeros_like(u)
    w[0] = np.tanh(u[0])
    v[0] = 1.0 - w[0] * w[0]
    for k in range(1, m1):
        acc = np.zeros(n)
        for j in range(1, k + 1):
            acc += j * u[j] * v[k - j]
        w[k] = acc / k
        vk = np.zeros(n)
        for i in range(k + 1):
            vk += w[i] * w[k - i]
        v[k] = -vk
    return w


_FACTORIALS = [math.factorial(k) for k in range(171)]


def _factorials(m: int) -> np.ndarray:
    if m < len(_FACTORIALS):
        return np.array(_FACTORIALS[: m + 1], dtype=float)
    return np.array([math.factorial(k) for k in range(m + 1)], dtype=float)


def coeffs_to_derivs(s: np.ndarray) -> np.ndarray:
    """Taylor coefficients -> derivative values (multiply row k by k!)."""
    return s * _factorials(s.shape[0] - 1)[:, None]


def derivs_to_coeffs(j: np.ndarray) -> np.ndarray:
    return j / _factorials(j.shape[0] - 1)[:, None]

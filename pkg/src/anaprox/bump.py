"""Smooth transitions, plateau humps, and staged cutoff families.

The unit transition uses the classical construction
``sigma(u) = E(u) / (E(u) + E(1-u))`` with ``E(u) = exp(-1/u)`` for
``u > 0``; the flat branches (exactly 0 below, exactly 1 above) are
hard-coded so jets there are bit-exact.
"""

from __future__ import annotations

import numpy as np

from . import series
from .errors import AnaproxError
from .jetfn import JetFn, SumFn
from .seminorm import CompactSet, GridConfig, seminorm

__all__ = ["Transition", "HumpFn", "CutoffFamily", "transition_jet",
           "hump_jet", "build_cutoffs", "estimate_C"]

#: below this distance (in unit-interval coordinates) from an endpoint the
#: jet is numerically indistinguishable from the flat branch
_EDGE_GUARD = 1e-8

#: safety factor applied to grid-estimated transition derivative bounds
_C_SAFETY = 1.05


def _sigma_series(u: np.ndarray, m: int) -> np.ndarray:
    """Taylor series of sigma at interior points u in (0, 1)."""
    su = series.variable(u, m)
    one = series.constant(1.0, m, u.shape[0])
    e1 = series.sexp(series.sdiv(-one, su))
    e2 = series.sexp(series.sdiv(-one, one - su))
    return series.sdiv(e1, e1 + e2)


class Transition(JetFn):
    """Monotone C^inf ramp: 0 on (-inf, a], 1 on [b, inf), rising on (a, b)."""

    def __init__(self, a: float, b: float):
        if not a < b:
            raise ValueError("transition requires a < b")
        self.a = float(a)
        self.b = float(b)

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        w = self.b - self.a
        u = (ts - self.a) / w
        out = np.zeros((ts.shape[0], m + 1))
        hi = u >= 1.0 - _EDGE_GUARD
        out[hi, 0] = 1.0
        mid = (~hi) & (u > _EDGE_GUARD)
        if np.any(mid):
            s = _sigma_series(u[mid], m)
            derivs = series.coeffs_to_derivs(s).T
            # chain rule for the affine substitution: order k picks w^-k
            scale = (1.0 / w) ** np.arange(m + 1)
            out[mid] = derivs * scale
        return out


class HumpFn(JetFn):
    """Plateau function: rises on [p, q], equals 1 on [q, u], falls on [u, v]."""

    def __init__(self, rise, fall):
        p, q = map(float, rise)
        u, v = map(float, fall)
        if not (p < q <= u < v):
            raise ValueError("hump requires p < q <= u < v")
        self.rise = Transition(p, q)
        self.fall = Transition(u, v)
        self.support = (p, v)

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        mid = 0.5 * (self.rise.b + self.fall.a)
        out = np.empty((ts.shape[0], m + 1))
        left = ts < mid
        if np.any(left):
            out[left] = self.rise.jets(ts[left], m)
        if np.any(~left):
            fj = -self.fall.jets(ts[~left], m)
            fj[:, 0] += 1.0
            out[~left] = fj
        return out


def transition_jet(tr: Transition, t: float, m: int):
    """Jet of a transition; exact zero/one jets on the flat branches."""
    return tr.jet(t, m)


def hump_jet(rise, fall, t: float, m: int):
    return HumpFn(rise, fall).jet(t, m)


class CutoffFamily:
    """Cutoffs phi_0..phi_N for an exhaustion: phi_n vanishes near K_{n-1},
    equals 1 near cl(L_n), and is supported in K_{n+2}."""

    def __init__(self, a, b, members, margins):
        self.a = list(a)
        self.b = list(b)
        self.members = list(members)
        self.margins = list(margins)

    def __len__(self):
        return len(self.members)

    def __getitem__(self, n):
        return self.members[n]

    def support_hull(self, n):
        """Hull of supp phi_n, i.e. K_{n+2}."""
        return (self.a[n + 2], self.b[n + 2])

    def support_bands(self, n):
        """Exact support intervals of phi_n (one hump or two)."""
        phi = self.members[n]
        if isinstance(phi, HumpFn):
            return [phi.support]
        return [h.support for h in phi.fns]


def build_cutoffs(ex, N: int) -> CutoffFamily:
    """Cutoff family for stages 0..N; the exhaustion needs N+3 levels."""
    a = list(getattr(ex, "a", ex[0] if isinstance(ex, tuple) else ex))
    b = list(getattr(ex, "b", ex[1] if isinstance(ex, tuple) else ex))
    if len(a) < N + 3 or len(b) < N + 3:
        raise AnaproxError(f"exhaustion needs {N + 3} levels, "
                           f"got {min(len(a), len(b))}")
    members = []
    margins = []
    for n in range(N + 1):
        gaps = [a[n] - a[n + 1], a[n + 1] - a[n + 2],
                b[n + 1] - b[n], b[n + 2] - b[n + 1]]
        if n >= 1:
            gaps += [a[n - 1] - a[n], b[n] - b[n - 1]]
        eps = min(gaps) / 4.0
        if eps <= 0:
            raise AnaproxError(f"degenerate exhaustion gap at stage {n}")
        margins.append(eps)
        if n == 0:
            phi = HumpFn((a[2] + eps, a[1] - eps), (b[1] + eps, b[2] - eps))
        else:
            alpha_n = HumpFn((a[n + 2] + eps, a[n + 1] - eps),
                             (a[n] + eps, a[n - 1] - eps))
            beta_n = HumpFn((b[n - 1] + eps, b[n] - eps),
                            (b[n + 1] + eps, b[n + 2] - eps))
            phi = SumFn([alpha_n, beta_n])
        members.append(phi)
    return CutoffFamily(a, b, members, margins)


class _DerivOnly(JetFn):
    """View of the k-th derivative of a jet-evaluable as an order-0 function."""

    def __init__(self, fn, k):
        self.fn = fn
        self.k = k

    def jets(self, ts, m):
        return self.fn.jets(ts, self.k + m)[:, self.k:]


_C_CACHE: dict[int, float] = {}


def estimate_C(m: int, cfg: GridConfig | None = None) -> float:
    """Bound C_m >= 1 with |alpha_{a,b}^{(m)}| <= C_m / (b-a)^m.

    Grid-estimated on the unit transition and inflated by a safety
    factor; the scaling law follows from the affine substitution.
    """
    if cfg is None and m in _C_CACHE:
        return _C_CACHE[m]
    tr = Transition(0.0, 1.0)
    est = seminorm(_DerivOnly(tr, m), CompactSet.interval(0.0, 1.0), 0, cfg)
    value = max(1.0, est.value * _C_SAFETY)
    if cfg is None:
        _C_CACHE[m] = value
    return value

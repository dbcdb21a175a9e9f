"""Blending two approximants across a transition zone.

Given g_- controlling derivatives up to order n on [a, horizon] and g_+
controlling up to n+1 on [b, horizon], the blend (1-beta) g_- + beta g_+
with a sufficiently wide transition beta keeps the order-n control up to
a (1+delta) inflation and inherits the order-(n+1) control past the
transition.  Iterating with a summable delta schedule keeps the total
inflation below 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bump import Transition, estimate_C
from .certs import Certificate, pointwise_ratio
from .errors import GlueError
from .jetfn import JetFn, binom_conv, as_jet_fn
from .seminorm import CompactSet, GridConfig

__all__ = ["BlendFn", "GlueResult", "glue_pair", "glue_chain",
           "DEFAULT_HORIZON_SPAN"]

DEFAULT_HORIZON_SPAN = 50.0

_MAX_WIDTH_DOUBLINGS = 60


class BlendFn(JetFn):
    """(1 - beta) g_- + beta g_+; bit-equal to g_- left of the zone and
    to g_+ right of it."""

    def __init__(self, g_minus, g_plus, b: float, bprime: float):
        self.g_minus = as_jet_fn(g_minus)
        self.g_plus = as_jet_fn(g_plus)
        self.b = float(b)
        self.bprime = float(bprime)
        self.beta = Transition(b, bprime)

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.shape[0], m + 1))
        left = ts <= self.b
        right = ts >= self.bprime
        mid = ~(left | right)
        if np.any(left):
            out[left] = self.g_minus.jets(ts[left], m)
        if np.any(right):
            out[right] = self.g_plus.jets(ts[right], m)
        if np.any(mid):
            tm = ts[mid]
            gm = self.g_minus.jets(tm, m)
            gp = self.g_plus.jets(tm, m)
            out[mid] = gm + binom_conv(self.beta.jets(tm, m), gp - gm)
        return out


@dataclass
class GlueResult:
    g: BlendFn
    bprime: float
    width_iterations: int
    certificate: Certificate
    delta: float = 0.0


class _Diff(JetFn):
    def __init__(self, f, g):
        self.f = as_jet_fn(f)
        self.g = as_jet_fn(g)

    def jets(self, ts, m):
        return self.f.jets(ts, m) - self.g.jets(ts, m)


def transition_width(n: int, delta: float, start: float = 1.0,
                     cfg: GridConfig | None = None):
    """Smallest doubled width w with, for every 1 <= j <= n,
    sum_{i<j} C(j,i) C_{j-i} / w^{j-i} < delta / 2.

    Returns (width, doublings).  Each summand decreases in w, so doubling
    terminates as soon as the largest constant is dominated.
    """
    C = {k: estimate_C(k, cfg) for k in range(1, max(n, 1) + 1)}
    w = start
    for it in range(_MAX_WIDTH_DOUBLINGS + 1):
        ok = True
        for j in range(1, n + 1):
            s = sum(math.comb(j, i) * C[j - i] / w ** (j - i)
                    for i in range(j))
            if not s < delta / 2.0:
                ok = False
                break
        if ok:
            return w, it
        w *= 2.0
    raise GlueError("transition width search exceeded doubling cap")


def glue_pair(f, g_minus, g_plus, a0: float, a: float, b: float, n: int,
              eps, delta: float, horizon: float | None = None,
              cfg: GridConfig | None = None) -> GlueResult:
    """Blend g_- (order n on [a, horizon]) with g_+ (order n+1 on [b, horizon]).

    Verifies the hypotheses on grids, widens the transition until the
    correction-term bound is below delta/2, then verifies the conclusion
    inequalities (ii) and (iii) on grids.
    """
    if delta <= 0:
        raise GlueError("delta must be positive")
    if not a0 <= a <= b:
        raise GlueError(f"need a0 <= a <= b, got {a0}, {a}, {b}")
    if horizon is None:
        horizon = a0 + DEFAULT_HORIZON_SPAN
    f = as_jet_fn(f)
    g_minus = as_jet_fn(g_minus)
    g_plus = as_jet_fn(g_plus)
    eps = as_jet_fn(eps)
    cert = Certificate()

    r, pts, _ = pointwise_ratio(_Diff(f, g_minus), eps,
                                CompactSet.interval(a, horizon), n, cfg)
    if not cert.add("hyp: |(f-g_minus)^(j)| < eps on [a,horizon], j<=n",
                    r, 1.0, pts):
        raise GlueError("left-approximant hypothesis fails on grid")
    r, pts, _ = pointwise_ratio(_Diff(f, g_plus), eps,
                                CompactSet.interval(b, horizon), n + 1, cfg)
    if not cert.add("hyp: |(f-g_plus)^(j)| < eps on [b,horizon], j<=n+1",
                    r, 1.0, pts):
        raise GlueError("right-approximant hypothesis fails on grid")
    # re-measured, not inferred from the triangle inequality
    r, pts, _ = pointwise_ratio(_Diff(g_plus, g_minus), eps,
                                CompactSet.interval(b, horizon), n, cfg,
                                scale=2.0)
    cert.add("hyp: |(g_plus-g_minus)^(j)| < 2 eps on [b,horizon], j<=n",
             r, 1.0, pts)

    width, iterations = transition_width(n, delta, 1.0, cfg)
    bprime = b + width
    if bprime >= horizon:
        raise GlueError(f"transition zone [{b}, {bprime}] exceeds horizon")
    g = BlendFn(g_minus, g_plus, b, bprime)

    r, pts, _ = pointwise_ratio(_Diff(f, g), eps,
                                CompactSet.interval(a, horizon), n, cfg,
                                scale=1.0 + delta)
    ok_ii = cert.add("(ii): |(f-g)^(j)| < (1+delta) eps on [a,horizon], j<=n",
                     r, 1.0, pts)
    r, pts, _ = pointwise_ratio(_Diff(f, g), eps,
                                CompactSet.interval(bprime, horizon),
                                n + 1, cfg)
    ok_iii = cert.add("(iii): |(f-g)^(j)| < eps on [bprime,horizon], j<=n+1",
                      r, 1.0, pts)
    if not (ok_ii and ok_iii):
        raise GlueError("blend certificate fails on grid")
    return GlueResult(g, bprime, iterations, cert, delta)


@dataclass
class ChainResult:
    g: JetFn
    stage_starts: list
    certificate: Certificate


def glue_chain(f, stages, eps, horizon: float,
               cfg: GridConfig | None = None) -> ChainResult:
    """Iterated glueing of stage approximants (a_n, g_n).

    Stage n must satisfy |(f-g_n)^(j)| < eps/2 on [a_n, horizon] for
    j <= n.  Deltas 2^-(k+2) keep the accumulated inflation below
    e^(1/2) < 2, so the final error stays below eps.
    """
    stages = list(stages)
    if not stages:
        raise GlueError("empty stage list")
    f = as_jet_fn(f)
    eps = as_jet_fn(eps)
    cert = Certificate()

    a0 = float(stages[0][0])
    current = as_jet_fn(stages[0][1])
    starts = [a0]
    inflation = 1.0
    cur = a0    # the highest-order control of `current` holds on [cur, horizon]
    for k in range(1, len(stages)):
        a_k, g_k = float(stages[k][0]), as_jet_fn(stages[k][1])
        delta = 2.0 ** (-(k + 1))   # delta for glue k-1 is 2^-(k+2) with index k-1
        b = max(a_k, cur + 1.0)
        eps_k = _ScaledEps(eps, 0.5 * inflation)
        try:
            res = glue_pair(f, current, g_k, a0, cur, b, k - 1,
                            eps_k, delta, horizon, cfg)
        except GlueError as e:
            raise GlueError(str(e), stage=k) from e
        cert.extend(res.certificate)
        current = res.g
        inflation *= (1.0 + delta)
        cur = res.bprime
        starts.append(res.bprime)
    cert.add("inflation product < 2", inflation, 2.0,
             note="product of (1+delta_k)")

    for j in range(len(stages)):
        r, pts, _ = pointwise_ratio(_Diff(f, current), eps,
                                    CompactSet.interval(starts[j], horizon),
                                    j, cfg)
        cert.add(f"final: |(f-g)^(i)| < eps on [a'_{j},horizon], i<={j}",
                 r, 1.0, pts)
    return ChainResult(current, starts, cert)


class _ScaledEps(JetFn):
    def __init__(self, eps, factor):
        self.eps = eps
        self.factor = float(factor)

    def jets(self, ts, m):
        return self.factor * self.eps.jets(ts, m)

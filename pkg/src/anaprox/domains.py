"""Complex domains of controlled extension and entire evaluation.

Each built stage extends to an entire function; off the real axis its
modulus is controlled by H_m exp(-lam_m rho) on domains where the
Gaussian kernel still decays, and the analytic-control schedule c_m
makes the unbuilt tail summable.  This module provides the domain
predicates, the truncation tail bookkeeping, the symmetric exhaustion
with shrinking gaps, and the front end producing entire approximants on
the whole line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certs import Certificate, pointwise_ratio
from .errors import AnaproxError, EvaluationDomainError
from .jetfn import JetFn, as_jet_fn
from .seminorm import CompactSet, GridConfig, seminorm
from .whitney import Exhaustion, ToleranceSchedule, WhitneyApproximant, \
    build, normalize_schedule

__all__ = ["DomainSpec", "TailBound", "rho", "contains", "eval_entire",
           "carleman_exhaustion", "carleman", "EntireHandle",
           "merge_exhaustion_points"]


def rho(ex: Exhaustion, n: int) -> float:
    """rho_n = half the squared smaller gap at level n."""
    if n + 1 >= len(ex):
        raise AnaproxError(f"exhaustion level {n + 1} missing")
    ga = ex.a[n] - ex.a[n + 1]
    gb = ex.b[n + 1] - ex.b[n]
    return 0.5 * min(ga * ga, gb * gb)


@dataclass(frozen=True)
class DomainSpec:
    kind: str                     # "Un" | "V" | "Sector"
    n: int | None = None
    ex: Exhaustion | None = None
    alpha: float = -math.inf
    beta: float = math.inf
    a: float = 0.0

    @classmethod
    def Un(cls, n: int, ex: Exhaustion):
        return cls("Un", n=n, ex=ex)

    @classmethod
    def V(cls, alpha: float, beta: float):
        return cls("V", alpha=float(alpha), beta=float(beta))

    @classmethod
    def Sector(cls, a: float):
        return cls("Sector", a=float(a))


def contains(d: DomainSpec, z: complex) -> bool:
    """Exact membership predicate in the defining arithmetic."""
    z = complex(z)
    x, y = z.real, z.imag
    if d.kind == "Un":
        ex, n = d.ex, d.n
        r = rho(ex, n)
        an1, bn1 = ex.a[n + 1], ex.b[n + 1]
        return (an1 < x < bn1
                and ((z - an1) ** 2).real > r
                and ((z - bn1) ** 2).real > r)
    if d.kind == "V":
        return (d.alpha < x < d.beta
                and abs(y) < x - d.alpha and abs(y) < d.beta - x)
    if d.kind == "Sector":
        return x > d.a and abs(y) < x - d.a
    raise AnaproxError(f"unknown domain kind {d.kind!r}")


def _point_rho(d: DomainSpec, z: complex, max_level=None) -> float:
    """Decay exponent available at z: the largest rho_n with z in U_n,
    or the squared-and-halved margin for V/Sector."""
    z = complex(z)
    if d.kind == "Un":
        ex = d.ex
        top = len(ex) - 2 if max_level is None else max_level
        best = -1.0
        for n in range(top + 1):
            if contains(DomainSpec.Un(n, ex), z):
                best = max(best, rho(ex, n))
        if best < 0:
            raise EvaluationDomainError(f"{z} lies in no U_n of the family")
        return best
    x, y = z.real, z.imag
    if d.kind == "V":
        m = min(x - d.alpha - abs(y), d.beta - x - abs(y))
    elif d.kind == "Sector":
        m = x - d.a - abs(y)
    else:
        raise AnaproxError(f"unknown domain kind {d.kind!r}")
    if m <= 0:
        raise EvaluationDomainError(f"{z} outside domain")
    return 0.5 * m * m


@dataclass
class TailBound:
    N: int
    rho: float
    built_sum: float       # sum over built stages beyond N of H_m e^(-lam_m rho)
    remainder: float       # c_m majorant for unbuilt stages, when valid
    policy: str            # "c_m majorant" or "qualitative only"

    @property
    def bound(self):
        if self.policy != "c_m majorant":
            return math.inf
        return self.built_sum + self.remainder


def _tail(appr: WhitneyApproximant, rho_z: float, N: int | None = None):
    if N is None:
        N = appr.N
    built = sum(appr.Hs[m] * math.exp(-appr.lams[m] * rho_z)
                for m in range(N + 1, appr.N + 1))
    # beyond built stages only the schedule c_m = analytic-control targets
    # remain; the majorant H_m e^(-lam_m rho) <= c_m needs rho > 1/m
    if appr.cs[0] is None:
        raise AnaproxError("approximant lacks analytic control data")
    if rho_z > 1.0 / (appr.N + 1):
        remainder = 2.0 ** (-appr.N)   # sum of c_m = 2^-m for m > N
        policy = "c_m majorant"
    else:
        remainder = math.inf
        policy = "qualitative only"
    return TailBound(N, rho_z, built, remainder, policy)


def eval_entire(appr: WhitneyApproximant, z: complex,
                d: DomainSpec) -> tuple[complex, TailBound]:
    """Sum of the built entire stages at z, with a truncation tail bound."""
    z = complex(z)
    if not contains(d, z):
        raise EvaluationDomainError(f"{z} outside the requested domain")
    if appr.cs[0] is None:
        raise AnaproxError("approximant lacks analytic control data")
    value = sum(g.eval_complex(z) for g in appr.gs)
    rho_z = _point_rho(d, z)
    return value, _tail(appr, rho_z)


def carleman_exhaustion(levels: int) -> Exhaustion:
    """Symmetric exhaustion b_n = log(n+1), a_n = -b_n; gaps shrink to 0."""
    if levels < 2:
        raise AnaproxError("need at least 2 levels")
    b = [math.log(n + 1) for n in range(levels)]
    return Exhaustion([-x for x in b], b, flavor="two-sided")


def merge_exhaustion_points(b_list, b: float, count: int):
    """Sorted union of given boundary points with b + log(1..count)."""
    pts = sorted(set(float(x) for x in b_list)
                 | {b + math.log(k) for k in range(1, count + 1)})
    return pts


class EntireHandle:
    """Complex evaluation of a built approximant over its U_n family."""

    def __init__(self, appr: WhitneyApproximant):
        if appr.cs[0] is None:
            raise AnaproxError("approximant lacks analytic control data")
        self.appr = appr

    def __call__(self, z: complex, d: DomainSpec | None = None):
        if d is None:
            d = DomainSpec.Un(0, self.appr.ex)
            # membership is re-derived across the whole family
            value = sum(g.eval_complex(complex(z)) for g in self.appr.gs)
            rho_z = _point_rho(d, z)
            return value, _tail(self.appr, rho_z)
        return eval_entire(self.appr, z, d)


def carleman(f, eps_fn, r: int, N: int, grid_cfg: GridConfig | None = None,
             quad_cfg=None):
    """Entire approximant of f with |(f-g)^(k)| <= eps on the covered window.

    Runs the staged pipeline with analytic control on the logarithmic
    exhaustion; the certificate checks orders k <= r against the
    pointwise tolerance on [-log(N-1), log(N-1)].
    """
    if N < 3:
        raise AnaproxError("need N >= 3 for a nonempty certified window")
    f = as_jet_fn(f)
    eps_fn = as_jet_fn(eps_fn)
    stages = N - 2
    ex = carleman_exhaustion(stages + 5)
    eps_sched = []
    for n in range(stages + 1):
        lo, hi = ex.K(n + 1)
        vals = eps_fn.jets(np.linspace(lo, hi, 257), 0)[:, 0]
        if np.any(vals <= 0):
            raise AnaproxError("tolerance must be positive")
        eps_sched.append(float(vals.min()))
    sched = normalize_schedule(eps_sched, [r] * (stages + 1))
    appr, cert = build(f, ex, sched, stages,
                       analytic_ctrl=lambda n: 2.0 ** (-n),
                       grid_cfg=grid_cfg, quad_cfg=quad_cfg)
    w = math.log(N - 1)
    ratio, pts, _ = pointwise_ratio(_Diff(f, appr), eps_fn,
                                    CompactSet.interval(-w, w), r, grid_cfg)
    cert.checks.add(
        f"carleman window: |(f-g)^(k)| <= eps on [-log({N - 1}), log({N - 1})], k <= {r}",
        ratio, 1.0, pts)
    return appr, EntireHandle(appr), cert


class _Diff(JetFn):
    def __init__(self, f, g):
        self.f = as_jet_fn(f)
        self.g = as_jet_fn(g)

    def jets(self, ts, m):
        return self.f.jets(ts, m) - self.g.jets(ts, m)

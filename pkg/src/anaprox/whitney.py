"""Staged construction of real-analytic approximants with derivative control.

The pipeline exhausts the domain by compact intervals, cuts the residual
down to the current annulus with a smooth cutoff, mollifies the cut
residual at a sharpness chosen by search, and adds the stages.  A delta
schedule tied to cutoff seminorm bounds makes the per-annulus error sum
to less than the requested tolerance; every inequality the argument
relies on is re-measured on grids and recorded in a certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bump import CutoffFamily, build_cutoffs
from .certs import Certificate, pointwise_ratio
from .errors import AnaproxError, CertificateError, EvaluationDomainError, \
    GlueError, LambdaSearchError
from .fnspec import PiecewiseFn
from .glue import glue_chain
from .jetfn import CutoffProductFn, JetFn, LeftExtendedFn, SumFn, as_jet_fn
from .mollify import MollifiedFn, QuadratureCfg, find_lambda
from .seminorm import CompactSet, GridConfig, seminorm

__all__ = ["Exhaustion", "ToleranceSchedule", "WhitneyApproximant",
           "ErrorCertificate", "normalize_schedule", "choose_deltas",
           "build", "ray_approx", "pointwise_adaptive", "separate",
           "eventual_approx"]


@dataclass(frozen=True)
class Exhaustion:
    """Nested compacts K_n = [a_n, b_n] with annuli L_n = K_{n+1} \\ K_n."""

    a: tuple
    b: tuple
    flavor: str = "two-sided"

    def __init__(self, a, b, flavor="two-sided"):
        a = tuple(float(x) for x in a)
        b = tuple(float(x) for x in b)
        if len(a) != len(b) or len(a) < 2:
            raise AnaproxError("exhaustion needs matching lists, length >= 2")
        if any(y >= x for x, y in zip(a, a[1:])):
            raise AnaproxError("a must be strictly decreasing")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise AnaproxError("b must be strictly increasing")
        if a[0] > b[0]:
            raise AnaproxError("need a_0 <= b_0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "flavor", flavor)

    def __len__(self):
        return len(self.a)

    def K(self, n):
        return (self.a[n], self.b[n])

    def L(self, n) -> CompactSet:
        return CompactSet([(self.a[n + 1], self.a[n]),
                           (self.b[n], self.b[n + 1])])

    @property
    def gaps_shrink(self) -> bool:
        """Cor. A.5 style hypothesis; advisory for domain control."""
        ga = [x - y for x, y in zip(self.a, self.a[1:])]
        gb = [y - x for x, y in zip(self.b, self.b[1:])]
        return all(u >= v for u, v in zip(ga, ga[1:])) and \
            all(u >= v for u, v in zip(gb, gb[1:]))


@dataclass(frozen=True)
class ToleranceSchedule:
    eps: tuple
    r: tuple
    normalized: bool = False

    def __init__(self, eps, r, normalized=False):
        eps = tuple(float(e) for e in eps)
        r = tuple(int(k) for k in r)
        if len(eps) != len(r):
            raise AnaproxError("eps and r schedules must have equal length")
        if any(e <= 0 for e in eps):
            raise AnaproxError("tolerances must be positive")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "normalized", bool(normalized))

    def __len__(self):
        return len(self.eps)


def normalize_schedule(eps, r, r_global=None) -> ToleranceSchedule:
    """eps_n -> min(eps_n, 1/(n+1)); r_n -> running max."""
    eps = list(eps)
    r = list(r)
    if r_global is not None and any(k > r_global for k in r):
        raise AnaproxError("stage order exceeds global order")
    eps2 = [min(e, 1.0 / (n + 1)) for n, e in enumerate(eps)]
    r2 = list(np.maximum.accumulate(r)) if r else []
    return ToleranceSchedule(eps2, r2, normalized=True)


def choose_deltas(sched: ToleranceSchedule, M, N: int):
    """Stage tolerances with 2 delta_{m+1} <= delta_m and
    sum_{m>=n} delta_m M_{m+1} <= eps_n / 4 (geometric majorization)."""
    M = list(M)
    if len(M) < N + 2:
        raise AnaproxError(f"need M_0..M_{N + 1}")
    deltas = []
    for m in range(N + 1):
        cap = min(sched.eps[n] / (8.0 * M[m + 1] * 2.0 ** (m - n))
                  for n in range(m + 1))
        if m > 0:
            cap = min(cap, deltas[-1] / 2.0)
        deltas.append(cap)
    return deltas


class _ResidualFn(JetFn):
    """f minus the partial sum of built stages."""

    def __init__(self, f, gs):
        self.f = f
        self.gs = list(gs)

    def jets(self, ts, m):
        out = self.f.jets(ts, m).copy()
        for g in self.gs:
            out -= g.jets(ts, m)
        return out


@dataclass
class WhitneyApproximant(JetFn):
    N: int
    ex: Exhaustion
    sched: ToleranceSchedule
    phis: CutoffFamily
    hs: list
    lams: list
    gs: list
    deltas: list
    Ms: list
    Hs: list
    cs: list

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((ts.shape[0], m + 1))
        for g in self.gs:
            out += g.jets(ts, m)
        return out

    def stage_partial(self, n):
        """Partial sum g_0 + ... + g_n."""
        return SumFn(self.gs[:n + 1])


@dataclass
class AnnulusRecord:
    n: int
    region: CompactSet
    measured: float
    target: float
    passed: bool
    grid_points: int

    def to_document(self):
        return {"n": self.n,
                "region": [list(iv) for iv in self.region.intervals],
                "measured": self.measured, "target": self.target,
                "passed": bool(self.passed), "grid_points": self.grid_points}


@dataclass
class ErrorCertificate:
    annuli: list
    checks: Certificate
    covered_through: int
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(a.passed for a in self.annuli) and self.checks.passed

    def to_document(self):
        return {"passed": self.passed,
                "covered_through": self.covered_through,
                "annuli": [a.to_document() for a in self.annuli],
                "checks": self.checks.to_document()["checks"],
                "notes": self.notes}


def _stage_lambda(h, bands, r_n, delta_n, S, n, analytic_ctrl,
                  quad_cfg, grid_cfg, cert, hull):
    res = find_lambda(h, bands, r_n, delta_n, S=S, cfg=quad_cfg,
                      grid_cfg=grid_cfg)
    lam, g = res.lam, res.mollified
    H_n = 0.0
    if analytic_ctrl is not None:
        c_n = analytic_ctrl(n)
        width = hull[1] - hull[0]
        hn_sup = seminorm(h, CompactSet.interval(*hull), 0, grid_cfg).value
        while True:
            H_n = 2.0 * math.sqrt(lam / math.pi) * hn_sup * width
            if H_n * math.exp(-lam / max(1, n)) <= c_n:
                break
            lam *= 2.0
            g = MollifiedFn(h, bands, lam, quad_cfg)
        cert.add(f"analytic ctrl stage {n}: H_n exp(-lam_n/max(1,n)) <= c_n",
                 H_n * math.exp(-lam / max(1, n)), c_n)
        if lam != res.lam:
            # re-measure the delta certificate at the raised sharpness
            est = seminorm(_ResidualFn(as_jet_fn(h), [g]), S, r_n, grid_cfg)
        else:
            est = res.measured
    else:
        est = res.measured
    cert.add(f"lambda cert stage {n}: ||g_n - h_n||_{{r_n}} < delta_n",
             est.value, delta_n, est.grid_points)
    return lam, g, H_n


def build(f, ex: Exhaustion, sched: ToleranceSchedule, N: int,
          analytic_ctrl=None, grid_cfg: GridConfig | None = None,
          quad_cfg: QuadratureCfg | None = None,
          cert_regions=None):
    """Run the staged pipeline for stages 0..N.

    analytic_ctrl, when given, is a rule n -> c_n; stage sharpness is
    raised until H_n exp(-lam_n / max(1, n)) <= c_n, which is what makes
    the summed tail controllable on complex domains.
    """
    if len(ex) < N + 5:
        raise AnaproxError(f"exhaustion needs {N + 5} levels for N={N}")
    if len(sched) < N + 1:
        raise AnaproxError("schedule shorter than stage count")
    if not sched.normalized:
        sched = normalize_schedule(sched.eps, sched.r)
    f = as_jet_fn(f)
    if isinstance(f, PiecewiseFn):
        # junction orders were verified at construction; here they must
        # also cover the per-stage demands
        for n in range(N + 1):
            lo, hi = ex.K(n + 1)
            for bp in f.breakpoints:
                if lo < bp < hi and \
                        int(f.junction_orders.get(bp, 0)) < sched.r[n]:
                    raise AnaproxError(
                        f"f is not declared C^{sched.r[n]} at breakpoint "
                        f"{bp} inside K_{n + 1}")
    quad_cfg = quad_cfg or QuadratureCfg(check=False)
    cert = Certificate()

    phis = build_cutoffs(ex, N + 1)
    r_of = lambda n: sched.r[min(n, N)]
    Ms = []
    for n in range(N + 2):
        rn = r_of(n)
        hull = phis.support_hull(n)
        norm = seminorm(phis[n], CompactSet.interval(*hull), rn, grid_cfg)
        Ms.append(1.0 + 2.0 ** rn * norm.value)
    deltas = choose_deltas(sched, Ms, N)

    # eq:WAP,0 by direct summation on the truncated schedule
    for n in range(N + 1):
        s = sum(deltas[m] * Ms[m + 1] for m in range(n, N + 1))
        cert.add(f"delta schedule: sum_m delta_m M_(m+1) <= eps_{n}/4",
                 s, sched.eps[n] / 4.0)
    for m in range(N):
        cert.add_flag(f"delta schedule: 2 delta_{m + 1} <= delta_{m}",
                      2.0 * deltas[m + 1] <= deltas[m])

    gs, hs, lams, Hs = [], [], [], []
    cs = [analytic_ctrl(n) if analytic_ctrl else None for n in range(N + 1)]
    for n in range(N + 1):
        rn = sched.r[n]
        residual = _ResidualFn(f, gs)
        h_n = CutoffProductFn(phis[n], residual)
        bands = phis.support_bands(n)
        hull = phis.support_hull(n)
        S = CompactSet.interval(ex.a[n + 3], ex.b[n + 3])
        lam, g_n, H_n = _stage_lambda(h_n, bands, rn, deltas[n], S, n,
                                      analytic_ctrl, quad_cfg, grid_cfg,
                                      cert, hull)
        hs.append(h_n)
        lams.append(lam)
        gs.append(g_n)
        Hs.append(H_n)

    approx = WhitneyApproximant(N, ex, sched, phis, hs, lams, gs,
                                deltas, Ms, Hs, cs)

    # staged inequalities the final bound rests on
    for n in range(N):
        est = seminorm(gs[n + 1], CompactSet.interval(*ex.K(n)),
                       sched.r[n + 1], grid_cfg)
        cert.add(f"eq:WAP,1 n={n}: ||g_(n+1)||_(K_n; r_(n+1)) < delta_(n+1)",
                 est.value, deltas[n + 1], est.grid_points)
        est = seminorm(gs[n + 1], CompactSet.interval(*ex.K(n + 1)),
                       sched.r[n], grid_cfg)
        cert.add(f"eq:WAP,3 n={n}: ||g_(n+1)||_(K_(n+1); r_n) <= 2 delta_n M_(n+1)",
                 est.value, 2.0 * deltas[n] * Ms[n + 1], est.grid_points)
    for n in range(N + 1):
        est = seminorm(_ResidualFn(f, gs[:n + 1]), ex.L(n), sched.r[n],
                       grid_cfg)
        cert.add(f"eq:WAP,2 n={n}: ||f - (g_0+..+g_n)||_(L_n; r_n) < delta_n",
                 est.value, deltas[n], est.grid_points)
    for n in range(N):
        tail = sum(2.0 * deltas[m - 1] * Ms[m] for m in range(n + 1, N + 1))
        cert.add(f"truncation proxy n={n}: sum 2 delta_(m-1) M_m <= eps_{n}/2",
                 tail, sched.eps[n] / 2.0)

    regions = cert_regions or [ex.L(n) for n in range(N)]
    annuli = []
    for n, region in enumerate(regions):
        est = seminorm(_ResidualFn(f, gs), region, sched.r[n], grid_cfg)
        target = sched.eps[n]
        annuli.append(AnnulusRecord(n, region, est.value, target,
                                    est.value < target, est.grid_points))
    notes = [f"stages built: {N + 1}",
             f"region covered by certificate: up to annulus {len(regions) - 1}"]
    return approx, ErrorCertificate(annuli, cert, len(regions) - 1, notes)


def _synth_ray_exhaustion(b, levels, width=1.0):
    b = [float(x) for x in b]
    if len(b) < levels:
        raise AnaproxError(f"ray needs {levels} boundary points")
    a = [b[0] - (1.0 - 2.0 ** (-n)) * width for n in range(levels)]
    return Exhaustion(a, b[:levels], flavor="ray")


def _extend_left(f, b0, r0):
    """First-piece expression when it evaluates cleanly left of b0,
    else the frozen order-r0 polynomial jet at b0."""
    if not isinstance(f, PiecewiseFn):
        return as_jet_fn(f), "none"
    probe = np.linspace(b0 - 1.5, b0, 7)
    try:
        ext = LeftExtendedFn(f, b0, "expression")
        ext.jets(probe, r0)
        if np.all(np.isfinite(ext.jets(probe, r0))):
            return ext, "expression"
    except (EvaluationDomainError, FloatingPointError, ValueError):
        pass
    return LeftExtendedFn(f, b0, "taylor", r0), "taylor"


def ray_approx(f, b, eps, r, N: int | None = None,
               analytic_ctrl=None, grid_cfg=None, quad_cfg=None):
    """Approximation along a ray [b_0, b_last] with per-annulus orders.

    Synthesizes the leftward exhaustion levels, extends f left of b_0,
    and certifies on the annuli [b_n, b_(n+1)] only.
    """
    eps = list(eps)
    r = list(r)
    if N is None:
        N = min(len(eps), len(r)) - 1
    levels = N + 5
    ex = _synth_ray_exhaustion(b, levels)
    sched = normalize_schedule(eps[:N + 1], r[:N + 1])
    fext, ext_mode = _extend_left(f, float(b[0]), sched.r[0])
    regions = [CompactSet.interval(float(b[n]), float(b[n + 1]))
               for n in range(N)]
    approx, cert = build(fext, ex, sched, N, analytic_ctrl,
                         grid_cfg, quad_cfg, cert_regions=regions)
    cert.notes.append(f"left extension: {ext_mode}")
    return approx, cert


def pointwise_adaptive(f, eps_fn, b: float, horizon: float, r: int,
                       grid_cfg=None, quad_cfg=None):
    """Approximant with |(f-g)^(k)(t)| < eps(t) for k <= min(r, 1/eps(t)).

    Derives a per-annulus schedule from the pointwise tolerance and runs
    the ray pipeline, then checks the pointwise family on a sample grid.
    """
    eps_fn = as_jet_fn(eps_fn)
    N = max(1, int(math.ceil(horizon - b)))
    bs = [b + n for n in range(N + 5)]
    eps_sched, r_sched = [], []
    for n in range(N + 1):
        ts = np.linspace(bs[n], bs[n + 1], 257)
        vals = eps_fn.jets(ts, 0)[:, 0]
        if np.any(vals <= 0):
            raise AnaproxError("tolerance must be positive on the ray")
        emin = float(vals.min())
        eps_sched.append(emin)
        r_sched.append(min(r, int(math.floor(1.0 / emin))))
    approx, cert = ray_approx(f, bs, eps_sched, r_sched, N,
                              grid_cfg=grid_cfg, quad_cfg=quad_cfg)

    fj = as_jet_fn(f)
    grid = np.linspace(b, min(horizon, bs[N]), 513)
    kmax = max(r_sched) if r_sched else 0
    diff = np.abs(fj.jets(grid, kmax) - approx.jets(grid, kmax))
    evals = eps_fn.jets(grid, 0)[:, 0]
    worst = 0.0
    for i, t in enumerate(grid):
        klim = min(r, int(math.floor(1.0 / evals[i])), kmax)
        worst = max(worst, float(diff[i, :klim + 1].max() / evals[i]))
    cert.checks.add("pointwise: |(f-g)^(k)(t)| < eps(t), k <= min(r, 1/eps(t))",
                    worst, 1.0, grid.size)
    return approx, cert


class _Midpoint(JetFn):
    def __init__(self, f, g):
        self.f = as_jet_fn(f)
        self.g = as_jet_fn(g)

    def jets(self, ts, m):
        return 0.5 * (self.f.jets(ts, m) + self.g.jets(ts, m))


class _HalfGap(JetFn):
    def __init__(self, f, g, factor):
        self.f = as_jet_fn(f)
        self.g = as_jet_fn(g)
        self.factor = factor

    def jets(self, ts, m):
        return self.factor * (self.g.jets(ts, m) - self.f.jets(ts, m))


def separate(f, g, b: float, horizon: float, grid_cfg=None, quad_cfg=None):
    """Analytic y with f < y < g on [b, horizon], given a strict gap."""
    fj, gj = as_jet_fn(f), as_jet_fn(g)
    ts = np.linspace(b, horizon, 2049)
    gap = gj.jets(ts, 0)[:, 0] - fj.jets(ts, 0)[:, 0]
    if gap.min() <= 0:
        raise AnaproxError("need f < g strictly on the ray")
    z = _Midpoint(fj, gj)
    tol = _HalfGap(fj, gj, 0.5 * 0.9)
    y, cert = pointwise_adaptive(z, tol, b, horizon, r=0,
                                 grid_cfg=grid_cfg, quad_cfg=quad_cfg)
    yv = y.jets(ts, 0)[:, 0]
    fv = fj.jets(ts, 0)[:, 0]
    gv = gj.jets(ts, 0)[:, 0]
    strict = bool(np.all(fv < yv) and np.all(yv < gv))
    cert.checks.add_flag("separation: f < y < g strictly on sample grid",
                         strict)
    return y, cert


def eventual_approx(f, ladder, eps_fn, K: int, horizon: float,
                    grid_cfg=None, quad_cfg=None):
    """Analytic g with |(f-g)^(j)| < eps past reported stage starts, j <= K.

    ladder[n] is where f becomes C^n.  Each stage approximates the
    order-n smooth extension of f from ladder[n] to target eps/2, and
    the stages are blended with total inflation below 2.
    """
    ladder = [float(x) for x in ladder]
    if len(ladder) < K + 1:
        raise AnaproxError(f"ladder needs {K + 1} entries")
    f = as_jet_fn(f)
    eps_fn = as_jet_fn(eps_fn)
    stages = []
    for n in range(K + 1):
        a_n = ladder[n]
        if isinstance(f, PiecewiseFn):
            fn = LeftExtendedFn(f, a_n, "taylor", n)
        else:
            fn = f
        half = _ScaledFn(eps_fn, 0.5)
        g_n, cert_n = pointwise_adaptive_fixed_order(
            fn, half, a_n, horizon, n, grid_cfg, quad_cfg)
        if not cert_n.passed:
            raise GlueError("stage approximant failed its certificate",
                            stage=n)
        stages.append((a_n, g_n))
    chain = glue_chain(f, stages, eps_fn, horizon, grid_cfg)
    return chain.g, chain


class _ScaledFn(JetFn):
    def __init__(self, fn, factor):
        self.fn = fn
        self.factor = factor

    def jets(self, ts, m):
        return self.factor * self.fn.jets(ts, m)


def pointwise_adaptive_fixed_order(f, eps_fn, b: float, horizon: float,
                                   order: int, grid_cfg=None, quad_cfg=None):
    """Ray approximation demanding a fixed derivative order everywhere."""
    eps_fn = as_jet_fn(eps_fn)
    N = max(1, int(math.ceil(horizon - b)))
    bs = [b + n for n in range(N + 5)]
    eps_sched = []
    for n in range(N + 1):
        ts = np.linspace(bs[n], bs[n + 1], 257)
        vals = eps_fn.jets(ts, 0)[:, 0]
        if np.any(vals <= 0):
            raise AnaproxError("tolerance must be positive on the ray")
        eps_sched.append(float(vals.min()))
    return ray_approx(f, bs, eps_sched, [order] * (N + 1), N,
                      grid_cfg=grid_cfg, quad_cfg=quad_cfg)

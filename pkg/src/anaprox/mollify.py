"""Gaussian smoothing operator and its sharpness search.

``MollifiedFn`` represents  t -> sqrt(lam/pi) * integral h(s) exp(-lam (s-t)^2) ds
for a compactly supported source h.  Quadrature is composite Gauss-Legendre
over a fixed panelization of the support bands, with panels sized well below
the kernel width; per evaluation point only the panels inside the kernel
window [t - R, t + R] contribute, the rest being below the tail tolerance.

Derivatives are evaluated by moving them onto the source (the transfer
identity g^(k) = I_lam(h^(k))); moving them onto the kernel instead
(Hermite-weighted integrals) is available for orders beyond the source's
smoothness but the pipeline never needs it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LambdaSearchError, QuadratureError
from .jetfn import JetFn, as_jet_fn
from .seminorm import CompactSet, GridConfig, SeminormEstimate, seminorm

__all__ = ["QuadratureCfg", "MollifiedFn", "mollify", "eval_real_jet",
           "eval_complex", "find_lambda", "LambdaResult",
           "convergence_profile"]


@dataclass(frozen=True)
class QuadratureCfg:
    nodes_per_panel: int = 16
    panel_scale: float = 1.0     # multiplies panel count (budget scaling)
    tail_tol: float = 1e-14     # discarded kernel-tail mass, relative
    check_rel_tol: float = 1e-10
    check: bool = True           # panel-doubling convergence check

    def scaled(self, factor: float) -> "QuadratureCfg":
        return QuadratureCfg(self.nodes_per_panel, self.panel_scale * factor,
                             self.tail_tol, self.check_rel_tol, self.check)


def _normalize_bands(support):
    if isinstance(support, CompactSet):
        return list(support.intervals)
    support = list(support)
    if support and isinstance(support[0], (int, float)):
        support = [tuple(support)]
    bands = [(float(u), float(v)) for u, v in support]
    for u, v in bands:
        if not (math.isfinite(u) and math.isfinite(v) and u < v):
            raise QuadratureError(f"unbounded or empty support band ({u}, {v})")
    return sorted(bands)


class _Panelization:
    """Fixed composite Gauss-Legendre panels over the support bands.

    Source jets at panel nodes are cached densely per band; panels are
    evaluated lazily the first time a kernel window touches them.
    """

    def __init__(self, bands, lam, nodes_per_panel, panel_scale):
        width = min(1.0, 1.0 / math.sqrt(lam)) / 4.0 / panel_scale
        self.bands = bands
        self.counts = []
        self.widths = []
        for u, v in bands:
            n = max(1, int(math.ceil((v - u) / width)))
            self.counts.append(n)
            self.widths.append((v - u) / n)
        x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
        self.gl_x = x
        self.gl_w = w
        self.nodes_per_panel = nodes_per_panel
        # jets cached in fixed-size panel chunks so that huge panel counts
        # (large lambda) never allocate beyond the touched windows;
        # key (band, chunk) -> [jets (chunk_len*npp, order+1), filled mask]
        self.cache: dict[tuple, list] = {}

    _CHUNK = 1 << 14

    def range_nodes(self, band_i, lo, hi):
        """Node positions for panels lo..hi-1 of one band (computed, not stored)."""
        u = self.bands[band_i][0]
        w = self.widths[band_i]
        centers = u + (np.arange(lo, hi) + 0.5) * w
        return (centers[:, None] + 0.5 * w * self.gl_x[None, :]).ravel()

    def range_weights(self, band_i, lo, hi):
        w = self.widths[band_i]
        return np.tile(0.5 * w * self.gl_w, hi - lo)

    def _chunk_entry(self, band_i, chunk, m):
        key = (band_i, chunk)
        entry = self.cache.get(key)
        if entry is None or entry[0].shape[1] < m + 1:
            clen = min(self._CHUNK, self.counts[band_i] - chunk * self._CHUNK)
            arr = np.empty((clen * self.nodes_per_panel, m + 1))
            # widening the order invalidates partially filled rows
            entry = [arr, np.zeros(clen, dtype=bool)]
            self.cache[key] = entry
        return entry

    def ensure_cached(self, source, band_i, lo, hi, m):
        """Fill the source-jet cache for panels lo..hi-1 to order >= m."""
        npp = self.nodes_per_panel
        C = self._CHUNK
        todo_all = []
        entries = []
        for chunk in range(lo // C, (hi - 1) // C + 1):
            entry = self._chunk_entry(band_i, chunk, m)
            base = chunk * C
            c_lo = max(lo, base) - base
            c_hi = min(hi, base + entry[1].size) - base
            todo = np.nonzero(~entry[1][c_lo:c_hi])[0] + c_lo
            if todo.size:
                todo_all.append(todo + base)
                entries.append((entry, todo))
        if not todo_all:
            return
        todo_glob = np.concatenate(todo_all)
        u = self.bands[band_i][0]
        w = self.widths[band_i]
        centers = u + (todo_glob + 0.5) * w
        pts = (centers[:, None] + 0.5 * w * self.gl_x[None, :]).ravel()
        # fill every touched chunk to its full cached width
        need = max(entry[0].shape[1] for entry, _ in entries) - 1
        jets = source.jets(pts, need)
        pos = 0
        for entry, todo in entries:
            arr, filled = entry
            rows = (todo[:, None] * npp + np.arange(npp)[None, :]).ravel()
            arr[rows, :] = jets[pos:pos + todo.size * npp, :arr.shape[1]]
            filled[todo] = True
            pos += todo.size * npp

    def range_jets(self, band_i, lo, hi, m):
        npp = self.nodes_per_panel
        C = self._CHUNK
        c0, c1 = lo // C, (hi - 1) // C
        if c0 == c1:
            arr = self.cache[(band_i, c0)][0]
            base = c0 * C
            return arr[(lo - base) * npp:(hi - base) * npp, :m + 1]
        parts = []
        for chunk in range(c0, c1 + 1):
            arr = self.cache[(band_i, chunk)][0]
            base = chunk * C
            clen = self.cache[(band_i, chunk)][1].size
            s = max(lo, base) - base
            e = min(hi, base + clen) - base
            parts.append(arr[s * npp:e * npp, :m + 1])
        return np.concatenate(parts)


class MollifiedFn(JetFn):
    """Gaussian mollification of a compactly supported jet-evaluable source."""

    def __init__(self, source, support, lam: float,
                 cfg: QuadratureCfg | None = None, source_order=math.inf):
        if lam <= 0:
            raise QuadratureError("lambda must be positive")
        self.source = as_jet_fn(source)
        self.bands = _normalize_bands(support)
        self.support = (self.bands[0][0], self.bands[-1][1])
        self.lam = float(lam)
        self.cfg = cfg or QuadratureCfg()
        self.source_order = source_order
        self._pan = _Panelization(self.bands, self.lam,
                                  self.cfg.nodes_per_panel, self.cfg.panel_scale)
        self._pan2 = None  # doubled panels, built on first checked evaluation
        total = sum(v - u for u, v in self.bands)
        self._norm = math.sqrt(self.lam / math.pi)
        self._radius = math.sqrt(
            max(1.0, math.log(max(total, 1e-6) * self._norm / self.cfg.tail_tol))
            / self.lam)

    # -- real evaluation -------------------------------------------------

    def _integrate(self, pan, ts, m):
        out = np.zeros((ts.shape[0], m + 1))
        R = self._radius
        npp = pan.nodes_per_panel
        for band_i in range(len(self.bands)):
            u = self.bands[band_i][0]
            n = pan.counts[band_i]
            w = pan.widths[band_i]
            lo = np.clip(np.floor((ts - R - u) / w), 0, n).astype(np.int64)
            hi = np.clip(np.ceil((ts + R - u) / w), 0, n).astype(np.int64)
            sel = np.nonzero(hi > lo)[0]
            if sel.size == 0:
                continue
            order = sel[np.argsort(lo[sel], kind="stable")]
            lo_s, hi_s = lo[order], hi[order]
            # merge overlapping windows into contiguous panel runs
            run_end = np.maximum.accumulate(hi_s)
            breaks = np.nonzero(lo_s[1:] > run_end[:-1])[0] + 1
            starts = np.concatenate([[0], breaks])
            ends = np.concatenate([breaks, [lo_s.size]])
            for s0, s1 in zip(starts, ends):
                rs = int(lo_s[s0])
                re = int(run_end[s1 - 1])
                pan.ensure_cached(self.source, band_i, rs, re, m)
                S_run = pan.range_nodes(band_i, rs, re)
                W_run = pan.range_weights(band_i, rs, re)
                H_run = pan.range_jets(band_i, rs, re, m)
                idx = order[s0:s1]
                start = (lo[idx] - rs) * npp
                q = (hi[idx] - lo[idx]) * npp
                for qv in np.unique(q):
                    grp = idx[q == qv]
                    st = (lo[grp] - rs) * npp
                    block = 1 + (1 << 22) // max(int(qv), 1)
                    for i0 in range(0, grp.size, block):
                        gi = grp[i0:i0 + block]
                        cols = st[i0:i0 + block, None] + np.arange(qv)[None, :]
                        S = S_run[cols]
                        K = np.exp(-self.lam * (S - ts[gi, None]) ** 2)
                        K *= W_run[cols]
                        out[gi] += np.einsum("pq,pqc->pc", K, H_run[cols])
        return self._norm * out

    def jets(self, ts, m):
        ts = np.asarray(ts, dtype=float)
        if m > self.source_order:
            return self._jets_hermite(ts, m)
        base = self._integrate(self._pan, ts, m)
        if not self.cfg.check:
            return base
        if self._pan2 is None:
            self._pan2 = _Panelization(self.bands, self.lam,
                                       self.cfg.nodes_per_panel,
                                       self.cfg.panel_scale * 2.0)
        fine = self._integrate(self._pan2, ts, m)
        scale = max(float(np.max(np.abs(fine))), 1e-300)
        if float(np.max(np.abs(fine - base))) > self.cfg.check_rel_tol * scale:
            raise QuadratureError(
                "panel-doubling disagreement above tolerance "
                f"(lambda={self.lam:g})")
        return fine

    def _jets_hermite(self, ts, m):
        """Entries beyond the source order via kernel differentiation."""
        so = int(self.source_order)
        out = np.zeros((ts.shape[0], m + 1))
        out[:, :so + 1] = self.jets(ts, so) if so >= 0 else 0.0
        # polynomials P_k with d^k/dt^k e^{-lam u^2} = P_k(u) e^{-lam u^2}, u = s - t
        polys = [np.array([1.0])]
        for _ in range(m - so):
            p = polys[-1]
            shifted = np.concatenate([p, [0.0]]) * 2.0 * self.lam  # 2 lam u P
            dp = p[:-1] * np.arange(len(p) - 1, 0, -1)             # P'
            q = shifted.copy()
            if dp.size:
                q[2:] -= dp
            polys.append(q)
        pan = self._pan
        R = self._radius
        for band_i, (u, v) in enumerate(self.bands):
            n = pan.counts[band_i]
            w = pan.widths[band_i]
            lo = np.clip(np.floor((ts - R - u) / w), 0, n).astype(np.int64)
            hi = np.clip(np.ceil((ts + R - u) / w), 0, n).astype(np.int64)
            for i in np.nonzero(hi > lo)[0]:
                glo, ghi = int(lo[i]), int(hi[i])
                pan.ensure_cached(self.source, band_i, glo, ghi, max(so, 0))
                S = pan.range_nodes(band_i, glo, ghi)
                Wt = pan.range_weights(band_i, glo, ghi)
                H = pan.range_jets(band_i, glo, ghi, max(so, 0))[:, -1]
                U = S - ts[i]
                K = np.exp(-self.lam * U ** 2)
                for k in range(so + 1, m + 1):
                    P = np.polyval(polys[k - so], U)
                    out[i, k] += np.sum(K * P * Wt * H)
        out[:, so + 1:] *= self._norm
        return out

    # -- complex evaluation ----------------------------------------------

    def eval_complex(self, z: complex) -> complex:
        z = complex(z)
        x, y = z.real, z.imag
        if self.lam * y * y > 700.0:
            raise QuadratureError(
                "complex evaluation overflows: lambda * Im(z)^2 too large")
        vals = []
        for pan in self._pans_for_check():
            R = math.sqrt(self._radius ** 2 + y * y)
            acc = 0.0 + 0.0j
            for band_i, (u, v) in enumerate(self.bands):
                n = pan.counts[band_i]
                w = pan.widths[band_i]
                glo = int(np.clip(math.floor((x - R - u) / w), 0, n))
                ghi = int(np.clip(math.ceil((x + R - u) / w), 0, n))
                if ghi <= glo:
                    continue
                pan.ensure_cached(self.source, band_i, glo, ghi, 0)
                S = pan.range_nodes(band_i, glo, ghi)
                Wt = pan.range_weights(band_i, glo, ghi)
                H = pan.range_jets(band_i, glo, ghi, 0)[:, 0]
                K = np.exp(-self.lam * (S - z) ** 2)
                acc += np.sum(K * Wt * H)
            vals.append(self._norm * acc)
            if not self.cfg.check:
                return vals[0]
        base, fine = vals
        scale = max(abs(fine), 1e-300)
        if abs(fine - base) > self.cfg.check_rel_tol * scale:
            raise QuadratureError(
                "panel-doubling disagreement in complex evaluation "
                f"(lambda={self.lam:g}, z={z})")
        return fine

    def _pans_for_check(self):
        if not self.cfg.check:
            return [self._pan]
        if self._pan2 is None:
            self._pan2 = _Panelization(self.bands, self.lam,
                                       self.cfg.nodes_per_panel,
                                       self.cfg.panel_scale * 2.0)
        return [self._pan, self._pan2]


def mollify(h, support, lam: float, cfg: QuadratureCfg | None = None,
            source_order=math.inf) -> MollifiedFn:
    """Construct the smoothing-operator closure; validates support and lambda."""
    return MollifiedFn(h, support, lam, cfg, source_order)


def eval_real_jet(g: MollifiedFn, t: float, k: int,
                  source_order=None):
    """Jet of a mollified function at a real point.

    Entries up to the source order use the derivative-transfer identity;
    higher entries (only when explicitly requested through source_order)
    use Hermite-weighted kernel integrals.
    """
    if source_order is not None and k > source_order:
        saved = g.source_order
        try:
            g.source_order = source_order
            return g.jet(t, k)
        finally:
            g.source_order = saved
    return g.jet(t, k)


def eval_complex(g: MollifiedFn, z: complex) -> complex:
    return g.eval_complex(z)


class _DiffFn(JetFn):
    def __init__(self, f, g):
        self.f = f
        self.g = g

    def jets(self, ts, m):
        return self.f.jets(ts, m) - self.g.jets(ts, m)


@dataclass
class LambdaResult:
    lam: float
    mollified: MollifiedFn
    measured: SeminormEstimate
    steps: int


#: the search accepts when the measured seminorm is below margin * delta
SEARCH_MARGIN = 0.9


def find_lambda(h, support, r: int, delta: float,
                S: CompactSet | None = None,
                cfg: QuadratureCfg | None = None,
                grid_cfg: GridConfig | None = None,
                lambda0: float | None = None,
                max_steps: int = 80) -> LambdaResult:
    """Smallest ladder value lam = lambda0 * 2^j with ||I_lam(h) - h||_{S;r} < 0.9 delta.

    The error decays roughly like 1/lam for smooth sources, so the walk
    up the ladder skips ahead when far above target and then backtracks
    to the first success.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    h = as_jet_fn(h)
    bands = _normalize_bands(support)
    p, q = bands[0][0], bands[-1][1]
    if S is None:
        S = CompactSet.interval(p - 1.0, q + 1.0)
    if lambda0 is None:
        width = q - p
        lambda0 = max(1.0, (r + 1) ** 2 / width ** 2)
    cfg = cfg or QuadratureCfg()
    full_cfg = grid_cfg or GridConfig()
    # ladder probes run on a coarse grid; the accepted rung is re-measured
    # at full resolution before being returned
    probe_cfg = GridConfig(max(full_cfg.density / 4.0, 8.0),
                           max(full_cfg.min_points // 4, 65),
                           max(full_cfg.rel_tol, 1e-3),
                           min(full_cfg.max_levels, 3))

    probe_quad = cfg.scaled(0.5)

    def measure(j, cfg_g, final=False):
        lam = lambda0 * 2.0 ** j
        g = MollifiedFn(h, bands, lam, cfg if final else probe_quad)
        err = seminorm(_DiffFn(g, h), S, r, cfg_g)
        return lam, g, err

    probes: dict[int, float] = {}
    j = 0
    steps = 0
    while j <= max_steps:
        lam, g, err = measure(j, probe_cfg)
        probes[j] = err.value
        steps += 1
        if err.value < SEARCH_MARGIN * delta:
            # backtrack to the first coarse-grid success
            while j > 0:
                if j - 1 not in probes:
                    _, _, e2 = measure(j - 1, probe_cfg)
                    probes[j - 1] = e2.value
                    steps += 1
                if probes[j - 1] < SEARCH_MARGIN * delta:
                    j -= 1
                else:
                    break
            lam, g, err = measure(j, full_cfg, final=True)
            steps += 1
            if err.value < SEARCH_MARGIN * delta:
                return LambdaResult(lam, g, err, steps)
            probes[j] = err.value
            j += 1
            continue
        ratio = err.value / (SEARCH_MARGIN * delta)
        jump = max(1, int(math.floor(math.log2(ratio))) - 1) if ratio > 4 else 1
        j += jump
    raise LambdaSearchError(
        f"no lambda below cap reached target {delta:g} "
        f"(last measured {err.value:g} at lambda={lam:g})")


def convergence_profile(h, r: int, S: CompactSet, lams, support,
                        cfg: QuadratureCfg | None = None,
                        grid_cfg: GridConfig | None = None):
    """Measured ||I_lam(h) - h||_{S;r} for an increasing list of lambdas."""
    lams = list(lams)
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda list must be increasing")
    h = as_jet_fn(h)
    out = []
    for lam in lams:
        g = MollifiedFn(h, support, lam, cfg)
        out.append(seminorm(_DiffFn(g, h), S, r, grid_cfg).value)
    return out

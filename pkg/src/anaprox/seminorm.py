"""Grid estimation of simultaneous-derivative sup seminorms.

The seminorm of order m over a compact set S is the max over k <= m and
t in S of |f^(k)(t)|.  Estimates are computed on refinable grids and are
*estimates*, not certified enclosures: every consumer records the grid
resolution alongside the value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jetfn import ProductFn, as_jet_fn

__all__ = ["CompactSet", "GridConfig", "SeminormEstimate", "seminorm",
           "check_product_bound"]

#: Additive/relative slack used when comparing two grid-estimated values.
ABS_SLACK = 1e-9
REL_SLACK = 1e-6


@dataclass(frozen=True)
class CompactSet:
    """Finite union of closed intervals, normalized to ordered disjoint form."""

    intervals: tuple

    def __init__(self, intervals):
        ivs = sorted((float(u), float(v)) for u, v in intervals)
        for u, v in ivs:
            if v < u:
                raise ValueError(f"empty interval [{u}, {v}]")
        merged = []
        for u, v in ivs:
            if merged and u <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], v))
            else:
                merged.append((u, v))
        object.__setattr__(self, "intervals", tuple(merged))

    @classmethod
    def interval(cls, u, v):
        return cls([(u, v)])

    @property
    def hull(self):
        return (self.intervals[0][0], self.intervals[-1][1])

    def length(self):
        return sum(v - u for u, v in self.intervals)

    def __contains__(self, t):
        return any(u <= t <= v for u, v in self.intervals)


@dataclass(frozen=True)
class GridConfig:
    density: float = 64.0        # points per unit length
    min_points: int = 257        # per component
    rel_tol: float = 1e-4
    max_levels: int = 6

    def scaled(self, factor: float) -> "GridConfig":
        """Budget scaling: multiply grid density (re-verification doctrine)."""
        return GridConfig(self.density * factor,
                          int(np.ceil(self.min_points * factor)),
                          self.rel_tol, self.max_levels)


@dataclass
class SeminormEstimate:
    value: float
    grid_points: int
    refinement_levels: int
    converged: bool

    def __float__(self):
        return self.value


def _component_grid(u, v, cfg):
    if v == u:
        return np.array([u])
    n = max(cfg.min_points, int(np.ceil(cfg.density * (v - u))) + 1)
    return np.linspace(u, v, n)


def seminorm(f, S: CompactSet, m: int, cfg: GridConfig | None = None) -> SeminormEstimate:
    """Grid-estimated max over k <= m, t in S of |f^(k)(t)|.

    The initial uniform grid is refined dyadically around the current
    per-order maximizers until two successive levels agree to rel_tol.
    """
    cfg = cfg or GridConfig()
    f = as_jet_fn(f)
    total_points = 0
    best = 0.0
    # per-order maximizer state: (t*, local spacing, component bounds)
    tops = []
    for (u, v) in S.intervals:
        ts = _component_grid(u, v, cfg)
        total_points += ts.size
        aj = np.abs(f.jets(ts, m))
        comp_best = float(aj.max())
        best = max(best, comp_best)
        h = (v - u) / max(ts.size - 1, 1) if v > u else 0.0
        for k in range(m + 1):
            i = int(np.argmax(aj[:, k]))
            tops.append([float(ts[i]), h, u, v])

    levels = 0
    converged = best == 0.0
    for _ in range(cfg.max_levels):
        if converged:
            break
        prev = best
        new_pts = []
        for top in tops:
            t0, h, u, v = top
            if h == 0.0:
                continue
            w = np.clip(t0 + h * np.linspace(-1.0, 1.0, 17), u, v)
            new_pts.append((w, top))
        if not new_pts:
            break
        for w, top in new_pts:
            aj = np.abs(f.jets(w, m))
            total_points += w.size
            local = float(aj.max())
            best = max(best, local)
            flat = np.unravel_index(int(np.argmax(aj)), aj.shape)
            top[0] = float(w[flat[0]])
            top[1] = top[1] / 4.0
        levels += 1
        if best - prev < cfg.rel_tol * best:
            converged = True
    return SeminormEstimate(best, total_points, levels, converged)


def check_product_bound(f, g, S: CompactSet, m: int,
                        cfg: GridConfig | None = None):
    """Verify ||fg|| <= 2^m ||f|| ||g|| on grids; returns (lhs, rhs, ok)."""
    f = as_jet_fn(f)
    g = as_jet_fn(g)
    lhs = seminorm(ProductFn(f, g), S, m, cfg).value
    rhs = 2.0 ** m * seminorm(f, S, m, cfg).value * seminorm(g, S, m, cfg).value
    ok = lhs <= rhs * (1.0 + REL_SLACK) + ABS_SLACK
    return lhs, rhs, ok

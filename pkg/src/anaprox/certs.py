"""Shared certificate records for grid-verified inequalities.

A certificate never claims more than what was measured: each check
records the grid resolution it was computed at, and "passed" means the
measured quantity beat the target on that grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jetfn import as_jet_fn
from .seminorm import ABS_SLACK, REL_SLACK, CompactSet, GridConfig

__all__ = ["Check", "Certificate", "pointwise_ratio"]


@dataclass
class Check:
    name: str
    measured: float
    target: float
    passed: bool
    grid_points: int = 0
    note: str = ""

    def to_document(self):
        return {"name": self.name, "measured": self.measured,
                "target": self.target, "passed": bool(self.passed),
                "grid_points": self.grid_points,
                **({"note": self.note} if self.note else {})}


@dataclass
class Certificate:
    checks: list = field(default_factory=list)

    def add(self, name, measured, target, grid_points=0, note=""):
        passed = measured < target * (1.0 + REL_SLACK) + ABS_SLACK
        self.checks.append(Check(name, float(measured), float(target),
                                 passed, grid_points, note))
        return passed

    def add_flag(self, name, passed, note=""):
        self.checks.append(Check(name, float(not passed), 1.0,
                                 bool(passed), 0, note))
        return passed

    def extend(self, other: "Certificate"):
        self.checks.extend(other.checks)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_document(self):
        return {"passed": self.passed,
                "checks": [c.to_document() for c in self.checks]}


def pointwise_ratio(diff_fn, eps_fn, S: CompactSet, max_order: int,
                    cfg: GridConfig | None = None, scale: float = 1.0):
    """Grid max over t in S, j <= max_order of |diff^(j)(t)| / (scale eps(t)).

    A value below 1 means the pointwise family of inequalities holds on
    the grid.  Returns (ratio, grid_points, argmax_t).
    """
    cfg = cfg or GridConfig()
    diff_fn = as_jet_fn(diff_fn)
    eps_fn = as_jet_fn(eps_fn)
    best = 0.0
    best_t = S.intervals[0][0]
    total = 0

    def ratios(ts):
        d = np.abs(diff_fn.jets(ts, max_order))
        e = scale * eps_fn.jets(ts, 0)[:, 0]
        return d.max(axis=1) / e

    tops = []
    for (u, v) in S.intervals:
        n = max(cfg.min_points, int(np.ceil(cfg.density * (v - u))) + 1) \
            if v > u else 1
        ts = np.linspace(u, v, n)
        r = ratios(ts)
        total += ts.size
        i = int(np.argmax(r))
        if r[i] > best:
            best, best_t = float(r[i]), float(ts[i])
        h = (v - u) / max(n - 1, 1)
        tops.append([float(ts[i]), h, u, v])

    for _ in range(cfg.max_levels):
        prev = best
        for top in tops:
            t0, h, u, v = top
            if h == 0.0:
                continue
            w = np.clip(t0 + h * np.linspace(-1.0, 1.0, 17), u, v)
            r = ratios(w)
            total += w.size
            i = int(np.argmax(r))
            if r[i] > best:
                best, best_t = float(r[i]), float(w[i])
            top[0] = float(w[i])
            top[1] = h / 4.0
        if best - prev < cfg.rel_tol * max(best, 1e-300):
            break
    return best, total, best_t

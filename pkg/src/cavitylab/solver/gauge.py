"""Cross-gauge convergence scans (length vs velocity)."""

from dataclasses import dataclass, field

import numpy as np

from ..core.hamiltonians import build_length_gauge, build_velocity_gauge
from ..core.types import LengthGauge, VelocityGauge
from ..errors import InvalidArgumentError
from .eigen import solve


@dataclass
class GaugeReport:
    levels: list
    final_gap: float
    extrapolated_gap: float
    shrinking: bool
    consistent: bool
    gap_tol: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "levels": self.levels,
            "final_gap": self.final_gap,
            "extrapolated_gap": self.extrapolated_gap,
            "shrinking": self.shrinking,
            "consistent": self.consistent,
            "gap_tol": self.gap_tol,
            "notes": self.notes,
        }


def _aitken(seq):
    if len(seq) < 3:
        return seq[-1]
    a, b, c = seq[-3:]
    denom = (c - b) - (b - a)
    if denom == 0 or not np.isfinite(denom):
        return c
    return c - (c - b) ** 2 / denom


def check_gauge_invariance(matter, modes, ladder, gap_tol=1e-6, include_diamagnetic=True, tol=1e-11, noise=1e-12):
    """Ground energies in both gauges along a ``(n_points, n_max)`` ladder.

    The ladder is consistent when ``|E_len - E_vel|`` strictly shrinks from
    level to level (or sits below ``noise`` relative rounding) and the final
    gap is below ``gap_tol``; anything else is
    flagged (it signals an assembly inconsistency, or a deliberately ablated
    diamagnetic term).
    """
    if len(ladder) < 3:
        raise InvalidArgumentError("gauge check needs a ladder of at least 3 levels")
    levels = []
    for n_points, n_max in ladder:
        m = matter.with_grid(n_points=int(n_points))
        ms = modes.with_n_max(n_max)
        e_len = solve(build_length_gauge(m, ms, LengthGauge(True)), 1, tol=tol).eigenvalues[0]
        e_vel = solve(build_velocity_gauge(m, ms, VelocityGauge(include_diamagnetic)), 1, tol=tol).eigenvalues[0]
        levels.append(
            {
                "n_points": int(n_points),
                "n_max": list(np.atleast_1d(n_max).tolist()),
                "E_length": float(e_len),
                "E_velocity": float(e_vel),
                "gap": float(abs(e_len - e_vel)),
            }
        )
    gaps = [lv["gap"] for lv in levels]
    # gaps at the rounding floor count as converged, not as growth
    floor = noise * max(1.0, max(abs(lv["E_length"]) for lv in levels))
    shrinking = all(gaps[i + 1] < gaps[i] or gaps[i + 1] <= floor for i in range(len(gaps) - 1))
    e_l = _aitken([lv["E_length"] for lv in levels])
    e_v = _aitken([lv["E_velocity"] for lv in levels])
    final = gaps[-1]
    notes = []
    if not shrinking:
        notes.append("gap does not shrink monotonically along the ladder")
    if final > gap_tol:
        notes.append(f"final gap {final:.3e} above tolerance {gap_tol:g}")
    return GaugeReport(levels, final, float(abs(e_l - e_v)), shrinking, shrinking and final <= gap_tol, gap_tol, notes)

"""Grid-check verdicts: holds-on-grid, fails-at(t, margin), or inconclusive.

A HOLDS verdict means the property held at every usable grid point within
tolerance; it is never a proof over the continuum.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Status(Enum):
    HOLDS = "holds"
    FAILS_AT = "fails_at"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    status: Status
    t: float | None = None
    margin: float | None = None
    note: str = ""

    @classmethod
    def holds(cls) -> "Verdict":
        return cls(Status.HOLDS)

    @classmethod
    def fails_at(cls, t: float, margin: float, note: str = "") -> "Verdict":
        return cls(Status.FAILS_AT, t=float(t), margin=float(margin), note=note)

    @classmethod
    def inconclusive(cls, note: str = "") -> "Verdict":
        return cls(Status.INCONCLUSIVE, note=note)

    def __bool__(self) -> bool:
        return self.status is Status.HOLDS

    def to_json(self) -> dict:
        out: dict = {"status": self.status.value}
        if self.status is Status.FAILS_AT:
            out["t"] = self.t
            out["margin"] = self.margin
        if self.note:
            out["note"] = self.note
        return out


def worst_violation(ts, margins, tol_at) -> Verdict:
    """Build a verdict from pointwise violation margins against thresholds.

    ``margins[i] > tol_at[i]`` marks a violation; the verdict carries the
    point with the largest excess.
    """
    import numpy as np

    margins = np.asarray(margins, dtype=float)
    tol_at = np.broadcast_to(np.asarray(tol_at, dtype=float), margins.shape)
    excess = margins - tol_at
    bad = excess > 0
    if not bad.any():
        return Verdict.holds()
    i = int(np.argmax(excess))
    return Verdict.fails_at(float(np.asarray(ts)[i]), float(margins[i]))

"""Verification records shared by the check routines and the CLI."""

import math
from dataclasses import dataclass, field

__all__ = ["VerificationRecord"]


@dataclass
class VerificationRecord:
    """Outcome of one quantitative identity check.

    `anchor` is a short human-readable tag for the identity being checked so
    reports are self-documenting.  `hard` distinguishes asserted checks from
    informational ones (threshold = inf).  Invariant: passed iff
    residual <= threshold.
    """

    name: str
    anchor: str
    residual: float
    threshold: float
    passed: bool = field(init=False)
    hard: bool = True
    note: str = ""

    def __post_init__(self):
        ok = math.isfinite(self.residual) and self.residual <= self.threshold
        object.__setattr__(self, "passed", bool(ok))

    def to_dict(self):
        return {
            "name": self.name,
            "anchor": self.anchor,
            "residual": self.residual,
            "threshold": self.threshold,
            "passed": self.passed,
            "hard": self.hard,
            "note": self.note,
        }

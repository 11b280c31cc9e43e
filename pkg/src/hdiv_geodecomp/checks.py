"""Uniform pass/fail records for the verification operations."""

from __future__ import annotations

from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped_below_threshold"


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named verification with a machine-readable witness."""

    name: str
    status: str
    witness: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status != FAIL

"""Verification records shared by every suite."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

EXACT_PASS = "exact-pass"
NUMERIC_PASS = "numeric-pass"
FAIL = "fail"
DIAGNOSTIC = "diagnostic"

STATUSES = (EXACT_PASS, NUMERIC_PASS, FAIL, DIAGNOSTIC)


@dataclass
class Case:
    """One checked statement."""

    suite: str
    case_id: str
    anchor: str
    status: str
    error: float | None = None
    elapsed: float = 0.0
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status in (EXACT_PASS, NUMERIC_PASS, DIAGNOSTIC)

    def to_dict(self, with_timing: bool = True) -> dict:
        out = {
            "suite": self.suite,
            "case": self.case_id,
            "anchor": self.anchor,
            "status": self.status,
            "error": self.error,
            "detail": self.detail,
        }
        if with_timing:
            out["elapsed"] = round(self.elapsed, 6)
        return out


@dataclass
class VerificationReport:
    cases: list[Case] = field(default_factory=list)
    seed: int | None = None

    def add(self, case: Case) -> Case:
        if case.status not in STATUSES:
            raise ValueError(f"unknown status {case.status!r}")
        self.cases.append(case)
        return case

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.cases.extend(other.cases)
        return self

    def exact(self, suite, case_id, anchor, ok: bool, detail="", elapsed=0.0) -> Case:
        return self.add(Case(suite, case_id, anchor, EXACT_PASS if ok else FAIL,
                             None, elapsed, detail))

    def numeric(self, suite, case_id, anchor, err: float, tol: float, detail="", elapsed=0.0) -> Case:
        ok = bool(err <= tol)
        return self.add(Case(suite, case_id, anchor, NUMERIC_PASS if ok else FAIL,
                             float(err), elapsed, detail))

    def diagnostic(self, suite, case_id, anchor, detail="", elapsed=0.0) -> Case:
        return self.add(Case(suite, case_id, anchor, DIAGNOSTIC, None, elapsed, detail))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def failures(self) -> list[Case]:
        return [c for c in self.cases if c.status == FAIL]

    def __len__(self):
        return len(self.cases)

    def __iter__(self):
        return iter(self.cases)

    def __repr__(self):
        bad = len(self.failures)
        return f"VerificationReport({len(self.cases)} cases, {bad} failing)"


@contextmanager
def stopwatch():
    """Yields a callable returning seconds since entry."""
    t0 = time.perf_counter()
    yield lambda: time.perf_counter() - t0

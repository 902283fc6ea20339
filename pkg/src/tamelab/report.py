"""Claim reports: one record per check, rendered as text or stable JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import __version__

STATUSES = ("pass", "fail", "skip", "expected-failure", "info")


def jsonable(x):
    """Tuples and sets become lists, mapping keys become strings."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted((jsonable(v) for v in x), key=repr)
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    if hasattr(x, "to_json"):
        return jsonable(x.to_json())
    return repr(x)


@dataclass
class ClaimResult:
    claim: str
    status: str
    evidence: dict = field(default_factory=dict)
    runtime: float | None = None
    tag: str | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        self.evidence = jsonable(self.evidence)

    def to_json(self, timings: bool = False) -> dict:
        out = {"claim": self.claim, "status": self.status}
        if self.tag:
            out["tag"] = self.tag
        out["evidence"] = self.evidence
        if timings and self.runtime is not None:
            out["runtime"] = round(self.runtime, 4)
        return out


@dataclass
class Report:
    scenario: dict
    suite: str
    claims: list = field(default_factory=list)
    version: str = __version__

    def add(self, result: ClaimResult) -> None:
        self.claims.append(result)

    def sorted_claims(self) -> list:
        return sorted(self.claims, key=lambda c: c.claim)

    @property
    def failed(self) -> bool:
        return any(c.status == "fail" for c in self.claims)

    @property
    def skipped(self) -> bool:
        return any(c.status == "skip" for c in self.claims)

    def exit_code(self, strict: bool = False) -> int:
        if self.failed:
            return 1
        if strict and self.skipped:
            return 3
        return 0

    def to_json(self, timings: bool = False) -> dict:
        return {
            "artifact_version": self.version,
            "suite": self.suite,
            "scenario": self.scenario,
            "claims": [c.to_json(timings) for c in self.sorted_claims()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        rep = cls(data["scenario"], data["suite"], [], data["artifact_version"])
        for c in data["claims"]:
            rep.add(ClaimResult(c["claim"], c["status"], c.get("evidence", {}), c.get("runtime"), c.get("tag")))
        return rep


def _summary(evidence: dict) -> str:
    parts = []
    for k, v in evidence.items():
        if isinstance(v, (bool, int, float, str)) or v is None:
            parts.append(f"{k}={v}")
    return " ".join(parts[:6])


def emit_report(report: Report, fmt: str = "text", timings: bool = False) -> str:
    if fmt == "json":
        return json.dumps(report.to_json(timings), indent=2, sort_keys=False, ensure_ascii=False) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"scenario {report.scenario.get('name')} suite {report.suite} (version {report.version})"]
    for c in report.sorted_claims():
        tag = f" [{c.tag}]" if c.tag else ""
        rt = f" ({c.runtime:.3f}s)" if timings and c.runtime is not None else ""
        lines.append(f"{c.status.upper():17} {c.claim}{tag}{rt}  {_summary(c.evidence)}".rstrip())
    counts = {s: sum(c.status == s for c in report.claims) for s in STATUSES}
    lines.append("  ".join(f"{s}: {n}" for s, n in counts.items() if n))
    return "\n".join(lines) + "\n"

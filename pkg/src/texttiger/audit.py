"""Token accounting over assembled prompts: per-method means and limit violations."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import EmptyAudit
from .promptgen import AssembledPrompt, PromptMethod

DEFAULT_LIMIT = 256


@dataclass(frozen=True)
class MethodAudit:
    mean_tokens: float
    violations: int
    n: int
    clip_violations: int | None = None


@dataclass(frozen=True)
class AuditReport:
    """Per-method token statistics against one limit."""

    per_method: dict[str, MethodAudit]
    limit: int
    clip_limit: int | None = None

    def to_dict(self) -> dict:
        methods = {}
        for name, audit in self.per_method.items():
            entry = {
                "mean_tokens": audit.mean_tokens,
                "violations": audit.violations,
                "n": audit.n,
            }
            if audit.clip_violations is not None:
                entry["clip_violations"] = audit.clip_violations
            methods[name] = entry
        out = {"limit": self.limit, "per_method": methods}
        if self.clip_limit is not None:
            out["clip_limit"] = self.clip_limit
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def audit_prompts(prompts, limit: int = DEFAULT_LIMIT, clip_limit: int | None = None) -> AuditReport:
    """Group prompts by method; report mean token count and violation count.

    A violation is a prompt whose token count exceeds the limit. Passing
    ``clip_limit`` adds a second violation column against the text-encoder
    window. Order of input prompts does not affect the result.
    """
    if limit <= 0:
        raise ValueError("limit must be positive")
    prompts = list(prompts)
    if not prompts:
        raise EmptyAudit("no prompts to audit")
    grouped: dict[str, list[AssembledPrompt]] = {}
    for prompt in prompts:
        grouped.setdefault(prompt.method.value, []).append(prompt)
    canonical = [m.value for m in PromptMethod if m.value in grouped]
    per_method = {}
    for name in canonical:
        counts = [p.token_count for p in grouped[name]]
        per_method[name] = MethodAudit(
            mean_tokens=sum(counts) / len(counts),
            violations=sum(1 for c in counts if c > limit),
            n=len(counts),
            clip_violations=(
                sum(1 for c in counts if c > clip_limit) if clip_limit is not None else None
            ),
        )
    return AuditReport(per_method=per_method, limit=limit, clip_limit=clip_limit)


def format_audit_table(report: AuditReport) -> str:
    """Aligned text table: method, mean tokens, violations (and n)."""
    headers = ["Method", "Avg. # of Tokens", "Num. of Violation", "n"]
    if report.clip_limit is not None:
        headers.append(f"Violations @{report.clip_limit}")
    rows = []
    for name, audit in report.per_method.items():
        row = [name, f"{audit.mean_tokens:.2f}", str(audit.violations), str(audit.n)]
        if report.clip_limit is not None:
            row.append(str(audit.clip_violations))
        rows.append(row)
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    lines.append(f"(limit {report.limit})")
    return "\n".join(lines) + "\n"

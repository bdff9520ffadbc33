"""Pass/fail reports shared by every check and by the CLI."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

PASS, FAIL, ERROR = "pass", "fail", "error"
EXIT_CODES = {PASS: 0, FAIL: 1, ERROR: 2}


def _plain(x: Any) -> Any:
    """Coerce numpy values, tuples, sets and frozensets into JSON-ready data."""
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (set, frozenset)):
        return sorted((_plain(v) for v in x), key=repr)
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


@dataclass
class Witness:
    check: str
    reason: str
    data: Any = None


@dataclass
class Report:
    name: str
    status: str = PASS
    sections: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)

    def record(self, key: str, passed: bool | None, detail: Any = None) -> None:
        self.sections[key] = {"passed": passed, "detail": _plain(detail)}

    def fail(self, check: str, reason: str, data: Any = None) -> None:
        if self.status != ERROR:
            self.status = FAIL
        self.witnesses.append(Witness(check, reason, _plain(data)))

    def error(self, check: str, reason: str) -> None:
        self.status = ERROR
        self.witnesses.append(Witness(check, reason))

    def merge(self, other: "Report", prefix: str | None = None) -> None:
        pre = f"{prefix or other.name}/"
        for k, v in other.sections.items():
            self.sections[pre + k] = v
        for w in other.witnesses:
            self.witnesses.append(Witness(pre + w.check, w.reason, w.data))
        if other.status == ERROR:
            self.status = ERROR
        elif other.status == FAIL and self.status == PASS:
            self.status = FAIL

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def __bool__(self) -> bool:
        return self.passed

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        if d.get("status") not in EXIT_CODES:
            raise ValueError(f"bad report status {d.get('status')!r}")
        return cls(
            d["name"],
            d["status"],
            dict(d.get("sections", {})),
            [Witness(**w) for w in d.get("witnesses", [])],
        )

    def to_text(self) -> str:
        lines = [f"{self.name}: {self.status.upper()}"]
        for key, sec in self.sections.items():
            mark = {True: "ok  ", False: "FAIL", None: "    "}[sec["passed"]]
            detail = sec["detail"]
            if detail is None:
                text = ""
            elif isinstance(detail, str):
                text = ("\n" if "\n" in detail else "  ") + detail
            else:
                text = "  " + json.dumps(detail)
                if len(text) > 160:
                    text = text[:157] + "..."
            lines.append(f"  [{mark}] {key}{text}")
        for w in self.witnesses:
            lines.append(f"  witness {w.check}: {w.reason}" + ("" if w.data is None else f" {json.dumps(w.data)}"))
        return "\n".join(lines)

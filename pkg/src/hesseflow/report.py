"""Report assembly: check records, JSON emission and determinism hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = "1"


@dataclass
class Report:
    """Versioned run report; the determinism hash excludes timing."""

    command: str
    manifest_text: str
    seed: int
    tool_version: str
    records: list[dict] = field(default_factory=list)
    dumps: list[dict] = field(default_factory=list)
    elapsed_s: float = 0.0

    def add(self, record) -> None:
        self.records.append(record if isinstance(record, dict) else record.to_dict())

    def add_all(self, records) -> None:
        for record in records:
            self.add(record)

    @property
    def all_passed(self) -> bool:
        return all(r.get("passed", True) for r in self.records)

    def payload(self) -> dict:
        body = {
            "schema_version": SCHEMA_VERSION,
            "tool": f"hesseflow {self.tool_version}",
            "command": self.command,
            "seed": self.seed,
            "manifest": self.manifest_text,
            "records": self.records,
        }
        if self.dumps:
            body["dumps"] = self.dumps
        return body

    def determinism_hash(self) -> str:
        canon = json.dumps(self.payload(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def to_json(self) -> str:
        body = self.payload()
        body["determinism_sha256"] = self.determinism_hash()
        body["timing"] = {"elapsed_s": self.elapsed_s}
        return json.dumps(body, indent=2, sort_keys=True)

    def write(self, path) -> None:
        path = Path(path)
        if path.parent != Path("."):
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")

    def print_lines(self, quiet: bool = False) -> None:
        if quiet:
            return
        for rec in self.records:
            status = "PASS" if rec.get("passed", True) else "FAIL"
            name = rec.get("name", "?")
            residual = rec.get("residual")
            tol = rec.get("tolerance")
            anchor = rec.get("anchor", "")
            detail = ""
            if residual is not None:
                detail = f" residual={residual:.3e}"
                if tol is not None:
                    detail += f" tol={tol:.1e}"
            suffix = f"  [{anchor}]" if anchor else ""
            print(f"[{status}] {name}{detail}{suffix}")

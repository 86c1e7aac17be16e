"""Verification reports: canonical JSON bodies, hashes, and CSV sidecars.

A report's canonical body excludes all timing fields so repeated runs with
the same scenario and seeds are byte-identical; wall-clock data still ships
in the written document for humans.
"""

from __future__ import annotations

import hashlib
import platform
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__
from ._util import canonical_json

SCHEMA_VERSION = 1


def toolchain_fingerprint() -> dict:
    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


@dataclass
class VerificationReport:
    scenario: str
    rows: list = field(default_factory=list)  # dicts: check, lhs, rhs, pass, runtime
    fingerprint: dict = field(default_factory=toolchain_fingerprint)

    @property
    def overall_pass(self) -> bool:
        return all(bool(r.get("pass")) for r in self.rows)

    def _stable_rows(self) -> list:
        out = []
        for r in self.rows:
            row = {k: v for k, v in r.items() if k != "runtime"}
            out.append(row)
        return out

    def canonical_body(self) -> str:
        return canonical_json(
            {
                "schema": SCHEMA_VERSION,
                "scenario": self.scenario,
                "rows": self._stable_rows(),
                "overall_pass": self.overall_pass,
                "fingerprint": self.fingerprint,
            }
        )

    def body_sha256(self) -> str:
        return hashlib.sha256(self.canonical_body().encode()).hexdigest()

    def to_document(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "scenario": self.scenario,
            "rows": self.rows,
            "overall_pass": self.overall_pass,
            "fingerprint": self.fingerprint,
            "body_sha256": self.body_sha256(),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_document())

    def summary_lines(self) -> list[str]:
        lines = []
        for r in self.rows:
            status = "PASS" if r.get("pass") else "FAIL"
            lhs = r.get("lhs", "")
            rhs = r.get("rhs", "")
            lines.append(f"[{status}] {r['check']}: lhs={lhs} rhs={rhs}")
        lines.append(f"overall: {'PASS' if self.overall_pass else 'FAIL'}")
        return lines

    def csv_rows(self) -> list[str]:
        out = ["check,lhs,rhs,pass,runtime"]
        for r in self.rows:
            out.append(
                f"{r['check']},{r.get('lhs', '')},{r.get('rhs', '')},{int(bool(r.get('pass')))},{r.get('runtime', '')}"
            )
        return out

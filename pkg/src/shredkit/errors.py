"""Error type shared by every stage; carries a stable code for machine-readable reporting."""

from __future__ import annotations

from typing import Any


class ShredkitError(Exception):
    """Domain error. `code` is stable; `clause` names the rule being enforced, if any."""

    def __init__(
        self,
        code: str,
        message: str,
        *,
        clause: str | None = None,
        line: int | None = None,
        column: int | None = None,
        detail: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.clause = clause
        self.line = line
        self.column = column
        self.detail = detail or {}

    def __str__(self) -> str:
        loc = ""
        if self.line is not None:
            loc = f"line {self.line}"
            if self.column is not None:
                loc += f", col {self.column}"
            loc += ": "
        return f"[{self.code}] {loc}{self.message}"

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"error": self.code, "message": self.message}
        if self.clause is not None:
            out["clause"] = self.clause
        if self.line is not None:
            out["line"] = self.line
        if self.column is not None:
            out["column"] = self.column
        if self.detail:
            out["detail"] = self.detail
        return out

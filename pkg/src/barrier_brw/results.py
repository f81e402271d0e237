"""RunResult records and the CSV/JSON writers used by the command line."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Sequence

from . import __version__


@dataclass
class RunResult:
    command: str
    parameters: dict[str, Any]
    master_seed: int | None
    payload: Any
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    duration: float = 0.0
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "master_seed": self.master_seed,
            "started_at": self.started_at,
            "duration": self.duration,
            "payload": self.payload,
            "tool_version": self.tool_version,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def payload_json(self) -> str:
        """Canonical payload text; identical for identical runs."""
        return json.dumps(_jsonable(self.payload), sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "RunResult":
        d = json.loads(text)
        return cls(
            command=d["command"],
            parameters=d["parameters"],
            master_seed=d["master_seed"],
            payload=d["payload"],
            started_at=d["started_at"],
            duration=d["duration"],
            tool_version=d["tool_version"],
        )


def _jsonable(obj):
    # Non-finite floats have no JSON spelling; emit them as strings.
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return _jsonable(obj.item())
    return obj


def format_number(x) -> str:
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()

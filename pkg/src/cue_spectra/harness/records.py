"""Result records and their CSV / JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field

SCHEMA_VERSION = 1
CSV_HEADER = ("statistic", "value", "std_error", "target", "tolerance", "pass")


@dataclass
class Row:
    """One checked (or merely recorded) statistic.

    ``passed`` is None for rows that are recorded without an assertion.
    """

    statistic: str
    value: float
    std_error: float | None = None
    target: float | None = None
    tolerance: float | None = None
    passed: bool | None = None


@dataclass
class ResultRecord:
    campaign: str
    config_hash: str
    seed: int
    version: str
    rows: list[Row] = field(default_factory=list)
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[Row]:
        return [r for r in self.rows if r.passed is False]

    @property
    def ok(self) -> bool:
        return not self.failed

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema_version"] = SCHEMA_VERSION
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ResultRecord":
        data = dict(data)
        data.pop("schema_version", None)
        rows = [Row(**r) for r in data.pop("rows", [])]
        return cls(rows=rows, **data)


def _num(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _flag(x) -> str:
    return "" if x is None else ("true" if x else "false")


def csv_text(record: ResultRecord) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in record.rows:
        writer.writerow([r.statistic, _num(r.value), _num(r.std_error), _num(r.target),
                         _num(r.tolerance), _flag(r.passed)])
    return buf.getvalue()


def json_text(record: ResultRecord) -> str:
    return json.dumps(record.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_atomic(path: str, text: str) -> str:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def emit_csv(record: ResultRecord, path: str) -> str:
    return write_atomic(path, csv_text(record))


def emit_json(record: ResultRecord, path: str) -> str:
    return write_atomic(path, json_text(record))


def load_json(path: str) -> ResultRecord:
    with open(path, encoding="utf-8") as fh:
        return ResultRecord.from_dict(json.load(fh))

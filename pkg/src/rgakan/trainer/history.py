"""Per-iteration training records with a fixed-column CSV form."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

COLUMNS = ("iteration", "lr", "lambda_pde", "lambda_ic", "lambda_bc", "loss_pde", "loss_ic", "loss_bc",
           "total", "rel_l2", "snr", "complexity")


@dataclass
class RunHistory:
    rows: list = field(default_factory=list)
    diverged: bool = False

    def append(self, **values) -> None:
        unknown = set(values) - set(COLUMNS)
        if unknown:
            raise KeyError(f"unknown history columns {sorted(unknown)}")
        self.rows.append({c: float(values.get(c, math.nan)) for c in COLUMNS})

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def last(self, name: str) -> float:
        for r in reversed(self.rows):
            if not math.isnan(r[name]):
                return r[name]
        return math.nan

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for r in self.rows:
                w.writerow([int(r["iteration"])] + [repr(r[c]) for c in COLUMNS[1:]])

    @classmethod
    def from_csv(cls, path) -> "RunHistory":
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != COLUMNS:
                raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
            h = cls()
            for row in reader:
                h.rows.append({c: float(row[c]) for c in COLUMNS})
        return h

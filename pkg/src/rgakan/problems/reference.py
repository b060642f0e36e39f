"""Reference fields on tensor grids, stored as CSV with a one-line JSON header.

The header carries ``coords``, ``axes`` (full coordinate vectors), ``shape``,
``domain`` and ``provenance``; the body holds the values row-major, one line
per index of the first axis.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError, ValidationError

PROVENANCES = ("analytic", "file", "spectral_oracle")


@dataclass
class ReferenceField:
    coords: tuple
    axes: tuple
    values: np.ndarray
    provenance: str = "analytic"

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(len(a) for a in self.axes):
            raise ValidationError(f"values shape {self.values.shape} does not match the axes")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("reference values must be finite")

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def points(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def flat_values(self) -> np.ndarray:
        return self.values.ravel()

    def check_domain(self, domain, tol: float = 1e-9) -> None:
        for name, axis, (lo, hi) in zip(self.coords, self.axes, domain):
            if abs(axis.min() - lo) > tol or abs(axis.max() - hi) > tol:
                raise ValidationError(f"axis {name} spans [{axis.min()}, {axis.max()}], expected [{lo}, {hi}]")


def reference_from_function(coords, axes, fn, provenance="analytic") -> ReferenceField:
    grids = np.meshgrid(*[np.asarray(a, dtype=float) for a in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    vals = np.asarray(fn(pts), dtype=float).reshape(grids[0].shape)
    return ReferenceField(coords=tuple(coords), axes=tuple(axes), values=vals, provenance=provenance)


def save_reference(path, field: ReferenceField, domain=None) -> None:
    header = {
        "coords": list(field.coords),
        "shape": list(field.shape),
        "axes": [a.tolist() for a in field.axes],
        "domain": [list(map(float, d)) for d in domain] if domain is not None
        else [[float(a.min()), float(a.max())] for a in field.axes],
        "provenance": field.provenance,
    }
    buf = io.StringIO()
    buf.write(json.dumps(header) + "\n")
    rows = field.values.reshape(field.shape[0], -1)
    for row in rows:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


def load_reference(path, domain=None) -> ReferenceField:
    """Parse a reference CSV; optionally check that its grid spans ``domain``."""
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise ParseError("missing header line", len(data))
    try:
        header = json.loads(data[:nl].decode())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"header is not valid JSON: {exc}", getattr(exc, "pos", 0)) from None
    for key in ("coords", "shape", "axes"):
        if key not in header:
            raise ParseError(f"header lacks {key!r}", 0)
    shape = tuple(int(n) for n in header["shape"])
    if [len(a) for a in header["axes"]] != list(shape):
        raise ValidationError("axis lengths disagree with the declared shape")
    n_rows = shape[0]
    row_len = int(np.prod(shape[1:])) if len(shape) > 1 else 1
    values = np.empty((n_rows, row_len))
    offset = nl + 1
    body = data[offset:]
    lines = body.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    if len(lines) != n_rows:
        raise ParseError(f"expected {n_rows} data rows, found {len(lines)}", len(data))
    for r, line in enumerate(lines):
        fields = line.split(b",")
        if len(fields) != row_len:
            raise ParseError(f"row {r} has {len(fields)} values, expected {row_len}", offset)
        try:
            values[r] = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"row {r} contains a non-numeric value", offset) from None
        offset += len(line) + 1
    field = ReferenceField(coords=tuple(header["coords"]), axes=tuple(header["axes"]),
                           values=values.reshape(shape), provenance="file")
    if domain is not None:
        field.check_domain(domain)
    return field

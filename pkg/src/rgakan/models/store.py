"""Flat binary serialization of parameter stores.

Layout: one line of JSON (names, shapes, metadata), a newline, then the
float64 values of every array in header order, little-endian.
"""

from __future__ import annotations

import json
from pathlib import Path

import jax.numpy as jnp
import numpy as np

from ..errors import ParseError


def save_params(path, params: dict, meta: dict | None = None) -> None:
    names = list(params)
    header = {"names": names, "shapes": [list(np.shape(params[n])) for n in names],
              "dtype": "float64", "meta": meta or {}}
    blob = b"".join(np.ascontiguousarray(np.asarray(params[n], dtype="<f8")).tobytes() for n in names)
    Path(path).write_bytes(json.dumps(header).encode() + b"\n" + blob)


def load_params(path) -> tuple[dict, dict]:
    data = Path(path).read_bytes()
    end = data.find(b"\n")
    if end < 0:
        raise ParseError("parameter file has no header line", 0)
    try:
        header = json.loads(data[:end])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad parameter header: {exc.msg}", exc.pos) from None
    offset = end + 1
    params = {}
    for name, shape in zip(header["names"], header["shapes"]):
        n = int(np.prod(shape))
        if offset + 8 * n > len(data):
            raise ParseError(f"parameter blob truncated while reading {name!r}", len(data))
        params[name] = jnp.asarray(np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape(shape))
        offset += 8 * n
    if offset != len(data):
        raise ParseError("trailing bytes after the last parameter", offset)
    return params, header.get("meta", {})

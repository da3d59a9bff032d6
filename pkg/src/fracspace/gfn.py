"""GFN grid-function files.

Layout: one JSON header line terminated by ``\\n``::

    {"magic":"GFN1","N":1,"dims":[16],"L":[6.28...],"kind":"real","dtype":"f64le","layout":"row-major"}

followed directly by little-endian float64 samples in row-major order,
interleaved (re, im) pairs when ``kind`` is complex. No padding.
"""
import json
import os
import tempfile

import numpy as np

from .errors import FormatError
from .grid import GridFunction, GridSpec

MAGIC = "GFN1"


def encode_gfn(f: GridFunction) -> bytes:
    if not np.all(np.isfinite(f.values)):
        raise FormatError("refusing to write non-finite samples")
    header = {
        "magic": MAGIC,
        "N": f.grid.ndim,
        "dims": list(f.grid.dims),
        "L": list(f.grid.lengths),
        "kind": f.kind,
        "dtype": "f64le",
        "layout": "row-major",
    }
    dtype = "<f8" if f.kind == "real" else "<c16"
    payload = np.ascontiguousarray(f.values, dtype=dtype).tobytes()
    return json.dumps(header, separators=(",", ":")).encode("ascii") + b"\n" + payload


def decode_gfn(data: bytes) -> GridFunction:
    newline = data.find(b"\n")
    if newline < 0:
        raise FormatError("missing header terminator")
    try:
        header = json.loads(data[:newline].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable header: {exc}") from None
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise FormatError("bad magic")
    if header.get("dtype") != "f64le" or header.get("layout") != "row-major":
        raise FormatError("unsupported dtype or layout")
    kind = header.get("kind")
    if kind not in ("real", "complex"):
        raise FormatError("kind must be real or complex")
    dims, lengths, n = header.get("dims"), header.get("L"), header.get("N")
    if not isinstance(dims, list) or not isinstance(lengths, list) or n != len(dims):
        raise FormatError("inconsistent N/dims/L")
    try:
        grid = GridSpec(tuple(dims), tuple(lengths))
    except ValueError as exc:
        raise FormatError(f"invalid grid: {exc}") from None
    payload = data[newline + 1 :]
    per_sample = 16 if kind == "complex" else 8
    expected = grid.size * per_sample
    if len(payload) != expected:
        raise FormatError("header/payload size mismatch", expected_bytes=expected, got_bytes=len(payload))
    values = np.frombuffer(payload, dtype="<c16" if kind == "complex" else "<f8")
    if not np.all(np.isfinite(values)):
        raise FormatError("non-finite values in payload")
    return GridFunction(grid, values.astype(values.dtype.newbyteorder("=")), kind)


def atomic_write_bytes(path, data: bytes):
    """Write via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_gfn(f: GridFunction, path):
    atomic_write_bytes(path, encode_gfn(f))


def read_gfn(path) -> GridFunction:
    with open(path, "rb") as fh:
        return decode_gfn(fh.read())

import json
import os

import numpy as np
import pytest

from fracspace.errors import FormatError
from fracspace.gfn import decode_gfn, encode_gfn, read_gfn, write_gfn
from fracspace.grid import GridFunction, GridSpec

from .conftest import random_function


@pytest.mark.parametrize("cplx", [False, True])
def test_round_trip_is_bit_exact(tmp_path, grid2d, rng, cplx):
    f = random_function(grid2d, rng, cplx)
    path = tmp_path / "f.gfn"
    write_gfn(f, path)
    g = read_gfn(path)
    assert g.kind == f.kind and g.grid == f.grid
    assert g.values.tobytes() == f.values.tobytes()


def test_layout(grid1d, rng):
    f = random_function(grid1d, rng)
    data = encode_gfn(f)
    head, payload = data.split(b"\n", 1)
    header = json.loads(head)
    assert header == {
        "magic": "GFN1", "N": 1, "dims": [256], "L": [grid1d.lengths[0]],
        "kind": "real", "dtype": "f64le", "layout": "row-major",
    }
    assert payload == f.values.astype("<f8").tobytes()


def test_complex_interleaving():
    g = GridSpec((8,), (1.0,))
    f = GridFunction(g, np.arange(8) + 1j * np.arange(8, 16))
    payload = encode_gfn(f).split(b"\n", 1)[1]
    pairs = np.frombuffer(payload, "<f8").reshape(8, 2)
    assert np.array_equal(pairs[:, 0], np.arange(8)) and np.array_equal(pairs[:, 1], np.arange(8, 16))


def _header(dims, kind="real"):
    return json.dumps({"magic": "GFN1", "N": len(dims), "dims": dims, "L": [1.0] * len(dims),
                       "kind": kind, "dtype": "f64le", "layout": "row-major"}).encode() + b"\n"


def test_size_mismatch():
    with pytest.raises(FormatError):
        decode_gfn(_header([16]) + np.zeros(17).astype("<f8").tobytes())


def test_nan_rejected():
    vals = np.zeros(16)
    vals[3] = np.nan
    with pytest.raises(FormatError):
        decode_gfn(_header([16]) + vals.astype("<f8").tobytes())


def test_bad_magic():
    data = _header([16]).replace(b"GFN1", b"GFN0") + np.zeros(16).tobytes()
    with pytest.raises(FormatError):
        decode_gfn(data)


def test_atomic_write_leaves_no_temp_files(tmp_path, grid1d, rng):
    write_gfn(random_function(grid1d, rng), tmp_path / "a.gfn")
    assert os.listdir(tmp_path) == ["a.gfn"]

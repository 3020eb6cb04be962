import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mincontrast.errors import ValidationError
from mincontrast.geometry import RectWindow
from mincontrast.io import (manifest, read_curves, read_json, read_pattern, write_curves,
                            write_json, write_pattern)
from mincontrast.kfunc import DistanceGrid, k_matrix
from mincontrast.lgcp import M1, model_curves

from conftest import random_pattern


def test_pattern_round_trip(tmp_path, rng):
    pat = random_pattern(rng, 40)
    write_pattern(tmp_path / "p.csv", pat)
    back = read_pattern(tmp_path / "p.csv", pat.window)
    assert np.array_equal(back.x, pat.x) and np.array_equal(back.y, pat.y)
    assert np.array_equal(back.marks, pat.marks)


def test_string_marks_and_comments(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("# units: km\nx,y,mark\n0,0,BH\n1,2,FE\n3,1,BH\n")
    p = read_pattern(f)
    assert p.labels == ("BH", "FE") and p.marks.tolist() == [1, 2, 1]
    assert p.window.as_list() == [0.0, 3.0, 0.0, 2.0]


@pytest.mark.parametrize("text", ["a,b,c\n1,2,1\n", "x,y,mark\n1,q,1\n", "x,y,mark\n1,2\n",
                                  "x,y,mark\n1,2,0\n"])
def test_bad_pattern_files(tmp_path, text):
    f = tmp_path / "p.csv"
    f.write_text(text)
    with pytest.raises(ValidationError):
        read_pattern(f, RectWindow.square(0, 5))


def test_curves_round_trip(tmp_path, rng):
    km = k_matrix(random_pattern(rng, 40), DistanceGrid(1.5, 12))
    write_curves(tmp_path / "k.csv", km)
    meta, nodes, values = read_curves(tmp_path / "k.csv")
    assert np.array_equal(nodes, km.grid.nodes)
    assert np.array_equal(values, km.values)
    assert meta["correction"] == "isotropic"
    mc = model_curves(M1, DistanceGrid(2.0, 5))
    write_curves(tmp_path / "m.csv", mc, model=True)
    assert np.array_equal(read_curves(tmp_path / "m.csv")[2], mc.K)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=20))
def test_json_round_trip_lossless(tmp_path_factory, values):
    f = tmp_path_factory.mktemp("j") / "x.json"
    write_json(f, {"v": np.array(values)})
    assert read_json(f)["v"] == values


def test_json_nan_and_bad(tmp_path):
    write_json(tmp_path / "a.json", {"x": float("nan")})
    assert read_json(tmp_path / "a.json") == {"x": None}
    (tmp_path / "b.json").write_text("{oops")
    with pytest.raises(ValidationError):
        read_json(tmp_path / "b.json")


def test_manifest(tmp_path):
    (tmp_path / "in.txt").write_text("hello")
    m = manifest("fit", {"c": 0.2}, [tmp_path / "in.txt"], 3, 1.5)
    assert m["inputs"][str(tmp_path / "in.txt")].startswith("2cf24dba")
    assert json.loads(json.dumps(m)) == m

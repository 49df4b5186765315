import csv
import enum
import json
import math
from dataclasses import dataclass

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from autoresonance.serialization import dumps, fmt, to_jsonable, write_csv, write_json


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


def test_fmt_types():
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(np.int64(3)) == "3"
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(np.float32(0.5)) == "0.5"
    assert fmt("captured") == "captured"


def test_csv(tmp_path):
    path = tmp_path / "a.csv"
    write_csv(path, ["tau", "ok"], [(1.0, True), (np.float64(1 / 3), False)])
    text = path.read_bytes()
    assert b"\r" not in text
    rows = list(csv.reader(open(path)))
    assert rows == [["tau", "ok"], ["1", "true"], ["0.33333333333333331", "false"]]


class Color(enum.Enum):
    RED = "red"


@dataclass
class Box:
    a: float
    b: tuple


def test_jsonable_conversions():
    out = to_jsonable({"x": np.float64(math.nan), 1: math.inf, "n": -math.inf, "c": Color.RED,
                       "arr": np.arange(3), "box": Box(0.5, (np.int32(2),))})
    assert out == {"x": None, "1": "inf", "n": "-inf", "c": "red", "arr": [0, 1, 2], "box": {"a": 0.5, "b": [2]}}


def test_dumps_sorted_and_strict(tmp_path):
    text = dumps({"b": 1, "a": {"d": math.nan, "c": 2}})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"') and text.index('"c"') < text.index('"d"')
    assert "NaN" not in text
    path = tmp_path / "x.json"
    write_json(path, {"v": [1.5, math.inf]})
    assert json.loads(path.read_text()) == {"v": [1.5, "inf"]}

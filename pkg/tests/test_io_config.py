import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from glvortex.config import from_dict, load
from glvortex.errors import ConfigError
from glvortex.io import config_hash, dumps, envelope, read_csv, write_csv


def test_dumps_is_canonical():
    a = dumps({"b": np.float64(0.1), "a": [1, 2.0, np.int64(3)], "c": {"y": None, "x": True}})
    b = dumps({"c": {"x": True, "y": None}, "a": [1, 2.0, 3], "b": 0.1})
    assert a == b
    assert '"b": 0.10000000000000001' in a
    assert "[1, 2.0, 3]" in a
    assert json.loads(a)["a"] == [1, 2.0, 3]


def test_non_finite_floats_become_null():
    assert json.loads(dumps({"x": float("nan"), "y": [math.inf, 1.0]})) == {"x": None,
                                                                           "y": [None, 1.0]}


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert json.loads(dumps([x]))[0] == x


def test_envelope_and_hash():
    env = envelope("eigen", {"m": 1, "surface": {"kind": "sphere"}}, {"lambdas": [2.0]})
    assert env["command"] == "eigen" and len(env["config_hash"]) == 64
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_csv_round_trip(tmp_path):
    path = write_csv(tmp_path / "x.csv", ["s", "u"], [[0.1, 1 / 3], [0.2, -2.5e-300]],
                     comment="config_hash=abc")
    assert path.read_text().startswith("# config_hash=abc\ns,u\n")
    header, data = read_csv(path)
    assert header == ["s", "u"]
    assert data[0, 1] == 1 / 3 and data[1, 1] == -2.5e-300


def test_minimal_config():
    cfg = from_dict({"surface": {"kind": "sphere"}, "lambda": 8})
    assert cfg.m == 1 and cfg.lam == 8.0 and cfg.mesh == 2048
    assert cfg.settings().mesh_size == 2048


def test_tolerances_override_settings():
    cfg = from_dict({"surface": {"kind": "disk"}, "tolerances": {"rtol": 1e-9}, "mesh": 512})
    s = cfg.settings()
    assert s.rtol == 1e-9 and s.mesh_size == 512


@pytest.mark.parametrize("mesh", [1000, 128, 32768, 512.0, True])
def test_mesh_must_be_power_of_two(mesh):
    with pytest.raises(ConfigError, match="field 'mesh'"):
        from_dict({"surface": {"kind": "sphere"}, "mesh": mesh})


@pytest.mark.parametrize("raw, field", [
    ({"surface": {"kind": "sphere"}, "lambda": -1}, "lambda"),
    ({"surface": {"kind": "sphere"}, "m": 0}, "m"),
    ({"surface": {"kind": "torus"}}, "surface"),
    ({"surface": {"kind": "sphere"}, "colour": 1}, "colour"),
    ({"surface": {"kind": "sphere"}, "tolerances": {"speed": 1.0}}, "speed"),
    ({"surface": {"kind": "sphere"}, "lambda_range": [5, 2]}, "lambda_range"),
    ({"surface": {"kind": "sphere"}, "path": [[0, 0], [1]]}, "path"),
])
def test_invalid_fields_are_named(raw, field):
    with pytest.raises(ConfigError, match=f"field '{field}'"):
        from_dict(raw)


def test_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "run.json"
    path.write_text('{\n  "surface": {"kind": "sphere"},\n  "m": 1,\n  "mesh": 1000\n}\n')
    with pytest.raises(ConfigError, match="line 4, field 'mesh'"):
        load(path)
    path.write_text('{\n  "surface": {"kind": "sphere"},\n  "m": 1,\n}\n')
    with pytest.raises(ConfigError, match="line 4, column 1"):
        load(path)

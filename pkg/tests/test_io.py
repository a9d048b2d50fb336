import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wulfflab import io


@given(a=arrays(float, (5, 7), elements=st.floats(-3, 3, allow_nan=False)))
def test_pgm_roundtrip_orientation(a, tmp_path_factory):
    path = tmp_path_factory.mktemp("pgm") / "a.pgm"
    io.write_pgm(path, a)
    assert path.read_bytes().startswith(b"P5\n5 7\n255\n")  # width = nx, height = ny
    b = io.read_pgm(path)
    assert b.shape == a.shape
    if a.max() > a.min():
        # the brightest pixel sits where the largest value is
        assert b.flat[np.argmax(a)] == 255
        assert b.flat[np.argmin(a)] == 0


def test_pgm_y_points_up(tmp_path):
    a = np.zeros((3, 4))
    a[0, 3] = 1.0  # x = 0, top row in y
    io.write_pgm(tmp_path / "a.pgm", a)
    raw = (tmp_path / "a.pgm").read_bytes().split(b"\n", 3)[3]
    img = np.frombuffer(raw, np.uint8).reshape(4, 3)
    assert img[0, 0] == 255


def test_json_is_deterministic_and_handles_nonfinite(tmp_path):
    obj = {"b": np.float64(1.5), "a": [np.int64(2), math.inf, math.nan], "c": np.bool_(True)}
    s = io.dumps(obj)
    assert s == io.dumps(dict(reversed(list(obj.items()))))
    assert '"inf"' in s and '"nan"' in s and s.index('"a"') < s.index('"b"')


def test_csv_columns(tmp_path):
    rows = [{"p": 1.5, "lambda1": 2.0, "x": 0}, {"p": 1.2, "lambda1": 1.0 / 3, "x": 1}]
    io.write_csv(tmp_path / "s.csv", rows, ["p", "lambda1"])
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "p,lambda1"
    assert float(lines[2].split(",")[1]) == 1.0 / 3


def test_svg_plot(tmp_path):
    io.svg_line_plot(tmp_path / "p.svg", [("lambda1", [1.5, 1.2, 1.1], [3.0, 2.5, 2.2])], "p", "lambda",
                     "sweep", hlines=[("h1", 2.0)])
    text = (tmp_path / "p.svg").read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polyline") == 1 and "stroke-dasharray" in text


def test_pgm_payload_starting_with_whitespace_bytes(tmp_path):
    a = np.full((3, 2), 10.0)  # byte 10 is '\n'
    a[0, 0] = 32.0  # ' '
    io.write_pgm(tmp_path / "w.pgm", a, lo=0, hi=255)
    np.testing.assert_array_equal(io.read_pgm(tmp_path / "w.pgm"), a.astype(np.uint8))

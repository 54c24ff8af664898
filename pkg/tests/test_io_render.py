import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rayforge import MapSpec
from rayforge import io as rio
from rayforge.core import CycleClass, PeriodicPointRecord
from rayforge.rays import Curve
from rayforge.render import RenderConfig, decode_pnm, escape_image, render, shade, thread_count

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(finite, finite)
def test_complex_flag_roundtrip(x, y):
    assert rio.parse_complex(rio.format_complex(complex(x, y))) == complex(x, y)


@pytest.mark.parametrize("bad", ["", "1,", ",2", "1,2,3", "a,b", "nan,0", "inf,1"])
def test_complex_flag_rejects(bad):
    with pytest.raises(ValueError):
        rio.parse_complex(bad)


def test_box():
    assert rio.parse_box("-1,1,-2,2") == (-1, 1, -2, 2)
    for bad in ("1,-1,0,1", "0,1,0", "0,1,1,1"):
        with pytest.raises(ValueError):
            rio.parse_box(bad)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=30))
@settings(max_examples=100)
def test_csv_byte_roundtrip(pts):
    t = np.arange(len(pts), dtype=float) * 0.37 + 1
    z = np.array([complex(a, b) for a, b in pts])
    text = rio.curve_to_csv(Curve("Ray", t, z))
    back = rio.curve_from_csv(text)
    assert rio.curve_to_csv(back) == text
    assert np.array_equal(back.z, z)


def test_csv_validation():
    with pytest.raises(ValueError):
        rio.curve_from_csv("x,y\n1,2\n")
    with pytest.raises(ValueError):
        rio.curve_from_csv("t,re,im\n1,0,0\n1,0,0\n")
    with pytest.raises(ValueError):
        rio.curve_from_csv("t,re,im\n1,nan,0\n")


def test_json_roundtrip_and_nan():
    recs = [PeriodicPointRecord(1.25 + 0.1j, 2, -3 + 1e-300j, CycleClass.REPELLING, 2.5e-17)]
    text = rio.periodic_points_to_json(recs)
    assert rio.periodic_points_from_json(text) == recs
    assert rio.periodic_points_to_json(rio.periodic_points_from_json(text)) == text
    with pytest.raises(ValueError):
        rio.dump_json({"x": math.nan})


def test_render_config_validation():
    with pytest.raises(ValueError):
        RenderConfig((1, 0, 0, 1), 10, 10)
    with pytest.raises(ValueError):
        RenderConfig((0, 1, 0, 1), 0, 10)
    with pytest.raises(ValueError):
        RenderConfig((0, 1, 0, 1), 10, 16385)
    with pytest.raises(ValueError):
        RenderConfig((0, 1, 0, 1), 10, 10, max_iter=0)


def test_thread_count_env():
    assert thread_count({"RAYFORGE_THREADS": "3"}) == 3
    assert thread_count({}) >= 1
    with pytest.raises(ValueError):
        thread_count({"RAYFORGE_THREADS": "0"})


def test_shade_scale():
    assert list(shade(np.array([0, 1, 50, 100]), 100)) == [0, 255, 1 + 254 * 50 // 99, 1]


def test_pgm_format_and_threads():
    m = MapSpec.exp(-1)
    cfg = RenderConfig((-4, 4, -4, 4), 64, 48, max_iter=50)
    one = render(m, cfg, threads=1)
    assert one.startswith(b"P5 64 48 255\n") and len(one) == len(b"P5 64 48 255\n") + 64 * 48
    assert render(m, cfg, threads=8) == one
    img = decode_pnm(one)
    assert img.shape == (48, 64)
    # the attracting basin of -e^z never escapes; far right escapes at once
    assert img[24, 32] == 0


def test_overlays_draw_in_color():
    m = MapSpec.exp(-1)
    cfg = RenderConfig((-4, 4, -4, 4), 80, 80, max_iter=30)
    pt = PeriodicPointRecord(0j, 1, 0j, CycleClass.REPELLING, 0.0)
    data = render(m, cfg, rays=[[-3 - 3j, 3 + 3j]], points=[pt])
    img = decode_pnm(data)
    assert data.startswith(b"P6 80 80 255\n") and img.shape == (80, 80, 3)
    red = (img[..., 0] == 255) & (img[..., 1] == 0) & (img[..., 2] == 0)
    green = (img[..., 1] == 255) & (img[..., 0] == 0)
    assert (red | green).sum() >= 61 + 6  # 61-pixel diagonal plus the square off it
    assert green.sum() == 9
    for s in np.linspace(-3, 3, 10):
        # a 1px line between rounded endpoints passes within one pixel of every point
        x, y = (int(np.floor(c + 0.5)) for c in cfg.to_pixel(complex(s, s)))
        assert (red | green)[y - 1 : y + 2, x - 1 : x + 2].any()

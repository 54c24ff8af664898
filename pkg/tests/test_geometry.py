import numpy as np
from hypothesis import given, strategies as st

from rayforge.geometry import clip_to_disk, hausdorff, head_in_disk, polyline_distance

coord = st.floats(-100, 100)
pts = st.lists(st.tuples(coord, coord), min_size=1, max_size=12).map(lambda v: np.array([complex(a, b) for a, b in v]))


def test_polyline_distance_segment():
    d = polyline_distance([1 + 1j, -1 + 0j, 3 + 0j, 0.5 - 2j], [0, 2])
    assert np.allclose(d, [1, 1, 1, 2])


@given(pts, pts)
def test_hausdorff_symmetric_and_zero_on_self(a, b):
    assert hausdorff(a, a) == 0
    assert hausdorff(a, b) == hausdorff(b, a)


@given(pts, pts, pts)
def test_hausdorff_triangle_on_vertices(a, b, c):
    # a polyline is at distance <= its vertices' distance, so compare vertex clouds
    vh = lambda x, y: max(np.abs(x[:, None] - y[None, :]).min(axis=1).max(), np.abs(y[:, None] - x[None, :]).min(axis=1).max())
    assert vh(a, c) <= vh(a, b) + vh(b, c) + 1e-9


def test_head_in_disk_interpolates_exit():
    z = np.array([0, 0.5, 2, 0.1])
    head = head_in_disk(z, 0, 1.0)
    assert np.allclose(head, [0, 0.5, 1.0])
    assert head_in_disk(np.array([3, 0]), 0, 1.0).size == 0
    assert list(clip_to_disk(z, 0, 1.0)) == [0, 0.5, 0.1]

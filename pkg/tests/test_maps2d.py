import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoivolume.geometry import Box2D, GeometryError
from hoivolume.maps2d import MAP_SIZE, box_mask, joint_cells, make_pose_map, make_spatial_map, union_frame

from helpers import random_pose


def raster_oracle(box, frame, size=MAP_SIZE):
    out = np.zeros((size, size))
    for r in range(size):
        for c in range(size):
            u = frame.u_min + (c + 0.5) * frame.width / size
            v = frame.v_min + (r + 0.5) * frame.height / size
            out[r, c] = float(box.u_min <= u <= box.u_max and box.v_min <= v <= box.v_max)
    return out


def test_human_box_is_union():
    m = make_spatial_map(Box2D(0, 0, 100, 200), Box2D(10, 20, 50, 60))
    assert m.shape == (2, 64, 64)
    assert np.all(m[0] == 1)
    assert 0 < m[1].sum() < 64 * 64


def test_disjoint_halves_mirror():
    m = make_spatial_map(Box2D(0, 0, 49, 100), Box2D(51, 0, 100, 100))
    assert np.array_equal(m[0], m[1][:, ::-1])
    assert not (m[0] * m[1]).any()


def test_nested_matches_oracle():
    b_h, b_o = Box2D(3.3, 7.1, 410.2, 380.9), Box2D(100.4, 120.6, 200.1, 150.2)
    m = make_spatial_map(b_h, b_o)
    frame = b_h.union(b_o)
    assert np.array_equal(m[0], raster_oracle(b_h, frame))
    assert np.array_equal(m[1], raster_oracle(b_o, frame))
    assert np.all(m[1] <= m[0])


def test_image_frame_option():
    frame = Box2D(0, 0, 640, 480)
    m = make_spatial_map(Box2D(0, 0, 320, 480), Box2D(320, 0, 640, 480), frame=frame)
    assert np.array_equal(m[0], raster_oracle(Box2D(0, 0, 320, 480), frame))


def test_edges_inclusive():
    frame = Box2D(0, 0, 64, 64)
    # box edges sit exactly on cell centers 0.5 and 1.5
    assert box_mask(Box2D(0.5, 0.5, 1.5, 1.5), frame).sum() == 4


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
def test_translation_invariance(dx, dy):
    rng = np.random.default_rng(0)
    b_h, b_o = Box2D(10, 20, 90, 200), Box2D(60, 5, 140, 80)
    pose = random_pose(rng)
    shift = lambda b: Box2D(b.u_min + dx, b.v_min + dy, b.u_max + dx, b.v_max + dy)
    moved = pose.copy()
    moved[:, :2] += [dx, dy]
    assert np.array_equal(make_spatial_map(b_h, b_o), make_spatial_map(shift(b_h), shift(b_o)))
    f0, f1 = union_frame(b_h, b_o), union_frame(shift(b_h), shift(b_o))
    assert np.allclose(make_pose_map(pose, f0), make_pose_map(moved, f1), atol=1e-12)
    assert np.allclose(joint_cells(pose[:, :2], f0), joint_cells(moved[:, :2], f1), atol=1e-6)


def test_center_joint_peak():
    frame = Box2D(0, 0, 100, 100)
    pose = np.zeros((17, 3))
    pose[:] = [50, 50, 1]
    maps = make_pose_map(pose, frame)
    assert np.unravel_index(np.argmax(maps[0]), (64, 64)) == (32, 32)
    assert maps[0, 32, 32] == 1.0
    assert all(np.array_equal(maps[0], maps[i]) for i in range(17))


def test_gaussian_values():
    frame = Box2D(0, 0, 64, 64)
    pose = np.zeros((17, 3))
    pose[:, :2] = [10.2, 20.7]
    pose[:, 2] = 1
    maps = make_pose_map(pose, frame, sigma=2.0)
    assert maps[0, 20, 12] == pytest.approx(np.exp(-4 / 8))
    assert maps[0, 23, 14] == pytest.approx(np.exp(-(9 + 16) / 8))


def test_invisible_joints_zero():
    pose = random_pose(np.random.default_rng(1))
    pose[:, 2] = 0
    assert not make_pose_map(pose, Box2D(0, 0, 100, 200)).any()
    pose[3, 2] = 1
    maps = make_pose_map(pose, Box2D(0, 0, 100, 200))
    assert maps[3].max() == 1.0 and not np.delete(maps, 3, axis=0).any()


def test_values_bounded():
    maps = make_pose_map(random_pose(np.random.default_rng(2)), Box2D(0, 0, 100, 200))
    assert maps.min() >= 0 and maps.max() <= 1


def test_bad_pose_shape():
    with pytest.raises(ValueError):
        make_pose_map(np.zeros((25, 3)), Box2D(0, 0, 1, 1))


def test_degenerate_box():
    with pytest.raises(GeometryError):
        make_spatial_map(Box2D.from_seq([0, 0, 0, 1]), Box2D(0, 0, 1, 1))

"""Two-channel box map and 17-channel pose heatmap inputs of the 2D spatial stream."""

import numpy as np

from .geometry import Box2D, GeometryError
from .joints import NUM_JOINTS

MAP_SIZE = 64


def _cell_centers(frame, size):
    u = frame.u_min + (np.arange(size) + 0.5) * frame.width / size
    v = frame.v_min + (np.arange(size) + 0.5) * frame.height / size
    return u, v


def box_mask(box, frame, size=MAP_SIZE):
    """``size x size`` 0/1 mask of cells whose centers lie inside ``box`` (edges inclusive)."""
    u, v = _cell_centers(frame, size)
    cols = (u >= box.u_min) & (u <= box.u_max)
    rows = (v >= box.v_min) & (v <= box.v_max)
    return (rows[:, None] & cols[None, :]).astype(float)


def make_spatial_map(b_h, b_o, frame=None, size=MAP_SIZE):
    """Human and object channels rasterized into ``frame``.

    ``frame`` defaults to the union box of the pair. Pass an image-sized
    :class:`Box2D` to rasterize in image coordinates instead.
    """
    if frame is None:
        try:
            frame = b_h.union(b_o)
        except GeometryError as exc:
            raise GeometryError(f"degenerate union box: {exc}") from None
    return np.stack([box_mask(b_h, frame, size), box_mask(b_o, frame, size)])


def joint_cells(pose2d, frame, size=MAP_SIZE):
    """Continuous cell coordinates ``(col, row)`` of each joint; cell ``j`` is centered at ``j``."""
    pose2d = np.asarray(pose2d, dtype=float)
    col = (pose2d[:, 0] - frame.u_min) / frame.width * size - 0.5
    row = (pose2d[:, 1] - frame.v_min) / frame.height * size - 0.5
    return np.stack([col, row], axis=1)


def make_pose_map(pose2d, frame, sigma=1.5, size=MAP_SIZE):
    """Unnormalized Gaussian heatmap per joint, peak 1 at the joint's cell.

    ``pose2d`` is ``17 x 3`` rows of ``(u, v, visibility)``; joints with
    visibility <= 0 produce an all-zero channel. A joint's cell is
    ``floor`` of its scaled position, so a joint at the frame center lands
    on cell ``(size/2, size/2)``. Joints outside the frame keep their
    off-grid center.
    """
    pose2d = np.asarray(pose2d, dtype=float)
    if pose2d.shape != (NUM_JOINTS, 3):
        raise ValueError(f"pose2d must be {NUM_JOINTS} x 3, got {pose2d.shape}")
    col = np.floor((pose2d[:, 0] - frame.u_min) / frame.width * size)
    row = np.floor((pose2d[:, 1] - frame.v_min) / frame.height * size)
    grid = np.arange(size, dtype=float)
    gy = np.exp(-((grid[None, :] - row[:, None]) ** 2) / (2 * sigma**2))
    gx = np.exp(-((grid[None, :] - col[:, None]) ** 2) / (2 * sigma**2))
    maps = gy[:, :, None] * gx[:, None, :]
    maps[pose2d[:, 2] <= 0] = 0.0
    return maps


def union_frame(b_h, b_o):
    return Box2D.union(b_h, b_o)

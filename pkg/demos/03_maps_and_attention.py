"""2D spatial inputs, the 2D joint attention and its tie to the 3D part attention."""

import numpy as np

from hoivolume import Box2D
from hoivolume.attention import (
    AttentionHead,
    assemble_att3d,
    attention_map_2d,
    joint_attention_2d,
    kl_attention_consistency,
    part_attention_3d,
    reweight,
)
from hoivolume.maps2d import joint_cells, make_pose_map, make_spatial_map, union_frame

rng = np.random.default_rng(0)

# %% Boxes are rasterized into their union box at 64x64.
b_h, b_o = Box2D(100, 40, 260, 420), Box2D(230, 200, 330, 280)
spatial = make_spatial_map(b_h, b_o)
print("spatial map:", spatial.shape, "human cells", spatial[0].sum(), "object cells", spatial[1].sum())

# %% A pose heatmap: one Gaussian bump per visible joint.
pose = np.column_stack([rng.uniform(110, 250, 17), rng.uniform(50, 410, 17), np.ones(17)])
pose[9, 2] = 0  # an occluded hip
frame = union_frame(b_h, b_o)
heat = make_pose_map(pose, frame)
print("pose map:", heat.shape, "peaks", heat.max(axis=(1, 2)))

# %% A stand-in conv feature grid and its attention map.
f2d = rng.standard_normal((64, 64, 32))
att2d = attention_map_2d(f2d)
print("attention sums to", att2d.sum())

# %% Joint attention: each joint weighs the map by 1 / (1 + distance).
a2d = joint_attention_2d(att2d, joint_cells(pose[:, :2], frame))
print("2D part attention:", np.round(a2d, 4))

# %% 3D side: per-point spatial features plus a human feature through the head.
head = AttentionHead.init(seed=0)
f3d_sp, f3d_h = rng.standard_normal((1228, 384)), rng.standard_normal(1024)
a3d = part_attention_3d(f3d_sp, f3d_h, head)
print("3D part attention:", np.round(a3d, 4))

loss, grads = kl_attention_consistency(a2d, a3d)
print("KL consistency:", loss, "| grad norms", {k: float(np.linalg.norm(g)) for k, g in grads.items()})

# %% Per-point attention re-weights the 3D features; sphere points keep weight 1.
labels = np.concatenate([rng.integers(1, 18, 916), np.full(312, 18)])
att3d = assemble_att3d(a3d, labels)
weighted = reweight(f3d_sp, att3d)
print("re-weighted features:", weighted.shape, "sphere rows unchanged:",
      np.array_equal(weighted[916:], f3d_sp[916:]))

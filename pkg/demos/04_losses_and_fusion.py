"""Triplet mining, the consistency losses, the weighted total and the final score."""

import numpy as np

from hoivolume.gradcheck import run_grad_check
from hoivolume.losses import (
    LossWeights,
    batch_breakdown,
    fuse_scores,
    labels_from_targets,
    mine_semi_hard,
)

rng = np.random.default_rng(0)
B, d, m = 8, 16, 600

# %% Each sample has a set of HOI labels; samples sharing one are positives.
targets = np.zeros((B, m))
for i in range(B):
    targets[i, rng.choice(6, size=rng.integers(1, 3), replace=False)] = 1
labels = labels_from_targets(targets)
print("label sets:", [sorted(s) for s in labels])

f2d, f3d = rng.standard_normal((B, d)), rng.standard_normal((B, d))
mined = mine_semi_hard(f2d, f3d, labels, labels)
print("(anchor, farthest positive, nearest negative):", mined.triplets, "skipped:", mined.skipped)

# %% A full batch through every loss.
simplex = rng.dirichlet(np.ones(17), size=B)
features = {"f2d_sp": f2d, "f3d_sp": f3d, "a2d": simplex, "a3d": rng.dirichlet(np.ones(17), size=B)}
scores = {k: rng.uniform(0.01, 0.99, (B, m)) for k in ("s2d_H", "s2d_O", "s2d_sp", "s3d_H", "s3d_sp", "s_joint")}
scores["targets"] = targets
br, _ = batch_breakdown(features, scores, LossWeights())
for k, v in br.to_dict().items():
    print(f"{k:>12}: {v:.6f}")

# %% Final scores: (H + O) * sp from the 2D stream, H + sp from the 3D stream, plus the joint score.
s2d, s3d, s = fuse_scores(*(scores[k][0] for k in ("s2d_H", "s2d_O", "s2d_sp", "s3d_H", "s3d_sp", "s_joint")))
print("top-5 HOIs for sample 0:", np.argsort(s)[::-1][:5])

# %% Every analytic gradient against central differences.
for name, err in run_grad_check(range(5)).items():
    print(f"{name:>9}: max relative error {err:.2e}")

"""Ranking poses by ambiguity and filtering implausible body fits."""

import numpy as np

from hoivolume.ambiguity import Pose2D, cluster_and_rank, combine_with_probe, monster_filter, procrustes_align

rng = np.random.default_rng(0)
template = Pose2D.from_array(rng.standard_normal((17, 2)) * 40)

# %% Procrustes recovers a rotated, scaled and shifted copy exactly.
th = 0.8
rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
copy = Pose2D.from_array(3.0 * template.joints @ rot.T + [200, 50])
al = procrustes_align(copy, template)
print(f"scale {al.scale:.4f}  residual {al.residual:.2e}")

# %% Two pose modes plus one odd sample; the odd one should rank first.
other = template.joints.copy()
other[:8] += 30
samples = [(f"a{i}", Pose2D.from_array(template.joints + rng.standard_normal((17, 2)))) for i in range(10)]
samples += [(f"b{i}", Pose2D.from_array(other + rng.standard_normal((17, 2)))) for i in range(10)]
odd = template.joints.copy()
odd[12:] -= 80
samples.append(("odd", Pose2D.from_array(odd)))

records = cluster_and_rank(samples, [template], k=2, seed=0)
for rec in records[:4]:
    print(f"{rec.sample_id:>4}  mean distance {rec.mean_distance:8.3f}")

# %% An external probe score can be blended with the distance rank.
for rec, rank, probe, combined in combine_with_probe(records[:3], {"odd": 0.2, "a3": 0.9}, weight=0.5):
    print(rec.sample_id, rank, probe, combined)

# %% Body fits whose latent code is far from the mean are flagged (farthest 10%).
emb = rng.standard_normal((50, 32))
emb[[7, 21]] *= 6
flags = monster_filter(emb, 0.10)
print("flagged:", np.flatnonzero(flags))

import numpy as np
import pytest

from hoivolume.geometry import SphereEstimate
from hoivolume.joints import (
    LEFT_EYE,
    LEFT_SHOULDER,
    NUM_BODY_POINTS,
    NUM_SPHERE_POINTS,
    OBJECT_LABEL,
    PART_WORDS,
    PELVIS,
    RIGHT_EYE,
    RIGHT_SHOULDER,
)
from hoivolume.volume import (
    BodyPoints,
    VolumeError,
    align_and_normalize,
    assign_part_sets,
    build_volume,
    downsample_body,
    fit_pca,
    load_embedding_table,
    normalizing_transform,
    pair_semantics,
    pca_reduce,
    sample_sphere_surface,
)

from helpers import CANONICAL_JOINTS, camera_body, fibonacci_sphere, random_rotation


def min_pairwise(points):
    d = np.linalg.norm(points[:, None] - points[None], axis=2)
    d[np.diag_indices(len(points))] = np.inf
    return d.min()


class TestDownsample:
    def test_exact_count_is_a_permutation(self):
        pts = np.random.default_rng(0).standard_normal((NUM_BODY_POINTS, 3))
        out = downsample_body(pts, seed=1)
        assert sorted(map(tuple, out)) == sorted(map(tuple, pts))

    def test_deterministic(self):
        pts = np.random.default_rng(0).standard_normal((3000, 3))
        assert np.array_equal(downsample_body(pts, seed=7), downsample_body(pts, seed=7))

    def test_subset_of_input(self):
        pts = np.random.default_rng(1).standard_normal((2000, 3))
        out = downsample_body(pts, seed=3)
        assert {tuple(p) for p in out} <= {tuple(p) for p in pts}

    def test_too_few_vertices(self):
        with pytest.raises(VolumeError):
            downsample_body(np.zeros((100, 3)))

    def test_spread_beats_random_subsets(self):
        sphere = fibonacci_sphere(10000)
        fps_min = min_pairwise(downsample_body(sphere, seed=0))
        rng = np.random.default_rng(0)
        baseline = [min_pairwise(sphere[rng.choice(10000, NUM_BODY_POINTS, replace=False)]) for _ in range(10)]
        assert fps_min >= max(baseline)


class TestSphereSampling:
    def test_on_unit_sphere(self):
        pts = sample_sphere_surface(SphereEstimate([0, 0, 0], 1.0), seed=0)
        assert pts.shape == (NUM_SPHERE_POINTS, 3)
        assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-9, rtol=0)

    def test_offset_sphere(self):
        est = SphereEstimate([1.0, -2.0, 7.0], 0.3)
        pts = sample_sphere_surface(est, seed=4)
        assert np.allclose(np.linalg.norm(pts - est.center, axis=1), 0.3, atol=1e-9, rtol=0)

    def test_deterministic(self):
        est = SphereEstimate([0, 0, 5], 2.0)
        assert np.array_equal(sample_sphere_surface(est, seed=3), sample_sphere_surface(est, seed=3))

    def test_mean_concentrates_at_center(self):
        est = SphereEstimate([0.5, 0.5, 4.0], 1.5)
        for seed in range(50):
            mean = sample_sphere_surface(est, seed=seed).mean(axis=0)
            assert np.linalg.norm(mean - est.center) < 0.2 * est.radius


def normalized_joints():
    j = CANONICAL_JOINTS - CANONICAL_JOINTS[PELVIS]
    return j / np.linalg.norm(j[LEFT_EYE] - j[RIGHT_EYE])


class TestAlign:
    def test_already_normalized_is_identity(self):
        j = normalized_joints()
        pts = np.random.default_rng(0).standard_normal((20, 3))
        body, sphere, joints = align_and_normalize(pts, pts[:5], j, gravity=(0, 0, -1))
        assert np.allclose(body, pts, atol=1e-9) and np.allclose(joints, j, atol=1e-9)

    def test_frame_conditions(self):
        joints, verts, g = camera_body(np.random.default_rng(2))
        _, _, j = align_and_normalize(verts, verts[:3], joints, g)
        assert np.linalg.norm(j[PELVIS]) < 1e-9
        s = j[LEFT_SHOULDER] - j[RIGHT_SHOULDER]
        assert np.arctan2(np.linalg.norm(s[1:]), s[0]) < 1e-6
        assert abs(np.linalg.norm(j[LEFT_EYE] - j[RIGHT_EYE]) - 1) < 1e-9

    def test_tilted_shoulders_align_in_horizontal_plane(self):
        j = normalized_joints().copy()
        j[LEFT_SHOULDER, 2] += 0.3
        _, _, out = align_and_normalize(j, j, j, gravity=(0, 0, -1))
        s = out[LEFT_SHOULDER] - out[RIGHT_SHOULDER]
        assert abs(s[1]) < 1e-12 and s[0] > 0 and s[2] > 0

    def test_invariance_to_similarity(self):
        rng = np.random.default_rng(5)
        joints, verts, g = camera_body(rng)
        ref = align_and_normalize(verts, verts[:10], joints, g)
        for _ in range(20):
            q, s, t = random_rotation(rng), rng.uniform(0.2, 5), rng.standard_normal(3) * 10
            moved = [s * x @ q.T + t for x in (verts, verts[:10], joints)]
            out = align_and_normalize(*moved, q @ g)
            for a, b in zip(out, ref):
                assert np.allclose(a, b, atol=1e-7, rtol=0)

    def test_pupil_scale_law(self):
        j = normalized_joints() * 2.0
        rot, origin, scale = normalizing_transform(j, (0, 0, -1))
        assert scale == pytest.approx(0.5)
        _, _, out = align_and_normalize(j, j, j, (0, 0, -1))
        assert np.allclose(out, j / 2, atol=1e-12)

    def test_idempotent(self):
        joints, verts, g = camera_body(np.random.default_rng(9))
        once = align_and_normalize(verts, verts[:4], joints, g)
        twice = align_and_normalize(*once, (0, 0, -1))
        for a, b in zip(once, twice):
            assert np.allclose(a, b, atol=1e-9)

    def test_coincident_pupils(self):
        j = normalized_joints().copy()
        j[LEFT_EYE] = j[RIGHT_EYE]
        with pytest.raises(VolumeError, match="pupil"):
            align_and_normalize(j, j, j)

    def test_gravity_along_shoulders(self):
        j = normalized_joints()
        with pytest.raises(VolumeError, match="parallel"):
            align_and_normalize(j, j, j, gravity=(1, 0, 0))

    def test_zero_gravity(self):
        j = normalized_joints()
        with pytest.raises(VolumeError):
            align_and_normalize(j, j, j, gravity=(0, 0, 0))


class TestPartSets:
    def test_coincident_point(self):
        j = normalized_joints()
        pts = np.vstack([j, np.zeros((3, 3))])
        labels = assign_part_sets(pts, j, num_body=17)
        assert list(labels[:17]) == list(range(1, 18))
        assert all(labels[17:] == OBJECT_LABEL)

    def test_tie_goes_to_lower_index(self):
        joints = np.zeros((17, 3))
        joints[:, 0] = np.arange(17) * 10.0
        pts = np.array([[5.0, 0, 0], [15.0, 0, 0]])
        assert list(assign_part_sets(pts, joints, num_body=2)) == [1, 2]

    def test_partition_covers_all_points(self):
        joints, verts, g = camera_body(np.random.default_rng(1))
        vol = build_volume(BodyPoints(verts, joints), SphereEstimate(joints[7] + [0, 0, 0.1], 0.1), "cup", seed=0,
                           gravity=g)
        sets = vol.sets()
        assert sum(len(v) for v in sets.values()) == 1228
        assert len(np.unique(np.concatenate(list(sets.values())))) == 1228
        assert np.all(vol.labels[NUM_BODY_POINTS:] == OBJECT_LABEL)


class TestPCA:
    def test_full_rank_reconstruction(self):
        x = np.random.default_rng(0).standard_normal((12, 5))
        p = fit_pca(x, 5)
        recon = p.transform(x) @ p.components + p.mean
        assert np.abs(recon - x).max() < 1e-8

    def test_rank_one(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(20)[:, None] * rng.standard_normal(6)[None, :]
        assert fit_pca(x, 1).explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-8)

    def test_matches_eigendecomposition_oracle(self):
        x = np.random.default_rng(2).standard_normal((10, 5))
        c = x - x.mean(axis=0)
        w, v = np.linalg.eigh(c.T @ c / (len(x) - 1))
        v = v[:, np.argsort(w)[::-1][:2]]
        for i in range(2):
            v[:, i] *= np.sign(v[np.argmax(np.abs(v[:, i])), i])
        assert np.abs(pca_reduce(x, 2) - c @ v).max() < 1e-6

    def test_sign_rule(self):
        comps = fit_pca(np.random.default_rng(3).standard_normal((30, 8)), 4).components
        assert all(c[np.argmax(np.abs(c))] > 0 for c in comps)

    def test_k_too_large(self):
        with pytest.raises(VolumeError):
            pca_reduce(np.zeros((3, 5)), 4)


@pytest.fixture
def embedding_table(tmp_path):
    rng = np.random.default_rng(0)
    words = sorted(set(PART_WORDS)) + ["bottle", "cup", "horse", "dog", "kite", "chair", "train", "book"]
    path = tmp_path / "emb.txt"
    path.write_text("".join(f"{w} " + " ".join(f"{v:.6f}" for v in rng.standard_normal(300)) + "\n" for w in words))
    return path


def small_volume(category, seed=0):
    joints, verts, g = camera_body(np.random.default_rng(seed))
    return build_volume(BodyPoints(verts, joints), SphereEstimate(joints[7] + [0, 0, 0.2], 0.1), category,
                        seed=seed, gravity=g)


class TestSemantics:
    def test_object_set_carries_category(self, embedding_table):
        table = load_embedding_table(embedding_table)
        vol = pair_semantics(small_volume("bottle"), table, 6)
        names = list(table)
        reduced = pca_reduce(np.stack([table[n] for n in names]), 6)
        assert np.allclose(vol.semantics[OBJECT_LABEL - 1], reduced[names.index("bottle")])
        assert np.allclose(vol.semantics[4], reduced[names.index("hand")])
        assert vol.point_semantics().shape == (1228, 6)

    def test_same_category_same_semantics(self, embedding_table):
        table = load_embedding_table(embedding_table)
        a = pair_semantics(small_volume("cup", 0), table, 4)
        b = pair_semantics(small_volume("cup", 1), table, 4)
        assert np.array_equal(a.semantics[-1], b.semantics[-1])

    def test_missing_part(self, embedding_table):
        table = load_embedding_table(embedding_table)
        del table["hand"]
        with pytest.raises(VolumeError, match="hand"):
            pair_semantics(small_volume("cup"), table, 4)


class TestBuildVolume:
    def test_counts_and_frame(self):
        vol = small_volume("cup", 3)
        assert vol.points.shape == (1228, 3)
        assert np.linalg.norm(vol.joints[PELVIS]) < 1e-9
        assert abs(np.linalg.norm(vol.joints[LEFT_EYE] - vol.joints[RIGHT_EYE]) - 1) < 1e-9
        assert np.allclose(np.linalg.norm(vol.sphere - vol.sphere_center, axis=1), vol.sphere_radius)

    def test_deterministic(self):
        a, b = small_volume("cup", 4), small_volume("cup", 4)
        assert np.array_equal(a.points, b.points) and np.array_equal(a.labels, b.labels)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph
from dream.anchors import (
    POOL_ALL,
    POOL_MERGED,
    AnchorSet,
    build_candidates,
    homogeneity,
    rescaled_cosine,
    score_all,
    select_anchors,
    select_top_k,
)
from dream.errors import ConfigError
from oracles import cos01, exhaustive_top_k, loop_scores


def tie_heavy_instance(rng, n_cand):
    """A small palette of directions reused with repeats, plus zero vectors."""
    palette = rng.normal(size=(4, 3))
    palette[0] = 0.0
    z = palette[rng.integers(0, 4, size=n_cand + 1)]
    z[0] = rng.normal(size=3)  # target
    return z


class TestRescaledCosine:
    def test_known_values(self):
        assert rescaled_cosine([1, 0], [2, 0]) == 1.0
        assert rescaled_cosine([1, 0], [0, 3]) == 0.5
        assert rescaled_cosine([1, 0], [-1, 0]) == 0.0

    def test_zero_vector_is_half(self):
        assert rescaled_cosine([0, 0], [1, 2]) == 0.5
        assert rescaled_cosine([0, 0], [0, 0]) == 0.5

    @settings(max_examples=100)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
    def test_range_and_symmetry(self, a, b):
        s = rescaled_cosine(a, b)
        assert 0.0 <= s <= 1.0
        assert s == pytest.approx(rescaled_cosine(b, a), abs=1e-15)
        assert s == pytest.approx(cos01(a, b), abs=1e-12)


class TestSelectTopK:
    def test_tie_goes_to_lower_index(self):
        z = np.array([[1.0, 0], [0, 1], [0, 1], [0, 2], [1, 1]])
        # 1, 2, 3 all sit at 0.5; 4 is the best
        assert select_top_k(0, [3, 1, 2, 4], z, 2).tolist() == [4, 1]

    def test_k_larger_than_pool(self):
        z = np.eye(3)
        assert sorted(select_top_k(0, [1, 2], z, 10).tolist()) == [1, 2]

    def test_k_zero_or_empty(self):
        z = np.eye(3)
        assert select_top_k(0, [1, 2], z, 0).tolist() == []
        assert select_top_k(0, [], z, 3).tolist() == []

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_exhaustive_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n_cand = int(rng.integers(0, 13))
        z = tie_heavy_instance(rng, n_cand)
        cands = rng.permutation(np.arange(1, n_cand + 1))
        k = int(rng.integers(1, 5))
        assert sorted(select_top_k(0, cands, z, k).tolist()) == exhaustive_top_k(0, cands, z, k)


class TestHomogeneity:
    def test_all_ones(self):
        z = np.array([[1.0, 0], [2, 0], [5, 0]])
        assert homogeneity(0, [1, 2], z, 0.04) == 1.0

    def test_half_tau_one(self):
        z = np.array([[1.0, 0], [0, 1], [0, 7]])
        assert homogeneity(0, [1, 2], z, 1.0) == 0.5

    def test_half_sharpened(self):
        z = np.array([[1.0, 0], [0, 1], [0, 7]])
        assert homogeneity(0, [1, 2], z, 0.04) == pytest.approx(2.9802322387695312e-08, rel=1e-12)  # 0.5**25

    def test_empty_anchor_set(self):
        assert homogeneity(0, [], np.eye(2), 0.04) == 0.0

    def test_union_counts_shared_anchor_once(self):
        z = np.array([[1.0, 0], [1, 0], [0, 1]])
        a = AnchorSet(ap=np.array([1, 2]), at=np.array([1]))
        assert homogeneity(0, a, z, 1.0) == pytest.approx(0.75)

    def test_bad_tau(self):
        with pytest.raises(ConfigError):
            homogeneity(0, [1], np.eye(2), 0.0)

    @settings(max_examples=200)
    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.01, 5.0), st.floats(0.01, 5.0))
    def test_monotone_and_sharpening(self, m1, m2, t1, t2):
        lo_m, hi_m = sorted((m1, m2))
        lo_t, hi_t = sorted((t1, t2))
        assert lo_m ** (1 / lo_t) <= hi_m ** (1 / lo_t)
        assert hi_m ** (1 / lo_t) <= hi_m ** (1 / hi_t) * (1 + 1e-12)


class TestCandidates:
    def test_proximity_excludes_target_and_other_labels(self, path3):
        c = build_candidates(path3, [0, 1, 2], [1, 0, 1], d_max=1)
        assert c.cp[0].tolist() == [2]
        assert c.cp[1].tolist() == []
        assert c.ct[0].tolist() == [1]

    def test_topology_includes_unlabeled(self, path3):
        c = build_candidates(path3, [0], [0], d_max=4)
        assert c.ct[0].tolist() == [1, 2]

    def test_pools(self, path3):
        c = build_candidates(path3, [0, 2], [0, 0], d_max=1)
        assert c.pool(POOL_MERGED)[0].tolist() == [1, 2]
        assert c.pool(POOL_ALL)[1].tolist() == [0, 1]

    def test_bad_d_max(self, path3):
        with pytest.raises(ConfigError):
            build_candidates(path3, [0], [0], d_max=0)


class TestScoreAll:
    @pytest.mark.parametrize("seed", range(8))
    def test_matches_loop_reference(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 40, 0.08)
        targets = np.sort(rng.choice(40, size=15, replace=False))
        labels = rng.integers(0, 3, size=15)
        c = build_candidates(g, targets, labels, d_max=2)
        z = np.maximum(rng.normal(size=(40, 6)), 0)
        z[rng.integers(0, 40, size=3)] = 0.0
        hs = score_all(c, z, 3, 2, 0.5)
        np.testing.assert_allclose(hs.scores, loop_scores(c, z, 3, 2, 0.5), rtol=1e-10, atol=1e-300)
        for pos, t in enumerate(targets.tolist()):
            a = select_anchors(t, c, z, 3, 2)
            assert hs.anchors_of(pos, "proximity") == a.ap.tolist()
            assert hs.anchors_of(pos, "topology") == a.at.tolist()
            assert hs.anchor_count[pos] == len(a.union)
            assert hs.scores[pos] == pytest.approx(homogeneity(t, a, z, 0.5), rel=1e-12)

    def test_all_pool_skips_target(self):
        z = np.array([[1.0, 0], [1, 0], [0, 1], [1, 0.1]])
        g = random_graph(np.random.default_rng(0), 4, 0.0, 2)
        c = build_candidates(g, [0], [0], d_max=1)
        hs = score_all(c, z, 0, 0, 1.0, pools=[(POOL_ALL, 2)])
        assert hs.anchors_of(0, POOL_ALL) == [1, 3]

    def test_empty_targets_score_zero(self):
        g = random_graph(np.random.default_rng(0), 3, 0.0, 2)
        c = build_candidates(g, [0, 1], [0, 1], d_max=2)
        hs = score_all(c, np.ones((3, 2)), 5, 5, 0.04)
        assert hs.scores.tolist() == [0.0, 0.0]
        assert hs.empty.all()

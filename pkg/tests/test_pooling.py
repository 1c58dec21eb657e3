from __future__ import annotations

import math

import numpy as np
import pytest

from fgvq import pooling
from fgvq.errors import InvalidInputError, InvalidWeightsError


class TestWeightedPool:
    def test_uniform_weights_equal_global_pool(self):
        rng = np.random.RandomState(200)
        fmap = rng.standard_normal((8, 14, 14))
        pooled = pooling.weighted_pool(fmap, np.ones((14, 14)))
        expected = pooling.global_pool(fmap)
        np.testing.assert_allclose(pooled.vector, expected.vector, atol=1e-6)

    def test_one_hot_weight_selects_exactly(self):
        rng = np.random.RandomState(201)
        fmap = rng.standard_normal((5, 14, 14))
        weights = np.zeros((14, 14))
        weights[3, 9] = 1.0
        pooled = pooling.weighted_pool(fmap, weights)
        np.testing.assert_array_equal(pooled.vector, fmap[:, 3, 9])

    def test_small_grid_direct_evaluation(self):
        fmap = np.array([[[1.0, 2.0], [3.0, 4.0]],
                         [[0.0, 0.0], [0.0, 4.0]]])
        pooled = pooling.weighted_pool(fmap, np.ones((2, 2)))
        np.testing.assert_allclose(pooled.vector, [2.5, 1.0], atol=1e-12)

    def test_negative_weight_rejected(self):
        fmap = np.zeros((2, 14, 14))
        weights = np.ones((14, 14))
        weights[0, 0] = -1e-9
        with pytest.raises(InvalidWeightsError):
            pooling.weighted_pool(fmap, weights)

    def test_zero_sum_falls_back_to_uniform(self):
        rng = np.random.RandomState(202)
        fmap = rng.standard_normal((4, 14, 14))
        pooled = pooling.weighted_pool(fmap, np.zeros((14, 14)))
        np.testing.assert_allclose(pooled.vector, pooling.global_pool(fmap).vector,
                                   atol=1e-12)

    def test_convex_combination_bounds(self):
        rng = np.random.RandomState(203)
        for _ in range(20):
            fmap = rng.standard_normal((16, 14, 14))
            weights = rng.rand(14, 14)
            pooled = pooling.weighted_pool(fmap, weights)
            lo = fmap.reshape(16, -1).min(axis=1)
            hi = fmap.reshape(16, -1).max(axis=1)
            assert np.all(pooled.vector >= lo)
            assert np.all(pooled.vector <= hi)

    def test_weight_scale_invariance(self):
        rng = np.random.RandomState(204)
        fmap = rng.standard_normal((6, 14, 14))
        weights = rng.rand(14, 14)
        base = pooling.weighted_pool(fmap, weights)
        for scale in (1e-6, 0.5, 3.0, 1e6):
            scaled = pooling.weighted_pool(fmap, scale * weights)
            np.testing.assert_allclose(scaled.vector, base.vector, atol=1e-6)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            pooling.weighted_pool(np.zeros((2, 14, 14)), np.ones((7, 7)))

    def test_branch_tag(self):
        fmap = np.zeros((2, 14, 14))
        assert pooling.weighted_pool(fmap, np.ones((14, 14)), branch="str").branch == "str"
        with pytest.raises(InvalidInputError):
            pooling.weighted_pool(fmap, np.ones((14, 14)), branch="bogus")


class TestGlobalPool:
    def test_constant_map(self):
        pooled = pooling.global_pool(np.full((3, 14, 14), 0.7))
        np.testing.assert_allclose(pooled.vector, 0.7, atol=1e-12)
        assert pooled.branch == "raw"

    def test_small_grid_direct_evaluation(self):
        fmap = np.array([[[1.0, 2.0], [3.0, 4.0]],
                         [[0.0, 0.0], [0.0, 4.0]]])
        np.testing.assert_allclose(pooling.global_pool(fmap).vector, [2.5, 1.0],
                                   atol=1e-12)

    def test_zero_map(self):
        np.testing.assert_array_equal(pooling.global_pool(np.zeros((4, 14, 14))).vector,
                                      np.zeros(4))


class TestTemporalPool:
    def _features(self, vectors, branch="art"):
        return [pooling.FrameFeature(vector=np.asarray(v, dtype=np.float64),
                                     branch=branch) for v in vectors]

    def test_single_frame_identity(self):
        feats = self._features([[1.0, 2.0, 3.0]])
        np.testing.assert_array_equal(pooling.temporal_pool(feats).vector, [1.0, 2.0, 3.0])

    def test_two_frame_mean(self):
        feats = self._features([[1.0, 3.0], [3.0, 5.0]])
        np.testing.assert_allclose(pooling.temporal_pool(feats).vector, [2.0, 4.0])

    def test_matches_extended_precision_oracle(self):
        rng = np.random.RandomState(205)
        vectors = rng.standard_normal((16, 64))
        pooled = pooling.temporal_pool(self._features(vectors))
        oracle = np.array([math.fsum(vectors[:, c]) / 16.0 for c in range(64)])
        np.testing.assert_allclose(pooled.vector, oracle, atol=1e-6)

    def test_permutation_invariance(self):
        rng = np.random.RandomState(206)
        vectors = rng.standard_normal((16, 32))
        base = pooling.temporal_pool(self._features(vectors))
        shuffled = vectors[rng.permutation(16)]
        other = pooling.temporal_pool(self._features(shuffled))
        np.testing.assert_allclose(other.vector, base.vector, atol=1e-6)

    def test_empty_list_rejected(self):
        with pytest.raises(InvalidInputError):
            pooling.temporal_pool([])

    def test_branch_mismatch_rejected(self):
        feats = self._features([[1.0]], branch="art") + self._features([[2.0]], branch="raw")
        with pytest.raises(InvalidInputError):
            pooling.temporal_pool(feats)

    def test_length_mismatch_rejected(self):
        feats = self._features([[1.0, 2.0], [1.0]])
        with pytest.raises(InvalidInputError):
            pooling.temporal_pool(feats)

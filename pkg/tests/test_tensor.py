import numpy as np
import pytest

from dvpool import ContractError, FeatureMap, FeatureVector, Segment, concat, region_max, region_mean


def box(values) -> FeatureMap:
    return FeatureMap(np.asarray(values, dtype=np.float64))


class TestFeatureMap:
    def test_accepts_rank_3_and_4(self):
        assert FeatureMap(np.zeros((2, 3, 4))).spatial_rank == 2
        assert FeatureMap(np.zeros((2, 3, 4, 5))).spatial_rank == 3

    def test_rejects_other_ranks(self):
        for shape in ((4,), (3, 3), (1, 2, 3, 4, 5)):
            with pytest.raises(ContractError):
                FeatureMap(np.zeros(shape))

    def test_rejects_empty_axes(self):
        with pytest.raises(ContractError):
            FeatureMap(np.zeros((0, 2, 2)))
        with pytest.raises(ContractError):
            FeatureMap(np.zeros((2, 2, 0)))

    def test_rejects_non_finite(self):
        bad = np.ones((1, 2, 2))
        bad[0, 1, 1] = np.nan
        with pytest.raises(ContractError):
            FeatureMap(bad)
        bad[0, 1, 1] = np.inf
        with pytest.raises(ContractError):
            FeatureMap(bad)

    def test_widens_float32(self):
        m = FeatureMap(np.ones((1, 2, 2), dtype=np.float32))
        assert m.data.dtype == np.float64

    def test_data_is_read_only(self):
        m = box([[[1.0, 2.0], [3.0, 4.0]]])
        with pytest.raises(ValueError):
            m.data[0, 0, 0] = 9.0

    def test_shape_properties(self):
        m = FeatureMap(np.zeros((3, 4, 5, 6)))
        assert m.channels == 3
        assert m.spatial_shape == (4, 5, 6)
        assert m.shape == (3, 4, 5, 6)


class TestRegionReductions:
    def test_mean_full_range(self):
        m = box([[[1.0, 2.0], [3.0, 4.0]]])
        assert region_mean(m, (0, 1), [(0, 2), (0, 2)]) == 2.5

    def test_mean_of_constant(self):
        m = FeatureMap(np.full((3, 4, 4), 7.25))
        assert region_mean(m, (1, 3), [(0, 2), (1, 4)]) == 7.25

    def test_mean_addressed_block(self):
        # channels [0,2) x rows [0,1) x cols [0,2) of 0..7 selects {0,1,4,5}
        m = FeatureMap(np.arange(8, dtype=np.float64).reshape(2, 2, 2))
        assert region_mean(m, (0, 2), [(0, 1), (0, 2)]) == 2.5

    def test_max_full_range(self):
        m = box([[[1.0, 2.0], [3.0, 4.0]]])
        assert region_max(m, (0, 1), [(0, 2), (0, 2)]) == 4.0

    def test_max_singleton(self):
        m = FeatureMap(np.arange(8, dtype=np.float64).reshape(2, 2, 2))
        assert region_max(m, (1, 2), [(0, 1), (1, 2)]) == 5.0

    def test_max_addressed_block(self):
        m = FeatureMap(np.arange(8, dtype=np.float64).reshape(2, 2, 2))
        assert region_max(m, (0, 2), [(0, 1), (0, 2)]) == 5.0

    def test_rejects_empty_and_out_of_bounds(self):
        m = FeatureMap(np.zeros((2, 3, 3)))
        with pytest.raises(ContractError):
            region_mean(m, (1, 1), [(0, 3), (0, 3)])
        with pytest.raises(ContractError):
            region_mean(m, (0, 2), [(0, 4), (0, 3)])
        with pytest.raises(ContractError):
            region_max(m, (0, 3), [(0, 3), (0, 3)])
        with pytest.raises(ContractError):
            region_mean(m, (0, 2), [(2, 1), (0, 3)])
        with pytest.raises(ContractError):
            region_mean(m, (0, 2), [(0, 3)])

    def test_full_mean_matches_naive_sum(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            shape = tuple(rng.integers(1, 6, size=rng.choice([3, 4])))
            data = rng.normal(size=shape)
            m = FeatureMap(data)
            got = region_mean(m, (0, shape[0]), [(0, s) for s in shape[1:]])
            naive = float(sum(data.ravel().tolist()) / data.size)
            assert got == pytest.approx(naive, rel=1e-12)

    def test_invariant_under_permutation_inside_region(self):
        rng = np.random.default_rng(12)
        data = rng.normal(size=(4, 5, 5))
        m = FeatureMap(data)
        ranges = ((1, 3), [(0, 4), (2, 5)])
        before_mean = region_mean(m, *ranges)
        before_max = region_max(m, *ranges)
        block = data[1:3, 0:4, 2:5].ravel()
        shuffled = data.copy()
        shuffled[1:3, 0:4, 2:5] = rng.permutation(block).reshape(2, 4, 3)
        m2 = FeatureMap(shuffled)
        assert region_mean(m2, *ranges) == pytest.approx(before_mean, abs=1e-12)
        assert region_max(m2, *ranges) == before_max


class TestFeatureVector:
    def test_concat_two_vectors(self):
        a = FeatureVector.single("a", np.array([1.0, 2.0]))
        b = FeatureVector.single("b", np.array([3.0]))
        out = concat([a, b])
        assert out.data.tolist() == [1.0, 2.0, 3.0]
        assert out.provenance == (Segment("a", 0, 2), Segment("b", 2, 1))

    def test_concat_single_is_identity(self):
        a = FeatureVector.single("a", np.array([1.0, 2.0]))
        assert concat([a]) is a

    def test_concat_offsets(self):
        vs = [FeatureVector.single(n, np.arange(k, dtype=np.float64))
              for n, k in (("p", 2), ("q", 1), ("r", 3))]
        out = concat(vs)
        assert len(out) == 6
        assert [s.offset for s in out.provenance] == [0, 2, 3]

    def test_concat_rejects_empty_list(self):
        with pytest.raises(ContractError):
            concat([])

    def test_segment_read_back(self):
        rng = np.random.default_rng(13)
        parts = [rng.normal(size=k) for k in (3, 1, 4)]
        out = concat([FeatureVector.single(str(i), p) for i, p in enumerate(parts)])
        for i, p in enumerate(parts):
            np.testing.assert_array_equal(out.segment(i), p)

    def test_rejects_gapped_segments(self):
        with pytest.raises(ContractError):
            FeatureVector(np.zeros(4), (Segment("a", 0, 2), Segment("b", 3, 1)))
        with pytest.raises(ContractError):
            FeatureVector(np.zeros(4), (Segment("a", 0, 2),))

    def test_rejects_non_1d(self):
        with pytest.raises(ContractError):
            FeatureVector(np.zeros((2, 2)), (Segment("a", 0, 4),))

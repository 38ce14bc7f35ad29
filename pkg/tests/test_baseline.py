import numpy as np
import pytest

from groupedsae import GroupedSample, Midpoints, Thresholds, gini, naive_mean
from _oracles import gini_pairwise


@pytest.fixture
def th5():
    return Thresholds(np.array([3.0, 5.0, 7.0, 10.0]))


class TestMidpoints:
    def test_default_top_class(self, th5):
        mids = Midpoints.from_thresholds(th5)
        np.testing.assert_allclose(mids.cbar, [1.5, 4.0, 6.0, 8.5, 11.5])

    def test_override(self, th5):
        mids = Midpoints.from_thresholds(th5, cG_override=23.0)
        assert mids.cbar[-1] == 23.0
        np.testing.assert_allclose(mids.cbar[:-1], [1.5, 4.0, 6.0, 8.5])

    def test_two_class_top(self):
        mids = Midpoints.from_thresholds(Thresholds(np.array([4.0])))
        np.testing.assert_allclose(mids.cbar, [2.0, 6.0])


class TestNaiveMean:
    def test_single_class(self, th5):
        sample = GroupedSample([12, 0, 0, 0, 0])
        assert naive_mean(sample, Midpoints.from_thresholds(th5)) == 1.5

    def test_hand_arithmetic(self, th5):
        sample = GroupedSample([1, 1, 0, 0, 0])
        assert naive_mean(sample, Midpoints.from_thresholds(th5)) == pytest.approx(2.75)

    def test_empty_sample_rejected(self, th5):
        with pytest.raises(ValueError):
            naive_mean(GroupedSample([0, 0, 0, 0, 0]), Midpoints.from_thresholds(th5))


class TestGini:
    def test_constant_vector(self):
        assert gini([5.0, 5.0, 5.0]) == pytest.approx(0.0, abs=1e-15)

    def test_zero_one(self):
        assert gini([0.0, 1.0]) == pytest.approx(0.5, abs=1e-15)

    def test_one_two_three(self):
        assert gini([1.0, 2.0, 3.0]) == pytest.approx(2.0 / 9.0, abs=1e-12)

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            z = rng.lognormal(0.5, 1.0, size=rng.integers(2, 40))
            assert gini(z) == pytest.approx(gini_pairwise(z), abs=1e-10)

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        z = rng.lognormal(1.0, 0.7, size=100)
        for a in (1e-6, 0.5, 3.0, 1e6):
            assert gini(a * z) == pytest.approx(gini(z), abs=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        z = rng.lognormal(1.0, 0.7, size=57)
        assert gini(rng.permutation(z)) == gini(z)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            gini([0.0, 0.0])

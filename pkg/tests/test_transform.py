import numpy as np
import pytest

from groupedsae import Thresholds
from groupedsae.transform import BoxCox


class TestForward:
    def test_log_branch_at_one(self):
        assert BoxCox(0.0).forward(1.0) == 0.0

    def test_linear_case(self):
        assert BoxCox(1.0).forward(3.0) == pytest.approx(2.0, abs=1e-14)

    def test_half_power(self):
        # ((4^0.5) - 1) / 0.5 evaluated exactly
        assert BoxCox(0.5).forward(4.0) == pytest.approx(2.0, abs=1e-14)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            BoxCox(0.5).forward(0.0)
        with pytest.raises(ValueError):
            BoxCox(0.5, shift=2.0).forward(1.5)

    def test_shifted(self):
        assert BoxCox(0.0, shift=-1.0).forward(0.0) == 0.0

    def test_tiny_kappa_uses_log_branch(self):
        z = np.linspace(0.1, 100, 500)
        np.testing.assert_allclose(BoxCox(1e-9).forward(z), np.log(z), atol=1e-12)


class TestInverse:
    def test_log_branch(self):
        assert BoxCox(0.0).inverse(0.0) == 1.0

    def test_linear_case(self):
        assert BoxCox(1.0).inverse(2.0) == pytest.approx(3.0, abs=1e-14)

    def test_half_power(self):
        assert BoxCox(0.5).inverse(2.0) == pytest.approx(4.0, rel=1e-12)

    def test_out_of_range_signals(self):
        with pytest.raises(ValueError):
            BoxCox(0.5).inverse(-2.0)  # boundary itself is out of range
        with pytest.raises(ValueError):
            BoxCox(-0.5).inverse(2.0)

    def test_forward_inverse_identity(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            kappa = rng.uniform(-1, 1)
            bc = BoxCox(kappa)
            v = rng.uniform(-0.9 / max(kappa, 0.3) if kappa > 0 else -5.0, 5.0)
            if kappa < 0:
                v = min(v, -1.0 / kappa - 1e-3)
            assert bc.forward(bc.inverse(v)) == pytest.approx(v, abs=1e-12)


class TestRoundTripProperty:
    def test_ten_thousand_random_points(self):
        rng = np.random.default_rng(7)
        kappas = rng.uniform(-1, 1, 10000)
        z = rng.uniform(1e-6, 1e6, 10000)
        for kappa, zi in zip(kappas, z):
            bc = BoxCox(kappa)
            v = bc.forward(zi)
            err = abs(bc.forward(bc.inverse(v)) - v)
            assert err <= 1e-10

    def test_monotone_in_z(self):
        z = np.linspace(0.01, 1e4, 2000)
        for kappa in (-1.0, -0.3, 0.0, 1e-9, 0.3, 1.0, 2.0):
            v = BoxCox(kappa).forward(z)
            assert np.all(np.diff(v) > 0)

    def test_continuity_at_zero_kappa(self):
        z = np.linspace(0.1, 100, 1000)
        v_eps = BoxCox(1e-8).forward(z)
        np.testing.assert_allclose(v_eps, np.log(z), atol=1e-6)


class TestTransformedCut:
    def test_zero_cut_log(self):
        assert BoxCox(0.0).transformed_cut(0.0) == -np.inf

    def test_zero_cut_positive_kappa(self):
        # limit of the formula as z -> 0+ at kappa = 0.5
        assert BoxCox(0.5).transformed_cut(0.0) == -2.0

    def test_infinite_cut(self):
        assert BoxCox(0.0).transformed_cut(np.inf) == np.inf
        assert BoxCox(0.5).transformed_cut(np.inf) == np.inf
        assert BoxCox(-0.5).transformed_cut(np.inf) == 2.0

    def test_full_cut_vector(self):
        th = Thresholds(np.array([3.0, 5.0]))
        cuts = BoxCox(0.0).transformed_cuts(th)
        np.testing.assert_allclose(cuts, [-np.inf, np.log(3), np.log(5), np.inf])

    def test_shifted_support_endpoint(self):
        th = Thresholds(np.array([3.0, 5.0]))
        cuts = BoxCox(0.0, shift=-2.0).transformed_cuts(th)
        np.testing.assert_allclose(cuts, [-np.inf, np.log(5), np.log(7), np.inf])

    def test_threshold_below_shift_rejected(self):
        th = Thresholds(np.array([3.0, 5.0]))
        with pytest.raises(ValueError):
            BoxCox(0.0, shift=4.0).transformed_cuts(th)

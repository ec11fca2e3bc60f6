"""
Tests for the predicted step-size interval and linear rate.
"""

import math

import pytest

from pdnet.algorithms import preset, rate_prediction
from pdnet.algorithms.rates import contraction_factor
from pdnet.errors import AssumptionError, ConfigError
from pdnet.testing import BaseTestCase

# Second eigenvalue of the Metropolis 10-ring: 1/3 + 2/3 cos(2 pi / 10)
RING10_W2 = 1.0 / 3.0 + 2.0 / 3.0 * math.cos(math.pi / 5.0)


class TestRatePrediction(BaseTestCase):
    """Test cases for rate_prediction."""

    def test_nids_ring10(self, ring10):
        """Test NIDS at kappa = 10 against the closed-form values."""
        pred = rate_prediction(preset("nids", ring10), 1.0, 10.0)
        assert pred.eta == pytest.approx(1.0, abs=1e-10)
        assert pred.gamma_star == pytest.approx(2.0 / 11.0)
        assert pred.gamma == pred.gamma_star
        assert pred.q_star == pytest.approx(9.0 / 11.0)
        assert pred.lambda_opt == pytest.approx(81.0 / 121.0, abs=1e-10)
        assert pred.lambda_comm == pytest.approx((1.0 + RING10_W2) / 2.0, abs=1e-12)
        assert pred.rate == pytest.approx(0.93634, abs=1e-5)
        assert pred.contractive

    def test_nids_interval(self, ring10):
        """Test the admissible interval (0, 0.2) for NIDS at kappa = 10."""
        pred = rate_prediction(preset("nids", ring10), 1.0, 10.0)
        assert pred.gamma_lo == pytest.approx(0.0, abs=1e-10)
        assert pred.gamma_hi == pytest.approx(0.2, abs=1e-10)
        assert pred.admissible

    def test_custom_gamma(self, ring10):
        """Test q at a user step inside and outside the interval."""
        t = preset("nids", ring10)
        inside = rate_prediction(t, 1.0, 10.0, gamma=0.1)
        assert inside.q == pytest.approx(0.9)
        assert inside.lambda_opt == pytest.approx(0.81, abs=1e-10)
        outside = rate_prediction(t, 1.0, 10.0, gamma=0.25)
        assert not outside.admissible
        assert outside.q == pytest.approx(1.5)
        assert not outside.contractive

    def test_optimal_step_minimizes_q(self, path3):
        """Test gamma* gives the smallest q over a scan of the interval."""
        t = preset("extra", path3)
        pred = rate_prediction(t, 1.0, 2.0)
        d_min, d_max = t.d_bounds
        for i in range(1, 50):
            gamma = pred.gamma_hi * i / 50.0
            assert contraction_factor(d_min, d_max, gamma, 1.0, 2.0) >= pred.q_star - 1e-12

    def test_to_dict(self, ring10):
        """Test the serialized form names the rate lambda."""
        data = rate_prediction(preset("nids", ring10), 1.0, 10.0).to_dict()
        assert "rate" not in data
        assert data["lambda"] == pytest.approx(0.93634, abs=1e-5)
        assert data["admissible"] is True

    def test_rejects_bad_constants(self, ring10):
        """Test mu > L and non-positive gamma raise ConfigError."""
        t = preset("nids", ring10)
        with pytest.raises(ConfigError):
            rate_prediction(t, 2.0, 1.0)
        with pytest.raises(ConfigError):
            rate_prediction(t, 1.0, 10.0, gamma=0.0)

    def test_invalid_triple(self, ring10):
        """Test a triple failing validation raises AssumptionError."""
        with pytest.raises(AssumptionError):
            rate_prediction(preset("extra", ring10), 1.0, 10.0)

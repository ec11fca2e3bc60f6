"""
Tests for the unified primal-dual iterate and its eliminated forms.
"""

import numpy as np
import pytest

from pdnet.algorithms import PrimalDualSolver, preset, rate_prediction
from pdnet.algorithms.unified import TRAJECTORY_COLUMNS
from pdnet.certification import certify, empirical_rate, fix_residual
from pdnet.errors import ConfigError, ConvergenceError, DimensionError, DivergenceError
from pdnet.problems import NonsmoothTerm
from pdnet.testing import BaseTestCase
from pdnet.topology import lazy

GAMMA = 0.02


def extra_reference(W, grad, gamma, iters, x0):
    """x^1 = W x^0 - a g(x^0); x^{k+2} = (I + W) x^{k+1} - (I + W)/2 x^k - a (g^{k+1} - g^k)."""
    eye = np.eye(W.shape[0])
    xs = [x0, W @ x0 - gamma * grad(x0)]
    while len(xs) <= iters:
        x_prev, x_curr = xs[-2], xs[-1]
        xs.append((eye + W) @ x_curr - 0.5 * (eye + W) @ x_prev - gamma * (grad(x_curr) - grad(x_prev)))
    return xs


def exact_diffusion_reference(W, grad, gamma, iters, x0):
    """Adapt, correct, combine with (I + W)/2 and psi^0 = x^0."""
    W_bar = 0.5 * (np.eye(W.shape[0]) + W)
    xs, psi_prev = [x0], x0
    for _ in range(iters):
        x = xs[-1]
        psi = x - gamma * grad(x)
        phi = psi + x - psi_prev
        xs.append(W_bar @ phi)
        psi_prev = psi
    return xs


def diging_reference(W, grad, gamma, iters, x0):
    """Gradient tracking: x^{k+1} = W x^k - a y^k, y^{k+1} = W y^k + g^{k+1} - g^k, y^0 = g(x^0)."""
    xs, y = [x0], grad(x0)
    for _ in range(iters):
        x = xs[-1]
        x_next = W @ x - gamma * y
        y = W @ y + grad(x_next) - grad(x)
        xs.append(x_next)
    return xs


class TestPresetFidelity(BaseTestCase):
    """Test the unified iterate reproduces the textbook recursions."""

    @pytest.mark.parametrize(
        "name, reference",
        [
            ("extra", extra_reference),
            ("nids", exact_diffusion_reference),
            ("diging", diging_reference),
        ],
    )
    def test_matches_reference(self, ring10, name, reference):
        """Test x^k agrees with the standalone recursion for 100 iterations."""
        w = lazy(ring10)
        p = self.problem(m=10, d=3)
        trajectory = PrimalDualSolver(preset(name, w), p, GAMMA).run(100, keep_states=True)
        expected = reference(w.entries, p.gradient_stack, GAMMA, 100, np.zeros((10, 3)))
        for state, x in zip(trajectory.states, expected):
            np.testing.assert_allclose(state.x, x, atol=1e-10, err_msg=f"{name} at k={state.k}")
        assert len(trajectory.states) == 101

    def test_matches_reference_with_non_commuting_hessians(self, ring10):
        """Test the recursions still agree when local Hessians share no eigenbasis."""
        w = lazy(ring10)
        p = self.problem(m=10, d=3, shared_basis=False)
        for name, reference in (
            ("extra", extra_reference),
            ("nids", exact_diffusion_reference),
            ("diging", diging_reference),
        ):
            trajectory = PrimalDualSolver(preset(name, w), p, GAMMA).run(100, keep_states=True)
            expected = reference(w.entries, p.gradient_stack, GAMMA, 100, np.zeros((10, 3)))
            for state, x in zip(trajectory.states, expected):
                np.testing.assert_allclose(state.x, x, atol=1e-10, err_msg=f"{name} at k={state.k}")


class TestEliminatedForms(BaseTestCase):
    """Test the dual-eliminated recursions against the full iterate."""

    @pytest.mark.parametrize("nonsmooth", [None, NonsmoothTerm.l1(0.1)])
    def test_z_recursion(self, ring10, rng, nonsmooth):
        """Test the z-only recursion tracks the primal-dual iterate for 50 steps."""
        p = self.problem(nonsmooth=nonsmooth)
        solver = PrimalDualSolver(preset("nids", ring10), p, 2.0 / 11.0)
        z0 = rng.standard_normal((10, 5))
        states = solver.run(50, z0=z0, keep_states=True).states
        path = solver.eliminated_path(50, z0=z0)
        assert len(path) == 51
        for state, z in zip(states, path):
            np.testing.assert_allclose(state.z, z, atol=1e-10)

    def test_x_recursion_smooth(self, ring10, rng):
        """Test the x-only recursion for G = 0."""
        p = self.problem()
        solver = PrimalDualSolver(preset("nids", ring10), p, 2.0 / 11.0)
        states = solver.run(50, z0=rng.standard_normal((10, 5)), keep_states=True).states
        x_prev, x_curr = states[0].x, states[1].x
        for state in states[2:]:
            x_prev, x_curr = x_curr, solver.step_smooth(x_prev, x_curr)
            np.testing.assert_allclose(x_curr, state.x, atol=1e-10)

    def test_x_recursion_needs_smooth_problem(self, ring10):
        """Test the x-only recursion rejects a nonsmooth term."""
        p = self.problem(nonsmooth=NonsmoothTerm.l1(0.1))
        solver = PrimalDualSolver(preset("nids", ring10), p, GAMMA)
        with pytest.raises(ConfigError):
            solver.step_smooth(np.zeros((10, 5)), np.zeros((10, 5)))

    def test_inconsistent_history(self, ring10):
        """Test an x that is not prox(z) is rejected."""
        p = self.problem(nonsmooth=NonsmoothTerm.l1(1.0))
        solver = PrimalDualSolver(preset("nids", ring10), p, GAMMA)
        z = np.full((10, 5), 0.01)
        with pytest.raises(ConvergenceError):
            solver.step_eliminated(z, z, x_prev=z, x_curr=z)


class TestIterate(BaseTestCase):
    """Test cases for runs of the unified iterate."""

    def test_dual_column_sums_stay_zero(self, ring10):
        """Test 1^T y^k stays at rounding level."""
        p = self.problem(nonsmooth=NonsmoothTerm.l1(0.1))
        trajectory = PrimalDualSolver(preset("nids", ring10), p, 2.0 / 11.0).run(300)
        assert trajectory.max_dual_sum <= 1e-12

    def test_nids_rate_on_ring(self, ring10):
        """Test the fitted rate of NIDS at gamma* stays under the prediction."""
        t = preset("nids", ring10)
        p = self.problem()
        pred = rate_prediction(t, p.mu, p.L)
        trajectory = PrimalDualSolver(t, p, pred.gamma).run(300)
        assert empirical_rate(trajectory).rate <= pred.rate + 0.02

    def test_nids_beats_extra_on_ill_conditioned_ring(self, ring10):
        """Test NIDS at gamma* fits a rate no worse than EXTRA at its stable step, same seed."""
        p = self.problem(L=100.0)
        nids = preset("nids", ring10)
        pred = rate_prediction(nids, p.mu, p.L)
        fast = PrimalDualSolver(nids, p, pred.gamma).run(600)
        slow = PrimalDualSolver(preset("extra", ring10), p, 0.5 / p.L).run(600)
        assert fast.err_sq[-1] < fast.err_sq[0]
        assert slow.err_sq[-1] < slow.err_sq[0]
        assert empirical_rate(fast).rate <= empirical_rate(slow).rate

    def test_composite_convergence(self, ring10):
        """Test the l1 problem converges to the centralized minimizer with small KKT residuals."""
        t = preset("nids", ring10)
        p = self.problem(nonsmooth=NonsmoothTerm.l1(0.1))
        pred = rate_prediction(t, p.mu, p.L)
        x_star = p.reference_solution()
        trajectory = PrimalDualSolver(t, p, pred.gamma).run(1200, x_star=x_star)

        assert trajectory.kkt_primal[-1] <= 1e-7
        assert trajectory.kkt_dual[-1] <= 1e-7
        np.testing.assert_allclose(trajectory.final.x, np.tile(x_star, (10, 1)), atol=1e-7)
        early = empirical_rate(trajectory.err_sq[:300], tail=1.0)
        assert early.slope < 0.0

    def test_certified_run(self, ring10):
        """Test a long enough NIDS run passes certification."""
        t = preset("nids", ring10)
        p = self.problem()
        pred = rate_prediction(t, p.mu, p.L)
        report = certify(PrimalDualSolver(t, p, pred.gamma).run(800), pred)
        assert report.passed
        assert report.lambda_pred == pred.rate

    def test_broken_sum_has_wrong_fixed_point(self, ring10):
        """Test 1^T A 1 != m converges to a fixed point that is not optimal."""
        t = preset("nids", ring10, a_scale=0.9)
        p = self.problem()
        gamma = 2.0 / 11.0
        trajectory = PrimalDualSolver(t, p, gamma).run(1500)
        fix = fix_residual(t, p, gamma, trajectory.final.x)
        assert fix.consensus <= 1e-8
        assert fix.aggregate <= 1e-8
        assert trajectory.kkt_dual[-1] > 1e-2

    def test_trajectory_rows(self, ring10):
        """Test rows follow the CSV columns and start at k = 1."""
        trajectory = PrimalDualSolver(preset("nids", ring10), self.problem(), GAMMA).run(5)
        assert len(trajectory) == 5
        assert trajectory.iters == [1, 2, 3, 4, 5]
        assert all(len(row) == len(TRAJECTORY_COLUMNS) for row in trajectory.rows())
        np.testing.assert_array_equal(trajectory.column("iter"), np.arange(1, 6))
        assert trajectory.summary()["iters"] == 5

    def test_zero_iterations(self, ring10):
        """Test iters = 0 gives an empty trajectory."""
        trajectory = PrimalDualSolver(preset("nids", ring10), self.problem(), GAMMA).run(0)
        assert len(trajectory) == 0
        assert trajectory.final.k == 0

    def test_divergence(self, ring10):
        """Test an oversized step raises DivergenceError naming the iterate."""
        solver = PrimalDualSolver(preset("nids", ring10), self.problem(), 10.0)
        with pytest.raises(DivergenceError) as info:
            solver.run(500)
        assert info.value.exit_code == 3

    def test_initial_dual_outside_range(self, ring10):
        """Test y^0 with nonzero column sums is rejected."""
        solver = PrimalDualSolver(preset("nids", ring10), self.problem(), GAMMA)
        with pytest.raises(ConfigError, match="range"):
            solver.initial_state(y0=np.ones((10, 5)))

    def test_initial_dual_in_range(self, ring10, rng):
        """Test a centered y^0 is accepted."""
        solver = PrimalDualSolver(preset("nids", ring10), self.problem(), GAMMA)
        y0 = rng.standard_normal((10, 5))
        y0 -= y0.mean(axis=0)
        np.testing.assert_array_equal(solver.initial_state(y0=y0).y, y0)

    def test_dimension_checks(self, ring10, path3):
        """Test mismatched sizes raise DimensionError."""
        with pytest.raises(DimensionError):
            PrimalDualSolver(preset("nids", path3), self.problem(), GAMMA)
        solver = PrimalDualSolver(preset("nids", ring10), self.problem(), GAMMA)
        with pytest.raises(DimensionError):
            solver.initial_state(z0=np.zeros((10, 4)))

    def test_rejects_nonpositive_step(self, ring10):
        """Test gamma must be positive."""
        with pytest.raises(ConfigError):
            PrimalDualSolver(preset("nids", ring10), self.problem(), 0.0)

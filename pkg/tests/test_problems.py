"""
Tests for smooth costs, nonsmooth terms and composite problems.
"""

import numpy as np
import pytest

from pdnet.errors import ConfigError, DimensionError
from pdnet.problems import CompositeProblem, NonsmoothTerm, QuadraticCost, random_problem
from pdnet.problems.terms import interval_distance
from pdnet.testing import BaseTestCase


class TestQuadraticCost(BaseTestCase):
    """Test cases for QuadraticCost."""

    def test_constants(self):
        """Test mu and L are the extreme eigenvalues of Q."""
        cost = QuadraticCost(np.diag([2.0, 5.0]), np.array([1.0, -1.0]))
        assert cost.mu == pytest.approx(2.0)
        assert cost.L == pytest.approx(5.0)
        np.testing.assert_allclose(cost.gradient(np.array([1.0, 1.0])), [1.0, 6.0])

    def test_rejects_indefinite(self):
        """Test Q must be positive definite."""
        with pytest.raises(ConfigError):
            QuadraticCost(np.diag([1.0, -1.0]), np.zeros(2))

    def test_rejects_shape_mismatch(self):
        """Test Q and b must agree on d."""
        with pytest.raises(DimensionError):
            QuadraticCost(np.eye(3), np.zeros(2))


class TestNonsmoothTerm(BaseTestCase):
    """Test cases for the closed-form proximal maps."""

    def test_zero_prox_is_identity(self):
        """Test prox of G = 0 is the identity."""
        v = np.array([[1.0, -2.0], [0.5, 0.0]])
        np.testing.assert_array_equal(NonsmoothTerm.zero().prox(v, 0.3), v)

    def test_l1_soft_threshold(self):
        """Test l1 prox is soft thresholding at gamma * weight."""
        g = NonsmoothTerm.l1(0.5)
        np.testing.assert_allclose(g.prox(np.array([3.0, -0.5, 1.0]), 2.0), [2.0, 0.0, 0.0])
        assert g.value(np.array([1.0, -2.0])) == pytest.approx(1.5)

    def test_box_projection(self):
        """Test box prox is clipping and G is an indicator."""
        g = NonsmoothTerm.box(-1.0, [1.0, 2.0])
        np.testing.assert_allclose(g.prox(np.array([-3.0, 3.0]), 1.0), [-1.0, 2.0])
        assert g.value(np.array([0.0, 0.0])) == 0.0
        assert g.value(np.array([0.0, 5.0])) == float("inf")

    def test_prox_needs_positive_step(self):
        """Test gamma must be positive."""
        with pytest.raises(ConfigError):
            NonsmoothTerm.l1(1.0).prox(np.zeros(2), 0.0)

    def test_unknown_kind(self):
        """Test unknown kinds are rejected."""
        with pytest.raises(ConfigError):
            NonsmoothTerm("huber")

    def test_l1_subdifferential(self):
        """Test the l1 subdifferential is [-w, w] at zero and w sign(x) elsewhere."""
        lo, hi = NonsmoothTerm.l1(0.2).subdifferential_bounds(np.array([0.0, 1.0, -3.0]))
        np.testing.assert_allclose(lo, [-0.2, 0.2, -0.2])
        np.testing.assert_allclose(hi, [0.2, 0.2, -0.2])

    def test_box_subdifferential(self):
        """Test the box normal cone opens at active bounds."""
        lo, hi = NonsmoothTerm.box(0.0, 1.0).subdifferential_bounds(np.array([0.0, 0.5, 1.0]))
        assert lo.tolist() == [-np.inf, 0.0, 0.0]
        assert hi.tolist() == [0.0, 0.0, np.inf]

    def test_interval_distance(self):
        """Test the distance to a coordinatewise interval."""
        d = interval_distance(np.array([-2.0, 0.0, 3.0]), np.full(3, -1.0), np.full(3, 1.0))
        np.testing.assert_allclose(d, [1.0, 0.0, 2.0])

    def test_dict_form(self):
        """Test a term survives its dictionary form."""
        g = NonsmoothTerm.from_dict(NonsmoothTerm.l1(0.1).to_dict())
        assert g.kind == "l1" and g.weight == 0.1


class TestCompositeProblem(BaseTestCase):
    """Test cases for CompositeProblem."""

    def test_random_problem_constants(self):
        """Test generated problems have exactly the requested mu and L."""
        p = self.problem(m=6, d=4, mu=1.0, L=10.0)
        assert (p.m, p.d) == (6, 4)
        assert p.mu == pytest.approx(1.0, rel=1e-12)
        assert p.L == pytest.approx(10.0, rel=1e-12)
        assert p.kappa == pytest.approx(10.0, rel=1e-12)
        eigs = np.linalg.eigvalsh(p.average_hessian)
        assert eigs[0] == pytest.approx(1.0, rel=1e-10)
        assert eigs[-1] == pytest.approx(10.0, rel=1e-10)

    def test_independent_bases(self):
        """Test per-agent bases give non-commuting Hessians with the same mu and L."""
        p = self.problem(m=4, d=3, shared_basis=False)
        Q0, Q1 = p.hessians[0], p.hessians[1]
        assert np.linalg.norm(Q0 @ Q1 - Q1 @ Q0) > 1e-6
        assert p.mu == pytest.approx(1.0, rel=1e-10)
        assert p.L == pytest.approx(10.0, rel=1e-10)
        eigs = np.linalg.eigvalsh(p.average_hessian)
        assert eigs[0] > 1.0 + 1e-6

    def test_scalar_problem_alternates(self):
        """Test d = 1 agents alternate between mu and L."""
        p = random_problem(4, 1, 2.0, 8.0)
        assert [c.L for c in p.costs] == pytest.approx([2.0, 8.0, 2.0, 8.0])

    def test_seeded(self):
        """Test the same seed gives the same instance."""
        a, b = self.problem(seed=5), self.problem(seed=5)
        np.testing.assert_array_equal(a.hessians, b.hessians)
        np.testing.assert_array_equal(a.offsets, b.offsets)

    def test_gradient_stack(self):
        """Test row i of the stacked gradient is Q_i x_i - b_i."""
        p = self.problem(m=3, d=2)
        x = np.arange(6.0).reshape(3, 2)
        grad = p.gradient_stack(x)
        for i, cost in enumerate(p.costs):
            np.testing.assert_allclose(grad[i], cost.gradient(x[i]), atol=1e-14)

    def test_gradient_stack_shape(self):
        """Test a mismatched stack is rejected."""
        with pytest.raises(DimensionError):
            self.problem(m=3, d=2).gradient_stack(np.zeros((2, 2)))

    def test_mixed_dimensions_rejected(self):
        """Test all costs must share d."""
        with pytest.raises(DimensionError):
            CompositeProblem([QuadraticCost(np.eye(2), np.zeros(2)), QuadraticCost(np.eye(3), np.zeros(3))])

    def test_reference_solution_smooth(self):
        """Test the smooth minimizer solves the normal equations."""
        p = self.problem()
        x = p.reference_solution()
        np.testing.assert_allclose(p.average_gradient(x), 0.0, atol=1e-12)

    def test_reference_solution_l1(self):
        """Test the l1 minimizer satisfies 0 in grad F + dG."""
        p = self.problem(nonsmooth=NonsmoothTerm.l1(0.5))
        x = p.reference_solution()
        lo, hi = p.nonsmooth.subdifferential_bounds(x)
        assert np.linalg.norm(interval_distance(-p.average_gradient(x), lo, hi)) <= 1e-9

    def test_reference_solution_box(self):
        """Test the box minimizer is feasible and optimal."""
        p = self.problem(nonsmooth=NonsmoothTerm.box(-0.1, 0.1))
        x = p.reference_solution()
        assert np.all(np.abs(x) <= 0.1 + 1e-12)
        assert p.objective(x) <= p.objective(np.clip(x + 1e-3, -0.1, 0.1)) + 1e-12

    def test_objective(self):
        """Test F + G at a point."""
        p = CompositeProblem(
            [QuadraticCost(np.eye(1), np.ones(1)), QuadraticCost(3 * np.eye(1), np.zeros(1))],
            NonsmoothTerm.l1(1.0),
        )
        # F(2) = ((2 - 2) + 6) / 2 = 3, G(2) = 2
        assert p.objective(np.array([2.0])) == pytest.approx(5.0)

    def test_consensus_solution(self):
        """Test the stacked optimum repeats x* on every row."""
        p = self.problem(m=4, d=3)
        stacked = p.consensus_solution()
        assert stacked.shape == (4, 3)
        np.testing.assert_allclose(stacked - stacked[0], 0.0)

    def test_save_and_load(self, tmp_path):
        """Test a problem file reproduces the instance."""
        p = self.problem(m=3, d=2, nonsmooth=NonsmoothTerm.l1(0.1))
        path = tmp_path / "problem.json"
        p.save(path)
        q = CompositeProblem.load(path)
        np.testing.assert_allclose(q.hessians, p.hessians)
        assert q.nonsmooth.kind == "l1"

    def test_seeded_document(self):
        """Test a seed-only document regenerates the instance."""
        p = CompositeProblem.from_dict({"m": 3, "d": 2, "mu": 1.0, "L": 4.0, "seed": 9})
        np.testing.assert_array_equal(p.hessians, random_problem(3, 2, 1.0, 4.0, seed=9).hessians)

    def test_document_missing_keys(self):
        """Test incomplete documents raise ConfigError."""
        with pytest.raises(ConfigError, match="missing"):
            CompositeProblem.from_dict({"m": 3})

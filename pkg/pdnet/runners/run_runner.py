"""
Runner for a single certified run of the unified iterate.
"""

import logging
from typing import Any, Dict

from ..algorithms.rates import rate_prediction
from ..algorithms.unified import TRAJECTORY_COLUMNS, PrimalDualSolver
from ..algorithms.weights import require_valid
from ..certification import certify, fix_residual
from ..topology import spectral_info
from .base_runner import BaseRunner

logger = logging.getLogger(__name__)


class RunRunner(BaseRunner):
    """Run one preset on one problem and certify the result."""

    command = "run"

    def generate(self) -> bool:
        config = self.config
        w = config.graph.build(self.seed)
        problem = config.problem.build(w.m, self.seed)
        triple = config.preset.build(w)

        print(f"🧪 Running {triple.label} on {w.m} agents (d={problem.d}, kappa={problem.kappa:.4g})")
        certificate = require_valid(triple, problem.mu, problem.L)
        gamma = None if config.gamma == "star" else float(config.gamma)
        prediction = rate_prediction(triple, problem.mu, problem.L, gamma)
        if not prediction.admissible:
            logger.warning(
                "gamma=%.6g lies outside (%.6g, %.6g)",
                prediction.gamma,
                prediction.gamma_lo,
                prediction.gamma_hi,
            )

        x_star = problem.reference_solution()
        solver = PrimalDualSolver(triple, problem, prediction.gamma)
        trajectory = solver.run(config.iters, x_star=x_star)
        report = certify(trajectory, prediction, config.rate_slack, config.kkt_tol)

        assert trajectory.final is not None
        fix = fix_residual(triple, problem, prediction.gamma, trajectory.final.x)
        info = spectral_info(w, triple.C)

        document: Dict[str, Any] = report.to_dict()
        document.update(
            {
                "prediction": prediction.to_dict(),
                "validation": certificate.to_dict(),
                "fix_residual": {"consensus": fix.consensus, "aggregate": fix.aggregate},
                "network": {
                    "m": w.m,
                    "rho_com": info.rho_com,
                    "lambda2_of_C": info.lambda2_of_C,
                },
                "problem": {
                    "d": problem.d,
                    "mu": problem.mu,
                    "L": problem.L,
                    "nonsmooth": problem.nonsmooth.to_dict(),
                },
                "iters": config.iters,
                "seed": self.seed,
            }
        )

        self.write_csv("trajectory.csv", TRAJECTORY_COLUMNS, trajectory.rows())
        self.write_json("certification.json", document)
        self.copy_template_file(
            "run_summary.md.j2",
            "summary.md",
            {
                "report": report,
                "prediction": prediction,
                "final": trajectory.summary(),
                "m": w.m,
                "problem": problem,
                "rho_com": info.rho_com,
            },
        )
        return report.passed

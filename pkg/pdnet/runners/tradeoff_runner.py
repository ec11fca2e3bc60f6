"""
Runner for the gossip-rounds sweep and its end-to-end rate checks.
"""

from typing import Any, Dict, List

from ..tradeoff import TRADEOFF_COLUMNS, end_to_end, sample_end_to_end, sweep
from .base_runner import BaseRunner


class TradeoffRunner(BaseRunner):
    """Sweep (rho_com, rho_opt) and optionally run the chebyshev preset at the chosen K."""

    command = "tradeoff"

    def generate(self) -> bool:
        spec = self.config.tradeoff
        grid = spec.grid()

        print(f"📊 Sweeping {len(grid)} (rho_com, rho_opt) pairs")
        points = sweep(grid)
        self.write_csv("tradeoff.csv", TRADEOFF_COLUMNS, [p.to_row() for p in points])

        passed = True
        runs: List[Dict[str, Any]] = []
        if spec.end_to_end:
            for target in sample_end_to_end(spec.rho_opt_values()):
                print(f"🧪 End-to-end check at rho_opt={target:g} on a {spec.m}-agent ring")
                result = end_to_end(target, m=spec.m, d=spec.d, iters=spec.iters, seed=self.seed)
                runs.append(result.to_dict())
            passed = all(r["pass"] for r in runs)
            self.write_json("end_to_end.json", {"pass": passed, "runs": runs, "seed": self.seed})

        slow = [p for p in points if p.rho_com >= 0.5]
        self.copy_template_file(
            "tradeoff_summary.md.j2",
            "summary.md",
            {
                "count": len(points),
                "cheby_wins": sum(p.k_cheby <= p.k_plain for p in slow),
                "slow_count": len(slow),
                "max_plain": max(p.k_plain for p in points),
                "max_cheby": max(p.k_cheby for p in points),
                "max_baseline": max(p.k_baseline for p in points),
                "runs": runs,
                "passed": passed,
            },
        )
        return passed

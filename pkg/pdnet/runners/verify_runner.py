"""
Runner for the operator-splitting checks.
"""

from typing import Any, Dict, List

from ..splitting import verify_all
from .base_runner import BaseRunner


class VerifyRunner(BaseRunner):
    """Check the lifted operator factors and the contraction chain for every configured preset."""

    command = "verify"

    def generate(self) -> bool:
        spec = self.config.verify
        trials = self.config.trial_count or self.settings.trials

        print(f"🔍 Verifying {len(spec.presets)} presets on sizes {list(spec.sizes)} with {trials} trials")
        report = verify_all(
            presets=spec.presets,
            sizes=spec.sizes,
            trials=trials,
            seed=self.seed,
            d=spec.d,
            mu=spec.mu,
            L=spec.L,
            nonsmooth=spec.nonsmooth,
            q_scale=spec.q_scale,
            lambda_scale=spec.lambda_scale,
        )
        report["seed"] = self.seed
        report["q_scale"] = spec.q_scale
        report["lambda_scale"] = spec.lambda_scale

        rows: List[Dict[str, Any]] = []
        for run in report["runs"]:
            row: Dict[str, Any] = {
                "preset": run.get("label", run["preset"]),
                "m": run["m"],
                "status": run["status"],
            }
            if run["status"] == "checked":
                row["failed"] = [name for name, check in run["checks"].items() if not check["pass"]]
                row["passed"] = run["passed"]
            else:
                row["reason"] = run["reason"]
            rows.append(row)

        self.write_json("verification.json", report)
        self.copy_template_file(
            "verify_summary.md.j2",
            "summary.md",
            {"rows": rows, "passed": report["pass"], "trials": trials, "spec": spec},
        )
        return bool(report["pass"])

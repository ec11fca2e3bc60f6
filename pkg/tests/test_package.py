"""
Tests for the package surface and the error hierarchy.
"""

import pdnet
from pdnet.errors import (
    AssumptionError,
    ConfigError,
    ConvergenceError,
    DimensionError,
    DivergenceError,
    GraphError,
    PdnetError,
)
from pdnet.testing import BaseTestCase


class TestPackage(BaseTestCase):
    """Test cases for the top-level package."""

    def test_version(self):
        """Test the package exposes a version string."""
        assert pdnet.__version__ == "0.1.0"

    def test_exports(self):
        """Test every name in __all__ resolves."""
        for name in pdnet.__all__:
            assert getattr(pdnet, name) is not None

    def test_templates_ship_with_package(self):
        """Test the summary templates are package data."""
        from pathlib import Path

        templates = Path(pdnet.__file__).parent / "templates"
        names = {p.name for p in templates.glob("*.j2")}
        assert names == {"run_summary.md.j2", "verify_summary.md.j2", "tradeoff_summary.md.j2"}


class TestErrors(BaseTestCase):
    """Test cases for the exception hierarchy."""

    def test_exit_codes(self):
        """Test each error maps to its CLI reason and exit code."""
        assert (ConfigError.reason, ConfigError.exit_code) == ("config-error", 1)
        assert (DimensionError.reason, DimensionError.exit_code) == ("config-error", 1)
        assert (GraphError.reason, GraphError.exit_code) == ("assumption-violation", 2)
        assert (AssumptionError.reason, AssumptionError.exit_code) == ("assumption-violation", 2)
        assert (ConvergenceError.reason, ConvergenceError.exit_code) == ("certification-failed", 2)
        assert (DivergenceError.reason, DivergenceError.exit_code) == ("divergence", 3)

    def test_hierarchy(self):
        """Test all errors derive from PdnetError and configuration errors are ValueErrors."""
        errors = (ConfigError, DimensionError, GraphError, AssumptionError, ConvergenceError, DivergenceError)
        for cls in errors:
            assert issubclass(cls, PdnetError)
        assert issubclass(ConfigError, ValueError)

    def test_divergence_message(self):
        """Test the divergence error names the iterate and the step."""
        e = DivergenceError("y", 17, 3.5e12)
        assert (e.iterate, e.k) == ("y", 17)
        assert "iterate y diverged at k=17" in str(e)

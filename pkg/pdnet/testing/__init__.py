"""
pdnet Testing Framework

Provides base classes and utilities for testing pdnet experiments.
"""

from .base_test_case import BaseTestCase

__all__ = ["BaseTestCase"]

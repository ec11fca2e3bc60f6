"""
Test configuration and fixtures.
"""

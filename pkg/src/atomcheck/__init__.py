"""Atomicity checking of concurrent objects by harness enumeration and stress testing."""

__version__ = "0.1.0"

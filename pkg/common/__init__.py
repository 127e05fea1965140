"""Common utilities module."""

"""Calogero-Moser systems and integrable gl(N) tops: exact and numerical tools."""

__version__ = "0.1.0"

"""Threat-table classification and image-based detection pipelines built on numpy."""

__version__ = "0.1.0"

"""Exact dg-category workbench."""

# src/__init__.py
"""Slope toolkit for generalized Artin-Schreier curves."""

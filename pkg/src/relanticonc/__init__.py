"""Numerical lab for relative anti-concentration of linear forms in i.i.d. variables."""

__version__ = "0.1.0"

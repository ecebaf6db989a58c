"""hottc: a small proof checker for homotopy type theory."""

__version__ = "0.1.0"

"""Enumerative sphere shaping with an optional fourth-power (kurtosis) bound."""

__version__ = "0.1.0"

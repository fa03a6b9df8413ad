"""Chaos-expansion solvers for stochastic evolution and stationary equations with Wick-type noise."""
__version__ = "0.1.0"

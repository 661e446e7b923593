"""Vortex equilibria, spiral waves and attractor graphs of the Ginzburg-Landau equation on surfaces of revolution."""

__version__ = "0.1.0"

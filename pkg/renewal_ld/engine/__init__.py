"""Numerical engine: distributions, quadrature, simulation, bounds and pipelines."""

"""Geometric multigrid Poisson solver with selectable spline or windowed
super-resolution prolongation, plus synthetic turbulence data generation."""

__version__ = "0.1.0"

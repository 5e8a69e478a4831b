"""Constant mean curvature surfaces from meromorphic DPW potentials."""

__version__ = "0.1.0"

"""Numerical services: operator, certification, solvers and oracle."""

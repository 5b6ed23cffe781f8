"""Damped quintic NLS in one dimension: ground state, split-step solver,
modulation analysis and blow-up diagnostics."""

__version__ = "0.1.0"

"""Spinor and entropy diagnostics for Ricci flow on tori, spheres and spin 4-manifolds."""

__version__ = "0.1.0"

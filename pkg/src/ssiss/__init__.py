"""Spatially and internal-state selective pulses on a trapped atom.

Exact Gaussian wave-packet analytics, a spectral grid oracle, pulse-sequence
construction and numerical evaluation of closed-form error bounds.
"""

from .gwp_core import (GaussianSuperposition, GwpTerm, PhysicalConstants,
                       derive_spread, energy, evolve_quadratic, ground_state,
                       modulate, overlap)

__all__ = ["GaussianSuperposition", "GwpTerm", "PhysicalConstants",
           "derive_spread", "energy", "evolve_quadratic", "ground_state",
           "modulate", "overlap"]

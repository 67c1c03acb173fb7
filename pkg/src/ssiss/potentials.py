"""Potential-energy fields, smooth regularizations and Gaussian identities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import erf

from .gwp_core import PhysicalConstants


def smooth_step(x, eps: float):
    """Smoothed Heaviside step, the integral of ``smooth_delta`` up to ``x``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return 0.5 * (1.0 + erf(np.asarray(x, dtype=float) / eps))


def smooth_delta(x, eps: float):
    """Normalized Gaussian of width ``eps``, the derivative of ``smooth_step``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    return np.exp(-(x / eps) ** 2) / (eps * np.sqrt(np.pi))


def gaussian_product(z1: float, eps1: float, z2: float, eps2: float):
    """Combine exp(-(x-z1)^2/eps1^2) exp(-(x-z2)^2/eps2^2) into one Gaussian.

    Returns
    -------
    eps0_sq, x0, prefactor : float
        The product equals ``prefactor * exp(-(x - x0)^2 / eps0_sq)``.
    """
    if not (eps1 > 0 and eps2 > 0):
        raise ValueError("widths must be positive")
    s = eps1 ** 2 + eps2 ** 2
    eps0_sq = eps1 ** 2 * eps2 ** 2 / s
    x0 = (eps2 ** 2 * z1 + eps1 ** 2 * z2) / s
    prefactor = np.exp(-(z1 - z2) ** 2 / s)
    return eps0_sq, x0, prefactor


@dataclass(frozen=True)
class IdealHarmonic:
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)


@dataclass(frozen=True)
class FreeSpace:
    """Zero potential, used for free-spreading checks."""

    consts: PhysicalConstants = field(default_factory=PhysicalConstants)


def _default_barrier(consts: PhysicalConstants, x_L: float) -> float:
    return 0.5 * consts.mass * consts.omega ** 2 * x_L ** 2


def _check_double_well(x_L, L, L_h, consts):
    if not (x_L > 0 and L > 0):
        raise ValueError("x_L and L must be positive")
    if L_h < _default_barrier(consts, x_L) * (1 - 1e-12):
        raise ValueError("barrier height must be at least the trap value at x_L")


@dataclass(frozen=True)
class DoubleWell:
    """Harmonic well for x < x_L, flat barrier of height L_h, then zero."""

    x_L: float
    L: Optional[float] = None
    L_h: Optional[float] = None
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if self.L is None:
            object.__setattr__(self, "L", 2.0 * self.x_L)
        if self.L_h is None:
            object.__setattr__(self, "L_h", _default_barrier(self.consts, self.x_L))
        _check_double_well(self.x_L, self.L, self.L_h, self.consts)


@dataclass(frozen=True)
class SmoothDoubleWell:
    """Double well with its joints regularized by ``smooth_step``."""

    x_L: float
    L: Optional[float] = None
    L_h: Optional[float] = None
    eps_smooth: Optional[float] = None
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if self.L is None:
            object.__setattr__(self, "L", 2.0 * self.x_L)
        if self.L_h is None:
            object.__setattr__(self, "L_h", _default_barrier(self.consts, self.x_L))
        if self.eps_smooth is None:
            c = self.consts
            eps_wp = np.sqrt(2.0 * c.hbar / (2.0 * c.mass * c.omega))
            object.__setattr__(self, "eps_smooth",
                               min(0.01 * eps_wp, 0.01 * self.L))
        _check_double_well(self.x_L, self.L, self.L_h, self.consts)
        if not self.eps_smooth > 0:
            raise ValueError("eps_smooth must be positive")


@dataclass(frozen=True)
class RealWorldWindow:
    """Harmonic window on (-x_R, x_L) flanked by finite flat walls.

    The wall of height ``R_h`` spans (-x_R - R, -x_R) and the wall of height
    ``L_h`` spans (x_L, x_L + L); the potential vanishes outside. With
    ``eps_smooth`` set, every joint is regularized by ``smooth_step``.
    """

    x_R: float
    R: float
    x_L: float
    L: float
    R_h: Optional[float] = None
    L_h: Optional[float] = None
    eps_smooth: Optional[float] = None
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if self.R_h is None:
            object.__setattr__(self, "R_h", _default_barrier(self.consts, self.x_R))
        if self.L_h is None:
            object.__setattr__(self, "L_h", _default_barrier(self.consts, self.x_L))
        _check_double_well(self.x_L, self.L, self.L_h, self.consts)
        if not self.x_R > self.x_L:
            raise ValueError("x_R must exceed x_L")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.eps_smooth is not None and not self.R > 10 * self.eps_smooth:
            raise ValueError("R must be much larger than eps_smooth")


PotentialSpec = Union[IdealHarmonic, FreeSpace, DoubleWell, SmoothDoubleWell,
                      RealWorldWindow]


def _box(x, lo, hi, eps):
    """Indicator of (lo, hi), exact or smoothed."""
    if eps is None:
        return ((x > lo) & (x < hi)).astype(float)
    return smooth_step(x - lo, eps) * smooth_step(hi - x, eps)


def v1_ho(spec: Union[DoubleWell, SmoothDoubleWell], x) -> np.ndarray:
    """Selective perturbation turning the harmonic trap into the double well.

    Nonzero only on the far side of the joint x_L (up to smoothing tails).
    """
    x = np.asarray(x, dtype=float)
    c = spec.consts
    eps = spec.eps_smooth if isinstance(spec, SmoothDoubleWell) else None
    if eps is None:
        right = (x > spec.x_L).astype(float)
        barrier = _box(x, spec.x_L, spec.x_L + spec.L, None)
    else:
        right = smooth_step(x - spec.x_L, eps)
        barrier = right * smooth_step(spec.x_L + spec.L - x, eps)
    return spec.L_h * barrier - 0.5 * c.mass * c.omega ** 2 * x ** 2 * right


def eval_potential(spec: PotentialSpec, x) -> np.ndarray:
    """Potential energy of ``spec`` on ``x``."""
    x = np.asarray(x, dtype=float)
    c = spec.consts
    harm = 0.5 * c.mass * c.omega ** 2 * x ** 2
    if isinstance(spec, IdealHarmonic):
        return harm
    if isinstance(spec, FreeSpace):
        return np.zeros_like(x)
    if isinstance(spec, DoubleWell):
        return np.where(x < spec.x_L, harm,
                        np.where(x < spec.x_L + spec.L, spec.L_h, 0.0))
    if isinstance(spec, SmoothDoubleWell):
        return harm + v1_ho(spec, x)
    if isinstance(spec, RealWorldWindow):
        eps = spec.eps_smooth
        return (harm * _box(x, -spec.x_R, spec.x_L, eps)
                + spec.L_h * _box(x, spec.x_L, spec.x_L + spec.L, eps)
                + spec.R_h * _box(x, -spec.x_R - spec.R, -spec.x_R, eps))
    raise TypeError(f"unknown potential spec {type(spec).__name__}")


def joint_extent(spec: PotentialSpec) -> tuple:
    """Smallest and largest coordinates where the potential has structure."""
    if isinstance(spec, (DoubleWell, SmoothDoubleWell)):
        return (0.0, spec.x_L + spec.L)
    if isinstance(spec, RealWorldWindow):
        return (-spec.x_R - spec.R, spec.x_L + spec.L)
    return (0.0, 0.0)

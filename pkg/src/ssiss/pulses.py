"""Laser interaction of the two-beam drive and construction of pulse sequences.

Internal states are ordered (g0, e) and the spin operators are
``I_x = sigma_x / 2``, ``I_y = [[0, i], [-i, 0]] / 2``, ``I_z = diag(-1/2, 1/2)``.
The interaction is ``H_I = Q_x I_x + Q_y I_y``, whose only nonzero entry
above the diagonal is ``q / 2`` with ``q = Q_x + i Q_y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .gwp_core import PhysicalConstants
from .potentials import IdealHarmonic, PotentialSpec, smooth_step

ALPHA = np.pi / 4
GAMMAS = (0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi)


def _check_gamma(gamma: float) -> float:
    for g in GAMMAS:
        if abs(gamma - g) < 1e-12:
            return g
    raise ValueError("gamma must be one of 0, pi/2, pi, 3pi/2")


@dataclass(frozen=True)
class PhamdownBeams:
    """Counter-phased two-beam drive.

    Parameters
    ----------
    omega0 : float
        Rabi frequency.
    k0, k1 : float
        Beam wavenumbers; ``dk = k0 - k1`` and ``ksum = k0 + k1``.
    window : tuple or None
        Spatial window ``(x_lo, x_hi)``; either end may be None (unbounded).
    eps_window : float or None
        Smoothing width of the window edges; None gives sharp edges.
    """

    omega0: float
    k0: float
    k1: float
    alpha: float = ALPHA
    window: Optional[tuple] = None
    eps_window: Optional[float] = 0.05

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if abs(self.alpha - ALPHA) > 1e-15:
            raise ValueError("alpha is fixed at pi/4")

    @classmethod
    def from_dk(cls, omega0: float, dk: float, ksum: float, **kw) -> "PhamdownBeams":
        return cls(omega0, 0.5 * (ksum + dk), 0.5 * (ksum - dk), **kw)

    @property
    def dk(self) -> float:
        return self.k0 - self.k1

    @property
    def ksum(self) -> float:
        return self.k0 + self.k1

    def mask(self, x) -> np.ndarray:
        return window_mask(x, self.window, self.eps_window)


def window_mask(x, window: Optional[tuple], eps: Optional[float]) -> np.ndarray:
    """Indicator of ``window``, smoothed with ``smooth_step`` when eps is set."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    if window is None:
        return out
    lo, hi = window
    if lo is not None:
        out = out * (smooth_step(x - lo, eps) if eps else (x > lo))
    if hi is not None:
        out = out * (smooth_step(hi - x, eps) if eps else (x < hi))
    return out


def rabi_profile(beams: PhamdownBeams, x) -> np.ndarray:
    """Dimensionless envelope cos(dk x / 2 - alpha) times the window."""
    x = np.asarray(x, dtype=float)
    return np.cos(0.5 * beams.dk * x - beams.alpha) * beams.mask(x)


def q_components(beams: PhamdownBeams, gamma: float, x,
                 consts: PhysicalConstants = PhysicalConstants()):
    """Return ``(Q_x, Q_y)`` on ``x`` for phase ``gamma``."""
    gamma = _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    amp = 4.0 * consts.hbar * beams.omega0 * rabi_profile(beams, x)
    phi = 0.5 * beams.ksum * x - gamma
    return amp * np.cos(phi), -amp * np.sin(phi)


def interaction_hi(beams: PhamdownBeams, gamma: float, x,
                   consts: PhysicalConstants = PhysicalConstants()) -> np.ndarray:
    """Pointwise 2x2 interaction matrices, shape ``x.shape + (2, 2)``."""
    qx, qy = q_components(beams, gamma, x, consts)
    q = qx + 1j * qy
    out = np.zeros(np.shape(q) + (2, 2), dtype=complex)
    out[..., 0, 1] = 0.5 * q
    out[..., 1, 0] = 0.5 * np.conj(q)
    return out


@dataclass(frozen=True)
class PhamdownDrive:
    """Drive term for the grid propagator: beams at a fixed phase gamma."""

    beams: PhamdownBeams
    gamma: float

    def offdiag(self, x, consts: PhysicalConstants) -> np.ndarray:
        qx, qy = q_components(self.beams, self.gamma, x, consts)
        return qx + 1j * qy


@dataclass(frozen=True)
class RabiWindowDrive:
    """Resonant drive ``hbar Omega(x) I_x`` confined to a spatial window."""

    omega1: float
    window: tuple
    eps_window: Optional[float] = 0.05

    def offdiag(self, x, consts: PhysicalConstants) -> np.ndarray:
        return (consts.hbar * self.omega1
                * window_mask(x, self.window, self.eps_window)).astype(complex)


def rotation_elements(beams: PhamdownBeams, gamma: float, tau: float, x):
    """Entries of exp(-i H_I tau / hbar) on ``x``.

    Returns ``(c, u_ge, u_eg)`` with ``g0' = c g0 + u_ge e`` and
    ``e' = c e + u_eg g0``.
    """
    gamma = _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    theta = 2.0 * beams.omega0 * tau * rabi_profile(beams, x)
    phi = 0.5 * beams.ksum * x - gamma
    s = np.sin(theta)
    return np.cos(theta), -1j * s * np.exp(-1j * phi), -1j * s * np.exp(1j * phi)


def driven_rotation_exact(state, beams: PhamdownBeams, gamma: float, tau: float):
    """Apply the space-only propagator exp(-i H_I tau / hbar) pointwise.

    ``state`` is any object with attributes ``x``, ``amp_g0`` and ``amp_e``
    that supports ``dataclasses.replace`` (e.g. a ``SpinorGrid``). The g1
    component is left untouched.
    """
    c, u_ge, u_eg = rotation_elements(beams, gamma, tau, state.x)
    g, e = state.amp_g0, state.amp_e
    return replace(state, amp_g0=c * g + u_ge * e, amp_e=c * e + u_eg * g)


def target_phase(beams: PhamdownBeams, delta_t: float, x) -> np.ndarray:
    """Phase acquired by g0 under the target propagator (e gets its negative)."""
    prof = rabi_profile(beams, x)
    return 8.0 * (beams.omega0 * delta_t * prof) ** 2


def target_propagator(state, beams: PhamdownBeams, delta_t: float):
    """Apply exp{-i (4 Omega0 dt)^2 I_z cos^2(dk x/2 - pi/4)} pointwise."""
    ph = target_phase(beams, delta_t, state.x)
    return replace(state, amp_g0=state.amp_g0 * np.exp(1j * ph),
                   amp_e=state.amp_e * np.exp(-1j * ph))


@dataclass(frozen=True)
class SequenceStep:
    """One propagator of a pulse sequence, in application order.

    ``kind`` is 'free' or 'driven'. A free step with ``inverse=True`` stands
    for the inverse field-free propagator over ``tau``.
    """

    kind: str
    tau: float
    potential: PotentialSpec = field(default_factory=IdealHarmonic)
    gamma: Optional[float] = None
    inverse: bool = False

    def __post_init__(self):
        if self.kind not in ("free", "driven"):
            raise ValueError("kind must be 'free' or 'driven'")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.kind == "driven":
            object.__setattr__(self, "gamma", _check_gamma(self.gamma))
            if self.inverse:
                raise ValueError("driven steps cannot be inverted")

    @property
    def signed_tau(self) -> float:
        return -self.tau if self.inverse else self.tau

    def to_dict(self) -> dict:
        return {"kind": self.kind, "tau": self.tau, "gamma": self.gamma,
                "inverse": self.inverse,
                "potential": type(self.potential).__name__}


@dataclass(frozen=True)
class PulseSequence:
    """Basic sequence repeated ``repeats`` times.

    ``phase_per_repeat`` is the analytic global phase by which one basic
    sequence differs from its ideal counterpart (nonzero when inverse
    propagators are replaced by forward complements).
    """

    steps: tuple
    repeats: int = 1
    phase_per_repeat: float = 0.0
    kind: str = ""
    beams: Optional[PhamdownBeams] = None

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a pulse sequence needs at least one step")
        if self.repeats < 1:
            raise ValueError("repeats must be positive")

    @property
    def duration(self) -> float:
        return sum(s.tau for s in self.steps)

    @property
    def global_phase(self) -> float:
        return self.repeats * self.phase_per_repeat

    def to_dict(self) -> dict:
        return {"kind": self.kind, "repeats": self.repeats,
                "phase_per_repeat": self.phase_per_repeat,
                "window": None if self.beams is None else self.beams.window,
                "steps": [s.to_dict() for s in self.steps]}


_ORDER = {
    "a": (1.5 * np.pi, np.pi, 0.5 * np.pi, 0.0),
    "b": (0.5 * np.pi, 0.0, 1.5 * np.pi, np.pi, 1.5 * np.pi, np.pi,
          0.5 * np.pi, 0.0),
}


def _compose(gammas, s: float, potential, experimental: bool, k: int,
             omega: float):
    """Driven steps of length ``s`` interleaved with inverse free evolution.

    The free gaps are s/2, s, ..., s, s/2. In the experimental form each
    inverse gap of length g is replaced by forward evolution over
    ``2 k pi / omega - g``.
    """
    gaps = [0.5 * s] + [s] * (len(gammas) - 1) + [0.5 * s]
    steps = []
    for i, gap in enumerate(gaps):
        if experimental:
            fwd = 2.0 * k * np.pi / omega - gap
            if fwd < 0:
                raise ValueError("driven step longer than the trap period")
            steps.append(SequenceStep("free", fwd, potential))
        else:
            steps.append(SequenceStep("free", gap, potential, inverse=True))
        if i < len(gammas):
            steps.append(SequenceStep("driven", s, potential, gamma=gammas[i]))
    phase = len(gaps) * k * np.pi if experimental else 0.0
    return tuple(steps), phase


def build_sequence(kind: str, delta_t: float, n: int, potential: PotentialSpec,
                   beams: PhamdownBeams, k: int = 1) -> PulseSequence:
    """Build a basic pulse sequence repeated ``n`` times.

    Parameters
    ----------
    kind : {'theoretical_a', 'experimental_a', 'improved_b'}
        'theoretical_a' uses inverse field-free propagators, 'experimental_a'
        replaces them with forward evolution over ``2 k pi / omega - gap``,
        'improved_b' is the eight-pulse symmetric variant (theoretical form).
    delta_t : float
        Total pulse parameter; each driven step lasts ``delta_t / sqrt(n)``
        (``delta_t / sqrt(2n)`` for 'improved_b').
    n : int
        Number of repeats.
    k : int
        Winding integer of the forward replacement.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not delta_t > 0:
        raise ValueError("delta_t must be positive")
    omega = potential.consts.omega
    if kind == "theoretical_a":
        steps, ph = _compose(_ORDER["a"], delta_t / np.sqrt(n), potential,
                             False, k, omega)
    elif kind == "experimental_a":
        steps, ph = _compose(_ORDER["a"], delta_t / np.sqrt(n), potential,
                             True, k, omega)
    elif kind == "improved_b":
        steps, ph = _compose(_ORDER["b"], delta_t / np.sqrt(2 * n), potential,
                             False, k, omega)
    else:
        raise ValueError(f"unknown sequence kind {kind!r}")
    return PulseSequence(steps, n, ph, kind, beams)

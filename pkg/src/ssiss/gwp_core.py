"""Gaussian wave packets and their superpositions under quadratic Hamiltonians.

A pure wave packet is written as

    Psi(x) = A e^{i phi0} (dx2 / 2pi)^{1/4} W^{-1/2}
             exp(-(x - x_c)^2 / (4W)) exp(i p_c x / hbar)

with complex linewidth ``W = dx2 + i hbar t0_param / (2m)``. A polynomial
prefactor in ``x`` may multiply the Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

LABELS = ("g0", "e", "g1")
MAX_PREFACTOR_DEGREE = 6


@dataclass(frozen=True)
class PhysicalConstants:
    """Physical constants in natural units by default."""

    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class GwpTerm:
    """A Gaussian wave-packet term, optionally with a polynomial prefactor.

    Parameters
    ----------
    amplitude : complex
        Overall complex amplitude ``A``.
    global_phase : float
        Explicit phase ``phi0`` in radians.
    x_c, p_c : float
        Centre-of-mass position and momentum.
    dx2 : float
        Real part of the complex linewidth, must be positive.
    t0_param : float
        Imaginary seed ``T0`` of the linewidth.
    prefactor_coeffs : tuple of complex
        Polynomial in absolute ``x`` (ascending powers). Empty means pure.
    consts : PhysicalConstants
    """

    amplitude: complex = 1.0
    global_phase: float = 0.0
    x_c: float = 0.0
    p_c: float = 0.0
    dx2: float = 0.5
    t0_param: float = 0.0
    prefactor_coeffs: tuple = ()
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if not self.dx2 > 0:
            raise ValueError("dx2 must be strictly positive (normalizability)")
        coeffs = tuple(complex(c) for c in self.prefactor_coeffs)
        if len(coeffs) > MAX_PREFACTOR_DEGREE + 1:
            raise ValueError("prefactor degree is capped at 6")
        object.__setattr__(self, "prefactor_coeffs", coeffs)

    @property
    def W(self) -> complex:
        """Complex linewidth."""
        c = self.consts
        return complex(self.dx2, c.hbar * self.t0_param / (2.0 * c.mass))

    @property
    def is_pure(self) -> bool:
        return len(self.prefactor_coeffs) == 0

    @property
    def prefactor(self) -> np.ndarray:
        if self.is_pure:
            return np.array([1.0 + 0j])
        return np.asarray(self.prefactor_coeffs, dtype=complex)

    @property
    def norm_factor(self) -> complex:
        """Complex constant multiplying the bare Gaussian exponential."""
        return (self.amplitude * np.exp(1j * self.global_phase)
                * (self.dx2 / (2.0 * np.pi)) ** 0.25 / np.sqrt(self.W))

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)


@dataclass(frozen=True)
class GaussianSuperposition:
    """Superposition of Gaussian terms, each attached to an internal state."""

    terms: tuple = ()
    labels: tuple = ()

    def __post_init__(self):
        terms = tuple(self.terms)
        labels = tuple(self.labels) if self.labels else ("g0",) * len(terms)
        if len(labels) != len(terms):
            raise ValueError("one internal label per term is required")
        for lab in labels:
            if lab not in LABELS:
                raise ValueError(f"unknown internal label {lab!r}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def single(cls, g: GwpTerm, label: str = "g0") -> "GaussianSuperposition":
        return cls((g,), (label,))

    def __add__(self, other: "GaussianSuperposition") -> "GaussianSuperposition":
        return GaussianSuperposition(self.terms + other.terms,
                                     self.labels + other.labels)

    def scaled(self, factor: complex) -> "GaussianSuperposition":
        return GaussianSuperposition(
            tuple(replace(t, amplitude=t.amplitude * factor) for t in self.terms),
            self.labels)

    def component(self, label: str, x) -> np.ndarray:
        """Evaluate the wavefunction of one internal state on ``x``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for t, lab in zip(self.terms, self.labels):
            if lab == label:
                out += evaluate(t, x)
        return out


def ground_state(consts: PhysicalConstants = PhysicalConstants(),
                 x_c: float = 0.0, p_c: float = 0.0) -> GwpTerm:
    """Harmonic-trap ground-state width packet, displaced to (x_c, p_c)."""
    dx2 = consts.hbar / (2.0 * consts.mass * consts.omega)
    return GwpTerm(x_c=x_c, p_c=p_c, dx2=dx2, consts=consts)


def from_linewidth(W: complex, x_c: float, p_c: float, amplitude: complex = 1.0,
                   global_phase: float = 0.0, prefactor_coeffs=(),
                   consts: PhysicalConstants = PhysicalConstants()) -> GwpTerm:
    """Build a term from a complex linewidth instead of (dx2, T0)."""
    return GwpTerm(amplitude=amplitude, global_phase=global_phase, x_c=x_c,
                   p_c=p_c, dx2=W.real,
                   t0_param=2.0 * consts.mass * W.imag / consts.hbar,
                   prefactor_coeffs=tuple(prefactor_coeffs), consts=consts)


def evaluate(g: GwpTerm, x) -> np.ndarray:
    """Pointwise wavefunction of a term, prefactor included."""
    x = np.asarray(x, dtype=float)
    expo = -(x - g.x_c) ** 2 / (4.0 * g.W) + 1j * g.p_c * x / g.consts.hbar
    psi = g.norm_factor * np.exp(expo)
    if not g.is_pure:
        psi = psi * npoly.polyval(x, g.prefactor)
    return psi


def derive_spread(g: GwpTerm) -> float:
    """Wave-packet spread, with eps^2 twice the position variance of |Psi|^2."""
    c = g.consts
    b = c.hbar * g.t0_param / (2.0 * c.mass * np.sqrt(g.dx2))
    return float(np.sqrt(2.0 * (g.dx2 + b * b)))


def energy(g: GwpTerm, consts: PhysicalConstants | None = None) -> float:
    """Motional energy of a pure packet in the harmonic trap."""
    if not g.is_pure:
        raise ValueError("energy is defined only for pure wave packets")
    c = consts or g.consts
    eps = derive_spread(g)
    return float(g.p_c ** 2 / (2 * c.mass)
                 + 0.5 * c.mass * c.omega ** 2 * g.x_c ** 2
                 + 0.25 * c.mass * c.omega ** 2 * eps ** 2
                 + c.hbar ** 2 / (8.0 * c.mass * g.dx2))


def _abcd(hamiltonian: str, tau: float, c: PhysicalConstants):
    if hamiltonian == "harmonic":
        th = c.omega * tau
        mw = c.mass * c.omega
        return np.cos(th), np.sin(th) / mw, -mw * np.sin(th), np.cos(th)
    if hamiltonian == "free":
        return 1.0, tau / c.mass, 0.0, 1.0
    raise ValueError("hamiltonian must be 'harmonic' or 'free'")


def _sqrt_branch_arg(Q: complex, hamiltonian: str, tau: float,
                     c: PhysicalConstants) -> float:
    """Continuous argument of Q(t) along the evolution started at Q(0)=1."""
    if hamiltonian == "free":
        return float(np.angle(Q))
    th = c.omega * tau
    k = np.floor((th + 0.5 * np.pi) / np.pi)
    # Q(theta + k pi) = (-1)^k Q(theta), the phase winds by pi per half period
    Qr = Q * (-1.0) ** k
    return float(np.angle(Qr) + k * np.pi)


def evolve_quadratic(g: GwpTerm, hamiltonian: str, tau: float,
                     consts: PhysicalConstants | None = None) -> GwpTerm:
    """Exact evolution of a pure packet under a harmonic or free Hamiltonian.

    Uses the linear canonical (ABCD) map of the width matrices together with
    the classical action, so the global phase, including the continuous
    branch of ``Q^{-1/2}``, is tracked exactly.

    Parameters
    ----------
    g : GwpTerm
        Pure packet.
    hamiltonian : {'harmonic', 'free'}
    tau : float
        Duration; negative values give the inverse propagator.
    """
    if not g.is_pure:
        raise ValueError("evolve_quadratic requires a pure wave packet")
    c = consts or g.consts
    if consts is not None and consts != g.consts:
        g = replace(g, consts=c)
    if tau == 0:
        return g
    hb = c.hbar
    A, B, C, D = _abcd(hamiltonian, tau, c)
    alpha0 = 1j * hb / (4.0 * g.W)
    Q = A + B * 2.0 * alpha0
    P = C + D * 2.0 * alpha0
    q0, p0 = g.x_c, g.p_c
    qt = A * q0 + B * p0
    pt = C * q0 + D * p0
    # classical action: d(pq)/dt = 2L for quadratic Lagrangians
    S = 0.5 * (pt * qt - p0 * q0)
    W_t = 1j * hb * Q / (2.0 * P)
    argQ = _sqrt_branch_arg(Q, hamiltonian, tau, c)
    inv_sqrt_Q = abs(Q) ** -0.5 * np.exp(-0.5j * argQ)
    K = g.norm_factor * np.exp(1j * p0 * q0 / hb)
    total = K * inv_sqrt_Q * np.exp(1j * (S - pt * qt) / hb)
    base = g.amplitude * (W_t.real / (2 * np.pi)) ** 0.25 / np.sqrt(W_t)
    phase = float(np.angle(total / base))
    return from_linewidth(W_t, qt, pt, amplitude=g.amplitude,
                          global_phase=phase, consts=c)


def modulate(g: GwpTerm, k_lin: float, c_quad: complex) -> GwpTerm:
    """Multiply by exp(i k (x - x_c)) exp(-c (x - x_c)^2), absorbed exactly."""
    inv_w = 1.0 / g.W + 4.0 * complex(c_quad)
    if inv_w == 0:
        raise ValueError("modulation makes the packet non-normalizable")
    W_new = 1.0 / inv_w
    if not W_new.real > 0:
        raise ValueError("modulation makes the packet non-normalizable")
    hb = g.consts.hbar
    old = (g.dx2 / (2 * np.pi)) ** 0.25 / np.sqrt(g.W)
    new = (W_new.real / (2 * np.pi)) ** 0.25 / np.sqrt(W_new)
    r = old / new * np.exp(-1j * k_lin * g.x_c)
    return from_linewidth(W_new, g.x_c, g.p_c + hb * k_lin,
                          amplitude=g.amplitude * abs(r),
                          global_phase=float(np.angle(np.exp(1j * g.global_phase) * r)),
                          prefactor_coeffs=g.prefactor_coeffs, consts=g.consts)


def derivative_polynomial(g: GwpTerm, j: int) -> np.ndarray:
    """Coefficients of Q_j with d^j Psi / dx^j = Q_j(x) Psi_gauss.

    ``Psi_gauss`` is the term with its prefactor stripped, so for a pure
    packet ``Q_0 = 1``. Coefficients are in ascending powers of ``x``.
    """
    if not 0 <= j <= MAX_PREFACTOR_DEGREE:
        raise ValueError("derivative order must lie in 0..6")
    W = g.W
    q1 = np.array([g.x_c / (2 * W) + 1j * g.p_c / g.consts.hbar, -1.0 / (2 * W)])
    r = g.prefactor.copy()
    for _ in range(j):
        r = npoly.polyadd(npoly.polyder(r), npoly.polymul(r, q1))
    return r


def _gauss_params(g: GwpTerm):
    return 1.0 / (4.0 * g.W), g.p_c / g.consts.hbar


def term_overlap(a: GwpTerm, b: GwpTerm) -> complex:
    """Closed-form <a|b> for two terms on the same internal state."""
    aa, ka = _gauss_params(a)
    ab, kb = _gauss_params(b)
    aac = np.conj(aa)
    alpha = aac + ab
    beta = 2 * aac * a.x_c + 2 * ab * b.x_c + 1j * (kb - ka)
    gamma = -aac * a.x_c ** 2 - ab * b.x_c ** 2
    poly = npoly.polymul(np.conj(a.prefactor), b.prefactor)
    mu = beta / (2 * alpha)
    s = 1.0 / (2 * alpha)
    moments = np.zeros(len(poly), dtype=complex)
    moments[0] = 1.0
    if len(poly) > 1:
        moments[1] = mu
    for j in range(2, len(poly)):
        moments[j] = mu * moments[j - 1] + (j - 1) * s * moments[j - 2]
    gauss = np.sqrt(np.pi / alpha) * np.exp(gamma + beta ** 2 / (4 * alpha))
    return complex(np.conj(a.norm_factor) * b.norm_factor * gauss
                   * np.dot(poly, moments))


def _as_superposition(a) -> GaussianSuperposition:
    if isinstance(a, GwpTerm):
        return GaussianSuperposition.single(a)
    return a


def overlap(a, b) -> complex:
    """Inner product <a|b> of two superpositions, term by term in closed form.

    Terms on different internal states are orthogonal.
    """
    a, b = _as_superposition(a), _as_superposition(b)
    total = 0j
    for ta, la in zip(a.terms, a.labels):
        for tb, lb in zip(b.terms, b.labels):
            if la == lb:
                total += term_overlap(ta, tb)
    return total


def norm(a) -> float:
    return float(np.sqrt(max(overlap(a, a).real, 0.0)))


def trajectory(g: GwpTerm, times: Iterable[float], hamiltonian: str = "harmonic"
               ) -> list:
    """Exact packet at each of ``times`` measured from ``g``."""
    return [evolve_quadratic(g, hamiltonian, float(t)) for t in times]


def density(g: GwpTerm, x) -> np.ndarray:
    return np.abs(evaluate(g, x)) ** 2


__all__: Sequence[str] = (
    "PhysicalConstants", "GwpTerm", "GaussianSuperposition", "ground_state",
    "from_linewidth", "evaluate", "derive_spread", "energy", "evolve_quadratic",
    "modulate", "derivative_polynomial", "term_overlap", "overlap", "norm",
    "trajectory", "density", "LABELS",
)

"""Expansions of non-Gaussian states into finite Gaussian superpositions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import jv

from .bounds import SQRT_PI, erfc_tail_bound, expansion_bound
from .gwp_core import GaussianSuperposition, GwpTerm, derive_spread, modulate


@dataclass(frozen=True)
class ExpansionResult:
    approx: GaussianSuperposition
    residual_bound: float
    n_terms: int


def _shifted(g: GwpTerm, kappa: float, coeff: complex, x_ref: float) -> GwpTerm:
    """coeff * exp(i kappa (x - x_ref)) * g as a single term."""
    h = modulate(g, kappa, 0.0) if kappa else g
    factor = coeff * np.exp(1j * kappa * (g.x_c - x_ref))
    return replace(h, amplitude=h.amplitude * factor)


def bessel_expand(g: GwpTerm, z: float, dk: float, n_trunc: int) -> ExpansionResult:
    """Expand exp{i z sin(dk x)} g into momentum-shifted copies of g.

    The residual bound is the l1 tail of the Bessel coefficients, which
    bounds the norm of the dropped terms by the triangle inequality.
    """
    if n_trunc < 0:
        raise ValueError("n_trunc must be nonnegative")
    terms = []
    for n in range(-n_trunc, n_trunc + 1):
        c = jv(n, z)
        if z == 0 and n != 0:
            continue
        terms.append(_shifted(g, n * dk, c, 0.0))
    top = n_trunc + int(abs(z)) + 60
    tail = 2.0 * float(np.sum(np.abs(jv(np.arange(n_trunc + 1, top), z))))
    return ExpansionResult(GaussianSuperposition(tuple(terms), ("g0",) * len(terms)),
                           tail * abs(g.amplitude), len(terms))


def _betas(omega_amp: float, dk: float, x_c0: float):
    th = 0.5 * dk * x_c0 - math.pi / 4
    return omega_amp * math.cos(th), omega_amp * math.sin(th)


def _fourier_terms(const, a1c, a1s, a2c, a2s, kappa):
    """Split a0 + a1c cos(k y) + a1s sin(k y) + a2c cos(2k y) + a2s sin(2k y)."""
    return [(0.0, const),
            (kappa, 0.5 * (a1c - 1j * a1s)), (-kappa, 0.5 * (a1c + 1j * a1s)),
            (2 * kappa, 0.5 * (a2c - 1j * a2s)), (-2 * kappa, 0.5 * (a2c + 1j * a2s))]


def ten_term_coefficients(omega_amp: float, dk: float, x_c0: float) -> dict:
    """Fourier coefficients in y = x - x_c0 of the truncated driven amplitudes.

    Returns a dict with keys 'g0' and 'e', each a list of (wavenumber,
    coefficient) pairs. The e amplitude multiplies exp(i ksum x / 2).
    """
    bc, bs = _betas(omega_amp, dk, x_c0)
    cb, sb = math.cos(bc), math.sin(bc)
    mid = 1.0 - 0.75 * bc ** 2 - 0.25 * bs ** 2
    kap = 0.5 * dk
    ag = bc * cb - sb
    ae = bc * sb + cb
    g = _fourier_terms(bc * sb + mid * cb, ag * bc, -ag * bs,
                       -0.25 * cb * (bc ** 2 - bs ** 2), 0.5 * cb * bc * bs, kap)
    e = _fourier_terms(-bc * cb + mid * sb, ae * bc, -ae * bs,
                       -0.25 * sb * (bc ** 2 - bs ** 2), 0.5 * sb * bc * bs, kap)
    return {"g0": g, "e": e, "beta_c": bc, "beta_s": bs}


def driven_state_exact(g: GwpTerm, omega_amp: float, dk: float, ksum: float, x,
                       variant: str = "single"):
    """Exact two-component driven state on the points ``x``.

    ``variant='single'`` is one driven step from g on g0; ``variant='two_step'``
    is the state reached after the first two steps of the basic sequence.
    """
    x = np.asarray(x, dtype=float)
    psi = g(x)
    arg = omega_amp * np.cos(0.5 * dk * x - math.pi / 4)
    eph = np.exp(0.5j * ksum * x)
    if variant == "single":
        return np.cos(arg) * psi, np.sin(arg) * eph * psi
    if variant == "two_step":
        return (0.5 * (1 + 1j) * psi + 0.5 * (1 - 1j) * np.cos(arg) * psi,
                0.5 * (1 + 1j) * np.sin(arg) * eph * psi)
    raise ValueError("variant must be 'single' or 'two_step'")


def ten_term_expansion(g: GwpTerm, omega_amp: float, dk: float, ksum: float,
                       x_c0: float | None = None, variant: str = "single"
                       ) -> ExpansionResult:
    """Ten-term Gaussian superposition of the driven state.

    Parameters
    ----------
    g : GwpTerm
        Motional state before the drive (on g0).
    omega_amp : float
        Pulse area ``Omega(tau)``, e.g. ``2 Omega0 dt / sqrt(n)``.
    dk, ksum : float
        Wavenumber difference and sum of the beams.
    x_c0 : float, optional
        Expansion centre, defaults to the packet centre.
    variant : {'single', 'two_step'}
        'two_step' expands the state after two pulses, whose residual is
        half as large in probability.
    """
    if abs(omega_amp) > 0.3:
        warnings.warn("pulse area above 0.3 leaves the small-area regime",
                      RuntimeWarning, stacklevel=2)
    x_c0 = g.x_c if x_c0 is None else x_c0
    co = ten_term_coefficients(omega_amp, dk, x_c0)
    if variant == "single":
        sg, se, extra = 1.0, 1.0, 0.0
        which = "MGWP_535"
    elif variant == "two_step":
        sg, se, extra = 0.5 * (1 - 1j), 0.5 * (1 + 1j), 0.5 * (1 + 1j)
        which = "MGWP_539"
    else:
        raise ValueError("variant must be 'single' or 'two_step'")
    terms, labels = [], []
    for kappa, c in co["g0"]:
        c = sg * c + (extra if kappa == 0.0 else 0.0)
        if c != 0:
            terms.append(_shifted(g, kappa, c, x_c0))
            labels.append("g0")
    # carrier exp(i ksum x / 2) rewritten relative to x_c0
    eph = np.exp(0.5j * ksum * x_c0)
    for kappa, c in co["e"]:
        c = se * c
        if c != 0:
            terms.append(_shifted(g, kappa + 0.5 * ksum, c * eph, x_c0))
            labels.append("e")
    eps = derive_spread(g)
    rb = expansion_bound(which, beta_c=co["beta_c"], beta_s=co["beta_s"], dk=dk,
                         eps0=eps).bound_value * abs(g.amplitude)
    return ExpansionResult(GaussianSuperposition(tuple(terms), tuple(labels)), rb,
                           len(terms))


def ten_term_residual_exact(g: GwpTerm, omega_amp: float, dk: float,
                            x_c0: float | None = None, variant: str = "single"
                            ) -> float:
    """Exact residual norm of the ten-term expansion by adaptive quadrature."""
    from scipy import integrate
    x_c0 = g.x_c if x_c0 is None else x_c0
    bc, bs = _betas(omega_amp, dk, x_c0)
    eps = derive_spread(g)

    def f(x):
        y = x - x_c0
        s0 = bc * (1 - math.cos(0.5 * dk * y)) + bs * math.sin(0.5 * dk * y)
        # sin S - S and cos S - 1 + S^2/2 by series to avoid cancellation
        r3 = _sin_minus(s0)
        r4 = _cos_minus(s0)
        return abs(g(x)) ** 2 * (r3 * r3 + r4 * r4)

    val, _ = integrate.quad(f, g.x_c - 40 * eps, g.x_c + 40 * eps, epsabs=0.0,
                            epsrel=1e-12, limit=400, points=[g.x_c])
    scale = 0.5 if variant == "two_step" else 1.0
    return math.sqrt(scale * val)


def _sin_minus(s: float) -> float:
    if abs(s) > 0.1:
        return math.sin(s) - s
    tot, term, k = 0.0, s, 1
    while True:
        term = -term * s * s / ((2 * k) * (2 * k + 1))
        tot += term
        k += 1
        if abs(term) <= 1e-18 * abs(tot):
            return tot


def _cos_minus(s: float) -> float:
    if abs(s) > 0.1:
        return math.cos(s) - 1 + 0.5 * s * s
    term, tot, k = -0.5 * s * s, 0.0, 1
    while True:
        term = -term * s * s / ((2 * k + 1) * (2 * k + 2))
        tot += term
        k += 1
        if abs(term) <= 1e-18 * abs(tot):
            return tot


def lamb_dicke_state(g: GwpTerm, q_s: float, q_c: float, n: int = 1,
                     dk: float = 0.05, variant: str = "second"):
    """Single-packet Lamb-Dicke approximation of exp{i[q_s sin(dk y) + q_c cos(dk y)]} g.

    The phase is expanded about the packet centre and applied in ``n``
    equal portions ``q / n``. ``variant='second'`` keeps the quadratic
    phase, ``variant='first'`` keeps only the constant and linear parts.

    Returns
    -------
    GwpTerm, float
        The approximating packet and its residual bound.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if variant not in ("second", "first"):
        raise ValueError("variant must be 'second' or 'first'")
    h = g
    qs, qc = q_s / n, q_c / n
    for _ in range(n):
        cq = 0.5j * qc * dk ** 2 if variant == "second" else 0.0
        h = modulate(h, qs * dk, cq)
        h = replace(h, global_phase=float(np.angle(np.exp(1j * (h.global_phase + qc)))))
    if q_s == 0 and q_c == 0:
        return h, 0.0
    hb = g.consts.hbar
    p_tr = hb * abs(dk) * max(abs(q_s), abs(q_c))
    which = "LD_512" if variant == "second" else "LD_513"
    rb = expansion_bound(which, p_tr=p_tr, dk=dk, eps0=derive_spread(g),
                         hbar=hb).bound_value * abs(g.amplitude)
    return h, rb


def generalized_lamb_dicke(g: GwpTerm, s0: float, s1: float, s2: float,
                           m3: float, y_m: float):
    """Single-packet approximation of exp{i S(y)} g from S(0), S'(0), S''(0).

    ``m3`` bounds |S'''| on the effective region of half-width ``y_m``
    spreads. Returns the packet and the residual norm bound.
    """
    h = modulate(g, s1, -0.5j * s2)
    h = replace(h, global_phase=float(np.angle(np.exp(1j * (h.global_phase + s0)))))
    eps = derive_spread(g)
    val = 5.0 / 96.0 * m3 ** 2 * eps ** 6 + 8.0 / SQRT_PI * erfc_tail_bound(y_m)
    return h, math.sqrt(val) * abs(g.amplitude)


def taylor_truncation(theta_max: float, n: int):
    """Residual bounds of the cos and sin Taylor polynomials through order 2n+1.

    Returns ``(cos_residual, sin_residual)`` for arguments up to theta_max.
    """
    t = abs(theta_max)
    return t ** (2 * n + 1) / math.factorial(2 * n + 1), \
        t ** (2 * n + 2) / math.factorial(2 * n + 2)


def taylor_order(omega0: float, t1: float) -> int:
    """Smallest n with 2n + 1 > 2 e |Omega0| t1 + 10."""
    target = 2 * math.e * abs(omega0) * t1 + 10
    return max(0, int(math.floor((target - 1) / 2)) + 1)

"""Split-operator spectral propagator for the internal-state spinor wavefunction.

This is the numerical ground truth against which the analytic machinery and
the error bounds are checked.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .gwp_core import GaussianSuperposition, GwpTerm, PhysicalConstants, derive_spread
from .potentials import FreeSpace, IdealHarmonic, PotentialSpec, eval_potential, joint_extent
from .pulses import PhamdownBeams, PhamdownDrive, PulseSequence

BOUNDARY_TOL = 1e-8
SUPPORT_SPREADS = 8.0


class BoundaryLeakError(RuntimeError):
    """Wavefunction amplitude reached the edge of the periodic box."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic mesh with a time step.

    ``dx = (x_max - x_min) / n_points``; the last point sits one ``dx`` below
    ``x_max``.
    """

    x_min: float
    x_max: float
    n_points: int = 2048
    dt: Optional[float] = None
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        n = self.n_points
        if n < 256 or n & (n - 1):
            raise ValueError("n_points must be a power of two and at least 256")
        if not self.x_max > self.x_min:
            raise ValueError("empty box")
        if self.dt is None:
            object.__setattr__(self, "dt", 0.005 / self.consts.omega)
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    def strict_dt(self) -> float:
        """Conservative step with kinetic phase at the mesh cutoff below 0.5."""
        c = self.consts
        return min(0.005 / c.omega, 0.1 * c.mass * self.dx ** 2 / c.hbar)

    @classmethod
    def for_problem(cls, potential: PotentialSpec, x_c_max: float, eps_max: float,
                    n_points: int = 2048, dt: Optional[float] = None) -> "Grid":
        """Default box: 12 spreads beyond the packets and the potential joints."""
        lo, hi = joint_extent(potential)
        margin = 12.0 * eps_max
        x_min = min(-(abs(x_c_max) + margin), lo - margin)
        x_max = max(abs(x_c_max) + margin, hi + margin)
        return cls(x_min, x_max, n_points, dt, potential.consts)


@dataclass(frozen=True)
class SpinorGrid:
    """Amplitudes of g0, e (and optionally g1) on a grid."""

    grid: Grid
    amp_g0: np.ndarray
    amp_e: np.ndarray
    amp_g1: Optional[np.ndarray] = None

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def components(self) -> list:
        out = [self.amp_g0, self.amp_e]
        if self.amp_g1 is not None:
            out.append(self.amp_g1)
        return out

    def norm2(self) -> float:
        return float(sum(np.vdot(a, a).real for a in self.components) * self.grid.dx)

    def populations(self) -> dict:
        dx = self.grid.dx
        pops = {"g0": float(np.vdot(self.amp_g0, self.amp_g0).real * dx),
                "e": float(np.vdot(self.amp_e, self.amp_e).real * dx)}
        if self.amp_g1 is not None:
            pops["g1"] = float(np.vdot(self.amp_g1, self.amp_g1).real * dx)
        return pops

    def scaled(self, factor: complex) -> "SpinorGrid":
        g1 = None if self.amp_g1 is None else self.amp_g1 * factor
        return replace(self, amp_g0=self.amp_g0 * factor, amp_e=self.amp_e * factor,
                       amp_g1=g1)

    def to_csv(self, path) -> None:
        cols = [self.x]
        header = ["x"]
        for name, a in zip(("g0", "e", "g1"), self.components):
            cols += [a.real, a.imag]
            header += [f"re_{name}", f"im_{name}"]
        np.savetxt(path, np.column_stack(cols), delimiter=",",
                   header=",".join(header), comments="")

    def to_binary(self, path) -> None:
        """Little-endian f64 array (interleaved re/im per component) + JSON sidecar."""
        path = Path(path)
        data = np.concatenate([np.column_stack([a.real, a.imag]).ravel()
                               for a in self.components]).astype("<f8")
        data.tofile(path)
        g = self.grid
        meta = {"x_min": g.x_min, "x_max": g.x_max, "n_points": g.n_points,
                "dt": g.dt, "components": ["g0", "e", "g1"][:len(self.components)],
                "layout": "component-major, interleaved re/im, little-endian f64"}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2))


def inner(a: SpinorGrid, b: SpinorGrid) -> complex:
    """Grid inner product <a|b> summed over internal components."""
    tot = 0j
    for ca, cb in zip(a.components, b.components):
        tot += np.vdot(ca, cb)
    return complex(tot * a.grid.dx)


def distance(a: SpinorGrid, b: SpinorGrid) -> float:
    """L2 distance between two spinor states on the same grid."""
    tot = 0.0
    comps_a, comps_b = a.components, b.components
    for i in range(max(len(comps_a), len(comps_b))):
        ca = comps_a[i] if i < len(comps_a) else 0.0
        cb = comps_b[i] if i < len(comps_b) else 0.0
        tot += float(np.sum(np.abs(ca - cb) ** 2))
    return float(np.sqrt(tot * a.grid.dx))


def sample(src, grid: Grid, check_support: bool = True) -> SpinorGrid:
    """Evaluate a Gaussian superposition (or single term) on ``grid``."""
    if isinstance(src, GwpTerm):
        src = GaussianSuperposition.single(src)
    x = grid.x
    if check_support:
        for t in src.terms:
            w = SUPPORT_SPREADS * derive_spread(t)
            if t.x_c - w < grid.x_min or t.x_c + w > grid.x_max:
                raise BoundaryLeakError(
                    f"term at x_c={t.x_c:.3g} with support {w:.3g} leaves the box")
    g0 = src.component("g0", x)
    e = src.component("e", x)
    g1 = src.component("g1", x) if "g1" in src.labels else None
    return SpinorGrid(grid, g0, e, g1)


def check_boundary(state: SpinorGrid, tol: float = BOUNDARY_TOL) -> float:
    """Peak-relative amplitude in the outer 2% of the box; raise above ``tol``."""
    n = state.grid.n_points
    edge = max(4, n // 50)
    peak = max(float(np.max(np.abs(a))) for a in state.components)
    if peak == 0:
        return 0.0
    worst = max(float(max(np.max(np.abs(a[:edge])), np.max(np.abs(a[-edge:]))))
                for a in state.components)
    ratio = worst / peak
    if ratio > tol:
        raise BoundaryLeakError(f"boundary amplitude {ratio:.2e} of peak exceeds {tol:g}")
    return ratio


def _as_drive(drive):
    if drive is None:
        return None
    if isinstance(drive, tuple):
        beams, gamma = drive
        return PhamdownDrive(beams, gamma)
    return drive


@dataclass(frozen=True)
class Hamiltonian:
    """Field potential plus an optional internal-state drive."""

    potential: PotentialSpec
    drive: object = None
    extra_potential: Optional[Callable] = None

    def diagonal(self, x) -> np.ndarray:
        v = eval_potential(self.potential, x)
        if self.extra_potential is not None:
            v = v + self.extra_potential(x)
        return v


def _potential_factor(H: Hamiltonian, grid: Grid, h: float):
    """Exact exp(-i h (V + H_I) / hbar) pointwise, as (phase, c, u_ge, u_eg)."""
    c = H.potential.consts
    x = grid.x
    phase = np.exp(-1j * h * H.diagonal(x) / c.hbar)
    drive = _as_drive(H.drive)
    if drive is None:
        return phase, None, None, None
    q = drive.offdiag(x, c)
    mod = np.abs(q)
    theta = 0.5 * mod * h / c.hbar
    unit = np.where(mod > 0, q / np.where(mod > 0, mod, 1.0), 0.0)
    s = np.sin(theta)
    return phase, np.cos(theta), -1j * s * unit, -1j * s * np.conj(unit)


def evolve(state: SpinorGrid, hamiltonian, tau: float, check: bool = True,
           source: Optional[Callable] = None) -> SpinorGrid:
    """Strang-split propagation over ``tau`` (negative allowed).

    Parameters
    ----------
    state : SpinorGrid
    hamiltonian : Hamiltonian or PotentialSpec
    tau : float
        The step count is ``ceil(|tau| / dt)`` and the step is shrunk to fit.
    check : bool
        Enforce the boundary-amplitude guard before and after.
    source : callable, optional
        ``source(t) -> SpinorGrid`` adds the inhomogeneous term of
        ``i hbar d psi/dt = H psi + s(t)`` by the midpoint rule. Used to
        propagate differences between two Hamiltonians without cancellation.
    """
    if not isinstance(hamiltonian, Hamiltonian):
        hamiltonian = Hamiltonian(hamiltonian)
    if tau == 0:
        return state
    grid = state.grid
    c = hamiltonian.potential.consts
    if check:
        check_boundary(state)
    nsteps = max(1, int(np.ceil(abs(tau) / grid.dt - 1e-9)))
    h = tau / nsteps
    kin = np.exp(-0.5j * h * c.hbar * grid.k ** 2 / (2.0 * c.mass))
    kin_full = kin * kin
    phase, cc, uge, ueg = _potential_factor(hamiltonian, grid, h)
    comps = np.array(state.components)
    ncomp = comps.shape[0]

    def pot(arr):
        arr = arr * phase
        if cc is not None:
            g, e = arr[0].copy(), arr[1].copy()
            arr[0] = cc * g + uge * e
            arr[1] = cc * e + ueg * g
        return arr

    if source is None:
        f = np.fft.fft(comps, axis=-1) * kin
        for i in range(nsteps):
            arr = pot(np.fft.ifft(f, axis=-1))
            f = np.fft.fft(arr, axis=-1) * (kin_full if i < nsteps - 1 else kin)
        out = np.fft.ifft(f, axis=-1)
    else:
        # psi_{j+1} = U psi_j + (h / i hbar) U_half s(t_j + h/2), U = K/2 P K/2
        hphase, hc, huge, hueg = _potential_factor(hamiltonian, grid, 0.5 * h)

        def pot_half(arr):
            arr = arr * hphase
            if hc is not None:
                g, e = arr[0].copy(), arr[1].copy()
                arr[0] = hc * g + huge * e
                arr[1] = hc * e + hueg * g
            return arr

        kin_quarter = np.exp(-0.25j * h * c.hbar * grid.k ** 2 / (2.0 * c.mass))
        out = comps.astype(complex)
        for i in range(nsteps):
            out = np.fft.ifft(np.fft.fft(pot(np.fft.ifft(np.fft.fft(out, axis=-1) * kin,
                                                          axis=-1)), axis=-1) * kin, axis=-1)
            s = np.array(source((i + 0.5) * h).components[:ncomp])
            # half step of the split propagator applied to the source
            s = np.fft.ifft(np.fft.fft(s, axis=-1) * kin_quarter, axis=-1)
            s = pot_half(s)
            s = np.fft.ifft(np.fft.fft(s, axis=-1) * kin_quarter, axis=-1)
            out = out + (h / (1j * c.hbar)) * s
    g1 = out[2] if ncomp == 3 else None
    result = SpinorGrid(grid, out[0], out[1], g1)
    if check:
        check_boundary(result)
    return result


def _apply_p(a: np.ndarray, grid: Grid, hbar: float, power: int = 1) -> np.ndarray:
    return np.fft.ifft((hbar * grid.k) ** power * np.fft.fft(a))


def apply_h0(state: SpinorGrid, potential: PotentialSpec) -> SpinorGrid:
    """Field-free Hamiltonian (kinetic plus potential) acting on the state."""
    c = potential.consts
    v = eval_potential(potential, state.x)
    f = lambda a: _apply_p(a, state.grid, c.hbar, 2) / (2 * c.mass) + v * a
    g1 = None if state.amp_g1 is None else f(state.amp_g1)
    return SpinorGrid(state.grid, f(state.amp_g0), f(state.amp_e), g1)


def apply_drive(state: SpinorGrid, drive, consts: PhysicalConstants) -> SpinorGrid:
    """Drive interaction H_I acting on the state (g1 is not coupled)."""
    q = _as_drive(drive).offdiag(state.x, consts)
    g1 = None if state.amp_g1 is None else np.zeros_like(state.amp_g1)
    return SpinorGrid(state.grid, 0.5 * q * state.amp_e,
                      0.5 * np.conj(q) * state.amp_g0, g1)


def _sub(a: SpinorGrid, b: SpinorGrid) -> SpinorGrid:
    g1 = None
    if a.amp_g1 is not None:
        g1 = a.amp_g1 - b.amp_g1
    return SpinorGrid(a.grid, a.amp_g0 - b.amp_g0, a.amp_e - b.amp_e, g1)


def _comm(A, B, s):
    return _sub(A(B(s)), B(A(s)))


def commutator_state(state: SpinorGrid, which: str, beams: PhamdownBeams,
                     gamma: float, potential: PotentialSpec) -> SpinorGrid:
    """M1 = [H_I, [H0, H_I]] or M2 = [H0, [H0, H_I]] applied to ``state``."""
    c = potential.consts
    drive = PhamdownDrive(beams, gamma)
    HI = lambda s: apply_drive(s, drive, c)
    H0 = lambda s: apply_h0(s, potential)
    inner_c = lambda s: _comm(H0, HI, s)
    if which == "M1":
        return _comm(HI, inner_c, state)
    if which == "M2":
        return _comm(H0, inner_c, state)
    raise ValueError("which must be 'M1' or 'M2'")


def commutator_norm(state: SpinorGrid, which: str, beams: PhamdownBeams,
                    gamma: float, consts: PhysicalConstants | None = None,
                    potential: PotentialSpec | None = None) -> float:
    """Norm of a nested commutator applied to ``state``."""
    if potential is None:
        potential = IdealHarmonic(consts or PhysicalConstants())
    out = commutator_state(state, which, beams, gamma, potential)
    return float(np.sqrt(out.norm2()))


def observe(state: SpinorGrid, observable: str,
            potential: PotentialSpec | None = None) -> float:
    """Expectation value of x, p, x2, p2, H or the total norm."""
    g = state.grid
    c = g.consts if potential is None else potential.consts
    x = g.x
    if observable == "norm":
        return state.norm2()
    n2 = state.norm2()
    tot = 0.0
    for a in state.components:
        if observable == "x":
            tot += np.sum(x * np.abs(a) ** 2) * g.dx
        elif observable in ("x2", "x²"):
            tot += np.sum(x ** 2 * np.abs(a) ** 2) * g.dx
        elif observable in ("p", "p2", "p²", "H"):
            fa = np.fft.fft(a)
            w = np.abs(fa) ** 2 / g.n_points * g.dx
            pk = c.hbar * g.k
            if observable == "p":
                tot += np.sum(pk * w)
            elif observable == "H":
                pot = IdealHarmonic(c) if potential is None else potential
                tot += np.sum(pk ** 2 * w) / (2 * c.mass)
                tot += np.sum(eval_potential(pot, x) * np.abs(a) ** 2) * g.dx
            else:
                tot += np.sum(pk ** 2 * w)
        else:
            raise ValueError(f"unknown observable {observable!r}")
    return float(tot / n2)


def observe_all(state: SpinorGrid, potential: PotentialSpec | None = None) -> dict:
    out = {k: observe(state, k, potential) for k in ("x", "p", "H", "norm")}
    out.update({f"pop_{k}": v for k, v in state.populations().items()})
    return out


def run_sequence(state: SpinorGrid, seq: PulseSequence, beams: PhamdownBeams | None = None,
                 trace: bool = True, remove_global_phase: bool = True,
                 repeats: Optional[int] = None):
    """Execute a pulse sequence on the grid.

    Returns the final state and a list of per-step observable records. When
    ``remove_global_phase`` is set the analytic phase of forward-complement
    replacements is divided out, so the result is directly comparable with
    the ideal sequence.
    """
    beams = beams or seq.beams
    if beams is None:
        raise ValueError("a beam configuration is required")
    nrep = seq.repeats if repeats is None else repeats
    records = []
    for r in range(nrep):
        for i, step in enumerate(seq.steps):
            drive = PhamdownDrive(beams, step.gamma) if step.kind == "driven" else None
            state = evolve(state, Hamiltonian(step.potential, drive), step.signed_tau)
            if trace:
                rec = observe_all(state, step.potential)
                rec.update(repeat=r, step=i, kind=step.kind, tau=step.signed_tau)
                records.append(rec)
    if remove_global_phase and seq.phase_per_repeat:
        state = state.scaled(np.exp(-1j * nrep * seq.phase_per_repeat))
    return state, records


def energy_expectation(state: SpinorGrid, hamiltonian) -> float:
    """<H> for a field potential plus optional drive, normalized by the norm."""
    if not isinstance(hamiltonian, Hamiltonian):
        hamiltonian = Hamiltonian(hamiltonian)
    c = hamiltonian.potential.consts
    hs = apply_h0(state, hamiltonian.potential)
    if hamiltonian.extra_potential is not None:
        v = hamiltonian.extra_potential(state.x)
        hs = _add(hs, SpinorGrid(state.grid, v * state.amp_g0, v * state.amp_e,
                                 None if state.amp_g1 is None else v * state.amp_g1))
    if hamiltonian.drive is not None:
        hs = _add(hs, apply_drive(state, hamiltonian.drive, c))
    return float(inner(state, hs).real / state.norm2())


def _add(a: SpinorGrid, b: SpinorGrid) -> SpinorGrid:
    g1 = None
    if a.amp_g1 is not None:
        g1 = a.amp_g1 + (0 if b.amp_g1 is None else b.amp_g1)
    return SpinorGrid(a.grid, a.amp_g0 + b.amp_g0, a.amp_e + b.amp_e, g1)


def trotter_m_norms(state: SpinorGrid, beams: PhamdownBeams, gamma: float,
                    potential: PotentialSpec, tau: float, lattice: int = 4):
    """Maximum commutator norms entering the splitting bound over one step.

    The two families of states are evaluated on a ``lattice x lattice`` grid
    of times ``0 <= t3 <= t1 <= tau``:

    M1(t1, t3) = [H_I, [H0, H_I]] exp(-i H_I (t1 - t3)) exp(-i H0 t1 / 2) psi
    M2(t1, t3) = [H0, [H0, H_I]] exp(-i H0 t3 / 2) exp(-i H_I t1) exp(-i H0 t1 / 2) psi

    Returns ``(m1_max, m2_max)``.
    """
    from .pulses import driven_rotation_exact
    t1s = np.linspace(0.0, tau, lattice)
    fr = np.linspace(0.0, 1.0, lattice)
    m1 = m2 = 0.0
    for t1 in t1s:
        half = evolve(state, potential, 0.5 * t1, check=False)
        for f in fr:
            t3 = f * t1
            s1 = driven_rotation_exact(half, beams, gamma, t1 - t3)
            m1 = max(m1, commutator_norm(s1, "M1", beams, gamma, potential=potential))
            s2 = driven_rotation_exact(half, beams, gamma, t1)
            s2 = evolve(s2, potential, 0.5 * t3, check=False)
            m2 = max(m2, commutator_norm(s2, "M2", beams, gamma, potential=potential))
    return m1, m2

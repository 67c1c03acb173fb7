"""Closed-form error bounds, basic norms and bound reports.

Every bound evaluator is a deterministic pure function. Bounds that compare
against a measurement are wrapped in a ``BoundReport`` carrying the margin.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .gwp_core import GwpTerm, PhysicalConstants, derive_spread, evaluate
from .potentials import gaussian_product, smooth_delta, smooth_step

SQRT_PI = math.sqrt(math.pi)


@dataclass
class BoundReport:
    """A named bound, its inputs and value, and optionally a measured error.

    ``paper_eq`` holds a short descriptive label of the bound.
    """

    name: str
    paper_eq: str
    inputs: dict = field(default_factory=dict)
    bound_value: float = 0.0
    measured_error: Optional[float] = None

    def __post_init__(self):
        if not self.bound_value >= 0:
            raise ValueError(f"bound {self.name} is negative or NaN")
        self.bound_value = float(self.bound_value)
        self.inputs = {k: float(v) for k, v in self.inputs.items()}

    @property
    def margin(self) -> Optional[float]:
        if self.measured_error is None:
            return None
        return self.bound_value - self.measured_error

    @property
    def verdict(self) -> Optional[str]:
        if self.measured_error is None:
            return None
        return "PASS" if self.margin >= 0 else "FAIL"

    def with_measurement(self, measured: float) -> "BoundReport":
        return BoundReport(self.name, self.paper_eq, dict(self.inputs),
                           self.bound_value, float(measured))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["margin"] = self.margin
        d["verdict"] = self.verdict
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        return cls(d["name"], d["paper_eq"], d.get("inputs", {}),
                   d["bound_value"], d.get("measured_error"))


def _double_factorial(n: int) -> int:
    return 1 if n <= 0 else n * _double_factorial(n - 2)


def gaussian_integral_ik(k: int, x0: float, eps0: float) -> float:
    """Integral of x^k exp(-(x - x0)^2 / eps0^2) over the real line."""
    if k < 0 or not eps0 > 0:
        raise ValueError("need k >= 0 and eps0 > 0")
    tot = 0.0
    for j in range(0, k + 1, 2):
        tot += (math.comb(k, j) * _double_factorial(j - 1) / math.sqrt(2.0 ** j)
                * x0 ** (k - j) * eps0 ** j)
    return eps0 * SQRT_PI * tot


def erfc_tail_bound(y_m: float) -> float:
    """Upper bound of the Gaussian tail integral from ``y_m`` to infinity."""
    if y_m < 0:
        raise ValueError("y_m must be nonnegative")
    return math.exp(-y_m ** 2) / (y_m + math.sqrt(y_m ** 2 + 4.0 / math.pi))


def ld_moment(m: int, eps: float) -> float:
    """Absolute moment of order m of a normalized density exp(-y^2/eps^2)/(eps sqrt(pi))."""
    if m % 2 == 0:
        return _double_factorial(m - 1) / math.sqrt(2.0 ** m) * eps ** m
    return math.factorial((m - 1) // 2) * eps ** m / SQRT_PI


def basic_norm(kind: str, l: int, g: GwpTerm, center: float, eps: float) -> float:
    """Norm of x^l times a smooth delta (NBAS1) or smooth step (NBAS2) times Psi.

    NBAS1 uses the Gaussian product identity in closed form for pure
    packets; NBAS2 (and NBAS1 with a prefactor) uses adaptive quadrature.
    NBAS2 involves the step ``Theta(x - center)``.
    """
    if not 0 <= l <= 6:
        raise ValueError("order must lie in 0..6")
    if kind == "NBAS1" and g.is_pure:
        e_wp = derive_spread(g)
        # |delta|^2 is a Gaussian of width eps/sqrt(2) with peak 1/(pi eps^2)
        eps0_sq, x0, pref = gaussian_product(center, eps / math.sqrt(2.0), g.x_c, e_wp)
        amp2 = abs(g.amplitude) ** 2 / (math.pi * eps ** 2 * e_wp * SQRT_PI)
        val = amp2 * pref * gaussian_integral_ik(2 * l, x0, math.sqrt(eps0_sq))
        return math.sqrt(max(val, 0.0))
    if kind == "NBAS1":
        weight = lambda x: smooth_delta(x - center, eps) ** 2
        lo, hi = center - 12 * eps, center + 12 * eps
    elif kind == "NBAS2":
        weight = lambda x: smooth_step(x - center, eps) ** 2
        lo, hi = center - 12 * eps, np.inf
    else:
        raise ValueError("kind must be NBAS1 or NBAS2")
    e_wp = derive_spread(g)
    f = lambda x: float(x ** (2 * l) * weight(x) * abs(evaluate(g, x)) ** 2)
    a = max(lo, g.x_c - 40 * e_wp)
    b = min(hi, g.x_c + 40 * e_wp)
    if b <= a:
        return 0.0
    pts = [p for p in (center, g.x_c) if a < p < b]
    val, _ = integrate.quad(f, a, b, points=pts or None, limit=400,
                            epsabs=0.0, epsrel=1e-13)
    return math.sqrt(max(val, 0.0))


def p_function(x_L: float, eps: float, x_c: float) -> float:
    """Polynomial prefactor of the tail moment bound for the joint at x_L."""
    y = (x_L - x_c) / eps
    a = (3 * eps ** 4 + 12 * eps ** 2 * x_c ** 2 + 4 * x_c ** 4) / (
        y + math.sqrt(y * y + 4.0 / math.pi))
    b = (y * (3 + 2 * y * y) * eps ** 4 + 8 * (1 + y * y) * eps ** 3 * x_c
         + 12 * y * eps ** 2 * x_c ** 2 + 8 * eps * x_c ** 3)
    return (a + b) / (4.0 * SQRT_PI)


def tail_moment_exact(x_L: float, eps: float, x_c: float) -> float:
    """Integral of x^4 |Psi|^2 beyond x_L for a packet of spread eps at x_c."""
    f = lambda x: x ** 4 * math.exp(-((x - x_c) / eps) ** 2) / (eps * SQRT_PI)
    val, _ = integrate.quad(f, x_L, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def trajectory_summary(g: GwpTerm, x_L: float, T: float, n_samples: int = 257,
                       hamiltonian: str = "harmonic") -> dict:
    """Worst-case joint parameters along the exact trajectory of ``g``."""
    from .gwp_core import evolve_quadratic
    ts = np.linspace(0.0, T, n_samples)
    traj = [evolve_quadratic(g, hamiltonian, float(t)) for t in ts]
    xs = np.array([s.x_c for s in traj])
    es = np.array([derive_spread(s) for s in traj])
    ys = (x_L - xs) / es
    ps = [p_function(x_L, e, x) for e, x in zip(es, xs)]
    return {"x_M": float(np.max(np.abs(xs))), "eps_M": float(np.max(es)),
            "y_M_min": float(np.min(ys)), "P_max": float(np.max(ps))}


def imperfection_bound(summary: dict, x_L: float, consts: PhysicalConstants,
                       T: float) -> BoundReport:
    """First-order bound on the deviation caused by the far side of the joint."""
    y = summary["y_M_min"]
    if not y > 0:
        raise ValueError("the wave packet reaches the joint (y_M_min <= 0)")
    P = summary["P_max"]
    val = (abs(T) / consts.hbar * 0.5 * consts.mass * consts.omega ** 2
           * math.sqrt(P) * math.exp(-0.5 * y * y))
    inputs = dict(summary, x_L=x_L, T=T)
    return BoundReport("imperfection", "harmonic-imperfection first-order bound",
                       inputs, val)


def imperfection_from_energy(E: float, x_L: float, consts: PhysicalConstants,
                             T: float) -> BoundReport:
    """Imperfection bound with worst-case parameters taken from energy boxes."""
    box = energy_param_bounds(E, consts, x_L)
    y = box["dev_ratio_lower"]
    summary = {"x_M": box["x_c_max"], "eps_M": math.sqrt(box["eps2_max"]),
               "y_M_min": y,
               "P_max": p_function(x_L, math.sqrt(box["eps2_max"]), box["x_c_max"])}
    return imperfection_bound(summary, x_L, consts, T)


def trotter_bound(m1_max: float, m2_max: float, tau: float,
                  consts: PhysicalConstants) -> BoundReport:
    """Third-order bound for the symmetric splitting over one step."""
    if m1_max < 0 or m2_max < 0:
        raise ValueError("commutator norms must be nonnegative")
    val = 0.5 / 6.0 * abs(tau) ** 3 / consts.hbar ** 3 * (m1_max + 0.5 * m2_max)
    return BoundReport("trotter", "symmetric splitting third-order bound",
                       {"m1_max": m1_max, "m2_max": m2_max, "tau": tau}, val)


def energy_param_bounds(E: float, consts: PhysicalConstants,
                        x_L: Optional[float] = None) -> dict:
    """Parameter boxes implied by the motional energy of a packet."""
    if not E > 0:
        raise ValueError("energy must be positive")
    m, w, hb = consts.mass, consts.omega, consts.hbar
    out = {
        "x_c_max": math.sqrt(2 * E / (m * w * w)),
        "p_c_max": math.sqrt(2 * m * E),
        "eps2_min": hb * hb / (4 * m * E),
        "eps2_max": 4 * E / (m * w * w),
        "W_min": hb * hb / (8 * m * E),
        "W_max": 2 * E / (m * w * w),
    }
    if x_L is not None:
        out["dev_ratio_lower"] = (x_L - out["x_c_max"]) / math.sqrt(out["eps2_max"])
    return out


def _u(params, key="omega0"):
    return params["omega0"] * params["delta_t"] / math.sqrt(params.get("n", 1))


def _seq(params, a, b):
    om = 2.0 * _u(params)
    e, dk = params["eps0"], abs(params["dk"])
    return om ** 3 * e ** 3 * dk ** 3 * math.sqrt(a + b * e * dk / SQRT_PI)


def _ld_sum(dk, eps, first_order: bool):
    tot = 0.0
    for l in range(3):
        if first_order:
            tot += (math.comb(2, l) * 0.5 ** l * (1 / 6) ** (2 - l)
                    * dk ** (2 - l) * ld_moment(6 - l, eps))
        else:
            tot += (math.comb(2, l) * (1 / 6) ** l * (1 / 24) ** (2 - l)
                    * dk ** (2 - l) * ld_moment(8 - l, eps))
    return tot


_LABELS = {
    "LD_512": "Lamb-Dicke residual, second-order phase",
    "LD_513": "Lamb-Dicke residual, first-order phase",
    "MGWP_535": "ten-term expansion residual",
    "MGWP_539": "ten-term expansion residual, two-step variant",
    "SEQ_639": "sequence truncation after the first driven step",
    "SEQ_654": "sequence truncation after the second driven step",
    "SEQ_672": "sequence truncation after the third driven step",
    "SEQ_689": "sequence truncation after the fourth driven step",
    "RED_694": "basic-sequence reduction to the target propagator",
    "LDSTEP_6100": "per-sequence Lamb-Dicke step residual",
}

_NEEDS = {
    "LD_512": ("p_tr", "dk", "eps0"),
    "LD_513": ("p_tr", "dk", "eps0"),
    "MGWP_535": ("beta_c", "beta_s", "dk", "eps0"),
    "MGWP_539": ("beta_c", "beta_s", "dk", "eps0"),
    "SEQ_639": ("omega0", "delta_t", "n", "dk", "eps0"),
    "SEQ_654": ("omega0", "delta_t", "n", "dk", "eps0"),
    "SEQ_672": ("omega0", "delta_t", "n", "dk", "eps0"),
    "SEQ_689": ("omega0", "delta_t", "n", "dk", "eps0"),
    "RED_694": ("omega0", "delta_t", "n"),
    "LDSTEP_6100": ("omega0", "delta_t", "n", "dk", "eps0"),
}


def expansion_bound(which: str, **params) -> BoundReport:
    """Evaluate one of the closed-form expansion and sequence bounds.

    Parameters are passed by keyword: ``omega0, delta_t, n, dk, eps0,
    beta_c, beta_s, p_tr, hbar`` as the chosen formula requires.
    """
    if which not in _NEEDS:
        raise ValueError(f"unknown bound {which!r}")
    for k in _NEEDS[which]:
        if k not in params:
            raise ValueError(f"bound {which} needs parameter {k!r}")
    for k in ("omega0", "delta_t", "n", "eps0", "p_tr"):
        if k in params and params[k] < 0:
            raise ValueError(f"parameter {k} must be nonnegative")
    hb = params.get("hbar", 1.0)
    if which in ("LD_512", "LD_513"):
        dk, eps = abs(params["dk"]), params["eps0"]
        first = which == "LD_513"
        pref = abs(params["p_tr"] / hb) * dk ** (1 if first else 2)
        val = pref * math.sqrt(_ld_sum(dk, eps, first))
    elif which in ("MGWP_535", "MGWP_539"):
        bc, bs = abs(params["beta_c"]), abs(params["beta_s"])
        e, dk = params["eps0"], abs(params["dk"])
        a, b = (5 / 6144, 1 / (256 * SQRT_PI)) if which == "MGWP_535" else (
            5 / 12288, 1 / (512 * SQRT_PI))
        val = math.sqrt(a * bs ** 6 * e ** 6 * dk ** 6 + b * bc * bs ** 5 * e ** 7 * dk ** 7)
    elif which == "SEQ_639":
        val = _seq(params, 5 / 6144, 1 / 256)
    elif which == "SEQ_654":
        val = _seq(params, 5 / 12288, 1 / 512)
    elif which == "SEQ_672":
        val = _seq(params, 245 / 1536, 49 / 64)
    elif which == "SEQ_689":
        val = _seq(params, 125 / 192, 25 / 8)
    elif which == "RED_694":
        u = 4.0 * _u(params)
        val = 5 / 6 * u ** 3 + 0.5 * u ** 4 + u ** 6 / 48
    else:
        n = params["n"]
        e, dk = params["eps0"], abs(params["dk"])
        q = (2 * params["omega0"] * params["delta_t"]) ** 2 / n
        val = q * e ** 3 * dk ** 3 * math.sqrt(15 / 288 + e * dk / (12 * SQRT_PI))
    return BoundReport(which, _LABELS[which], params, val)


FAMILIES = ("first", "second", "ldstep")


def total_error_budget(reports: dict, n: int) -> BoundReport:
    """Sum the per-sequence error families over ``n`` basic sequences.

    Parameters
    ----------
    reports : dict
        ``'first'`` and ``'second'`` map to lists of per-sequence bound
        values (one entry per repeat, or a single entry reused for all
        repeats); each entry may be a float or a list of BoundReports.
        ``'ldstep'`` is the single per-sequence Lamb-Dicke step bound.
        An optional ``'reduction'`` entry adds the per-sequence reduction
        bound for each repeat.
    n : int
        Number of basic sequences.
    """
    for fam in FAMILIES:
        if fam not in reports:
            raise ValueError(f"missing error family {fam!r}")

    def per_repeat(entry):
        if isinstance(entry, BoundReport):
            return [entry.bound_value] * n
        if isinstance(entry, (int, float)):
            return [float(entry)] * n
        vals = []
        for e in entry:
            if isinstance(e, BoundReport):
                vals.append(e.bound_value)
            elif isinstance(e, (list, tuple)):
                vals.append(sum(r.bound_value if isinstance(r, BoundReport) else float(r)
                                for r in e))
            else:
                vals.append(float(e))
        if len(vals) == 1:
            vals = vals * n
        if len(vals) != n:
            raise ValueError("family entries must cover every repeat")
        return vals

    first = sum(per_repeat(reports["first"]))
    second = sum(per_repeat(reports["second"]))
    ld = n * (reports["ldstep"].bound_value if isinstance(reports["ldstep"], BoundReport)
              else float(reports["ldstep"]))
    red = sum(per_repeat(reports["reduction"])) if "reduction" in reports else 0.0
    total = first + second + ld + red
    return BoundReport("total_budget", "total error budget of the repeated pulse",
                       {"n": n, "first_family": first, "second_family": second,
                        "ldstep_family": ld, "reduction_family": red}, total)

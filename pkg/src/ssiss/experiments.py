"""Reproducible experiment scenarios, configuration and report emission."""

from __future__ import annotations

import copy
import csv
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import optimize, stats

from .bounds import (BoundReport, basic_norm, energy_param_bounds, expansion_bound,
                     imperfection_bound, imperfection_from_energy, total_error_budget,
                     trajectory_summary, trotter_bound)
from .gwp_core import (GaussianSuperposition, GwpTerm, PhysicalConstants, derive_spread,
                       evolve_quadratic)
from .grid_oracle import (BoundaryLeakError, Grid, Hamiltonian, SpinorGrid, distance,
                          energy_expectation, evolve, observe, observe_all, run_sequence,
                          sample, trotter_m_norms)
from .mgwp_expand import lamb_dicke_state
from .potentials import (FreeSpace, IdealHarmonic, SmoothDoubleWell, DoubleWell,
                         RealWorldWindow, v1_ho)
from .pulses import (GAMMAS, PhamdownBeams, PhamdownDrive, RabiWindowDrive,
                     build_sequence, driven_rotation_exact, target_propagator)

SCENARIOS = ("oracle-validate", "imperfection-sweep", "trotter-scaling", "pulse-basic",
             "ssiss-run", "selective-excite")

DEFAULTS = {
    "physics": {"hbar": 1.0, "mass": 1.0, "omega": 1.0},
    "potential": {"kind": "smooth_double_well", "x_L": 8.0, "L": 16.0, "L_h": None,
                  "eps_smooth": 0.05, "x_R": None, "R": None, "R_h": None},
    "beams": {"omega0": 0.5, "dk": 0.05, "ksum": 0.2, "window": None,
              "eps_window": 0.05},
    "pulse": {"delta_t": 0.2, "n": 16, "kind": "experimental_a"},
    "state": {"x_c": 0.0, "p_c": 0.0, "dx2": None, "t0_param": 0.0},
    "grid": {"n_points": 2048, "dt": None},
    "params": {},
    "sweep": [],
    "seed": 0,
    "workers": 1,
    "output_dir": "out",
}

_SCENARIO_PARAMS = {
    "oracle-validate": {"free_time": 2.0, "conservation_steps": 1000,
                        "recurrence_tol": 1e-8, "norm_drift_tol": 1e-10,
                        "energy_drift_tol": 1e-8, "n_random": 8},
    "imperfection-sweep": {"x_L_over_eps": [4, 5, 6, 7, 8], "T": 2 * math.pi,
                           "r2_min": 0.99},
    "trotter-scaling": {"taus": [0.02, 0.04, 0.08, 0.16, 0.2], "gamma": 0.0,
                        "substeps": 400, "slope_window": 0.3},
    "pulse-basic": {"taus": [0.0125, 0.025, 0.05, 0.1], "slope_window": 0.3},
    "ssiss-run": {"momentum_tol": 0.01, "fit_tol": 1e-3, "lattice": 4},
    "selective-excite": {"separation": 8.0, "target_x": 0.0, "omega1": 20.0,
                         "threshold": 0.999},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_value(text: str):
    """Interpret a command-line value as JSON, falling back to a plain string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


@dataclass
class ExperimentConfig:
    """Configuration of one scenario run; all sections are plain dicts."""

    scenario: str
    physics: dict = field(default_factory=lambda: dict(DEFAULTS["physics"]))
    potential: dict = field(default_factory=lambda: dict(DEFAULTS["potential"]))
    beams: dict = field(default_factory=lambda: dict(DEFAULTS["beams"]))
    pulse: dict = field(default_factory=lambda: dict(DEFAULTS["pulse"]))
    state: dict = field(default_factory=lambda: dict(DEFAULTS["state"]))
    grid: dict = field(default_factory=lambda: dict(DEFAULTS["grid"]))
    params: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)
    seed: int = 0
    workers: int = 1
    output_dir: str = "out"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; "
                             f"choose from {', '.join(SCENARIOS)}")
        self.params = _merge(_SCENARIO_PARAMS[self.scenario], self.params)
        for entry in self.sweep:
            path, values = entry[0], entry[1]
            if not isinstance(path, str) or not list(values):
                raise ValueError("sweep entries are (parameter path, values)")
            for v in values:
                if isinstance(v, (int, float)) and not math.isfinite(v):
                    raise ValueError(f"sweep value for {path} is not finite")

    @classmethod
    def from_dict(cls, d: dict, scenario: Optional[str] = None) -> "ExperimentConfig":
        d = dict(d)
        scenario = scenario or d.pop("scenario", None)
        d.pop("scenario", None)
        if scenario is None:
            raise ValueError("config names no scenario")
        unknown = set(d) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        full = _merge({k: v for k, v in DEFAULTS.items()}, d)
        return cls(scenario=scenario, **full)

    @classmethod
    def from_file(cls, path, scenario: Optional[str] = None) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()), scenario)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "physics": self.physics,
                "potential": self.potential, "beams": self.beams, "pulse": self.pulse,
                "state": self.state, "grid": self.grid, "params": self.params,
                "sweep": [list(s) for s in self.sweep], "seed": self.seed,
                "workers": self.workers, "output_dir": self.output_dir}

    def with_override(self, path: str, value) -> "ExperimentConfig":
        """Return a copy with the dotted ``path`` set to ``value``."""
        d = copy.deepcopy(self.to_dict())
        keys = path.split(".")
        if keys[0] not in d:
            raise ValueError(f"unknown config key {path!r}")
        node = d
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                node[k] = {}
            node = node[k]
        node[keys[-1]] = value
        return ExperimentConfig(**d)


@dataclass
class ExperimentReport:
    """Self-contained result of a run.

    ``timing`` holds wall-clock data and is the only field that varies
    between identical runs.
    """

    config: dict
    traces: dict = field(default_factory=dict)
    bounds: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    plot: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def add_bound(self, report: BoundReport, key: Optional[str] = None) -> None:
        self.bounds.append(report)
        if report.verdict is not None:
            self.verdicts[key or f"bound:{report.name}"] = report.verdict

    def check(self, name: str, ok: bool) -> None:
        self.verdicts[name] = "PASS" if ok else "FAIL"

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(v == "PASS" for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {"config": self.config, "traces": self.traces,
                "bounds": [b.to_dict() for b in self.bounds], "fits": self.fits,
                "verdicts": self.verdicts, "rows": self.rows, "plot": self.plot,
                "passed": self.passed, "timing": self.timing}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(d["config"], d.get("traces", {}),
                   [BoundReport.from_dict(b) for b in d.get("bounds", [])],
                   d.get("fits", {}), d.get("verdicts", {}), d.get("rows", []),
                   d.get("plot", {}), d.get("timing", {}))

    def to_json(self, include_timing: bool = True) -> str:
        d = _jsonable(self.to_dict())
        if not include_timing:
            d.pop("timing")
        return json.dumps(d, indent=2, sort_keys=True, allow_nan=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# ----------------------------------------------------------------- builders

def build_consts(cfg: ExperimentConfig) -> PhysicalConstants:
    p = cfg.physics
    return PhysicalConstants(p["hbar"], p["mass"], p["omega"])


def build_potential(cfg: ExperimentConfig, x_L: Optional[float] = None):
    c = build_consts(cfg)
    p = cfg.potential
    kind = p["kind"]
    xl = p["x_L"] if x_L is None else x_L
    L = p.get("L") if x_L is None else None
    if kind == "harmonic":
        return IdealHarmonic(c)
    if kind == "free":
        return FreeSpace(c)
    if kind == "double_well":
        return DoubleWell(xl, L, p.get("L_h"), c)
    if kind == "smooth_double_well":
        return SmoothDoubleWell(xl, L, p.get("L_h"), p.get("eps_smooth"), c)
    if kind == "real_world":
        return RealWorldWindow(p["x_R"], p["R"], xl, p["L"], p.get("R_h"), p.get("L_h"),
                               p.get("eps_smooth"), c)
    raise ValueError(f"unknown potential kind {kind!r}")


def build_beams(cfg: ExperimentConfig) -> PhamdownBeams:
    b = cfg.beams
    window = b.get("window")
    if window is None and "x_L" in cfg.potential:
        window = (None, cfg.potential["x_L"])
    elif window is not None:
        window = tuple(window)
    return PhamdownBeams.from_dk(b["omega0"], b["dk"], b["ksum"], window=window,
                                 eps_window=b.get("eps_window"))


def initial_state(cfg: ExperimentConfig) -> GwpTerm:
    c = build_consts(cfg)
    s = cfg.state
    dx2 = s.get("dx2") or c.hbar / (2 * c.mass * c.omega)
    return GwpTerm(1.0, 0.0, s["x_c"], s["p_c"], dx2, s.get("t0_param", 0.0),
                   consts=c)


def _grid_for(cfg: ExperimentConfig, potential, g: GwpTerm, extra: float = 0.0) -> Grid:
    c = potential.consts
    E = 0.5 * g.p_c ** 2 / c.mass + 0.5 * c.mass * c.omega ** 2 * g.x_c ** 2
    x_max = max(abs(g.x_c), math.sqrt(2 * E) / (math.sqrt(c.mass) * c.omega)) + extra
    return Grid.for_problem(potential, x_max, derive_spread(g) * 1.5,
                            cfg.grid["n_points"], cfg.grid.get("dt"))


def slope_fit(x, y) -> dict:
    """Least-squares line with standard error and R^2."""
    r = stats.linregress(np.asarray(x, float), np.asarray(y, float))
    return {"slope": float(r.slope), "slope_stderr": float(r.stderr),
            "intercept": float(r.intercept), "r2": float(r.rvalue ** 2)}


# ------------------------------------------------------------- scenarios

def _oracle_validate(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    c = build_consts(cfg)
    prm = cfg.params
    g = initial_state(cfg)
    harm = IdealHarmonic(c)
    grid = _grid_for(cfg, harm, g)
    s0 = sample(g, grid)
    t0 = time.perf_counter()
    s1 = evolve(s0, harm, 2 * math.pi / c.omega)
    infid = 1.0 - abs(np.vdot(s0.amp_g0, s1.amp_g0) * grid.dx) ** 2
    rep.timing["recurrence_s"] = time.perf_counter() - t0
    rep.add_bound(BoundReport("recurrence_infidelity", "full-period recurrence tolerance",
                              {"n_points": grid.n_points, "dt": grid.dt},
                              prm["recurrence_tol"]).with_measurement(max(infid, 0.0)))

    # free spreading against the exact kernel
    tf = prm["free_time"]
    free = FreeSpace(c)
    gf = evolve_quadratic(g, "free", tf)
    eps_end = derive_spread(gf)
    fgrid = Grid(g.x_c - 12 * eps_end, g.x_c + 12 * eps_end + abs(g.p_c) * tf / c.mass,
                 cfg.grid["n_points"], cfg.grid.get("dt"), c)
    sf = evolve(sample(g, fgrid), free, tf)
    var = observe(sf, "x2") - observe(sf, "x") ** 2
    rep.add_bound(BoundReport("free_spread_variance", "free-spreading variance tolerance",
                              {"t": tf, "eps_t": eps_end}, 1e-8)
                  .with_measurement(abs(var - 0.5 * eps_end ** 2)))
    rep.add_bound(BoundReport("free_state_distance", "free-evolution state tolerance",
                              {"t": tf}, 1e-8)
                  .with_measurement(distance(sf, sample(gf, fgrid))))

    # random packets: grid energy against the closed form
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    from .gwp_core import energy
    for _ in range(prm["n_random"]):
        h = GwpTerm(1.0, 0.0, rng.uniform(-1, 1), rng.uniform(-1, 1),
                    rng.uniform(0.3, 1.0), rng.uniform(-1, 1), consts=c)
        hg = sample(h, _grid_for(cfg, harm, h))
        e_grid = observe(hg, "H", harm)
        worst = max(worst, abs(e_grid - energy(h, c)) / energy(h, c))
    rep.add_bound(BoundReport("random_energy_rel_error", "closed-form energy tolerance",
                              {"n_random": prm["n_random"]}, 1e-8)
                  .with_measurement(worst))

    for name, drift in conservation_checks(cfg, prm["conservation_steps"]).items():
        rep.traces.setdefault("conservation", {})[name] = drift
        rep.add_bound(BoundReport(f"norm_drift[{name}]", "norm conservation tolerance",
                                  {}, prm["norm_drift_tol"])
                      .with_measurement(drift["norm_drift"]))
        rep.add_bound(BoundReport(f"energy_drift[{name}]", "energy conservation tolerance",
                                  {}, prm["energy_drift_tol"])
                      .with_measurement(drift["energy_drift"]))
    rep.rows = [{"name": b.name, "bound": b.bound_value, "measured": b.measured_error,
                 "margin": b.margin} for b in rep.bounds]


def conservation_cases(cfg: ExperimentConfig, steps: int) -> dict:
    """Time-independent Hamiltonians of every scenario with their start states."""
    c = build_consts(cfg)
    g = initial_state(cfg)
    beams = build_beams(cfg)
    dw = build_potential(cfg)
    cases = {}
    harm = IdealHarmonic(c)
    cases["harmonic"] = (Hamiltonian(harm), sample(g, _grid_for(cfg, harm, g)))
    cases["double_well"] = (Hamiltonian(dw), sample(g, _grid_for(cfg, dw, g)))
    cases["phamdown_drive"] = (Hamiltonian(dw, PhamdownDrive(beams, GAMMAS[0])),
                               sample(g, _grid_for(cfg, dw, g)))
    # free and windowed Rabi cases need room for spreading over the run
    t = steps * (cfg.grid.get("dt") or 0.005 / c.omega)
    gf = evolve_quadratic(g, "free", t)
    free = FreeSpace(c)
    e_end = derive_spread(gf)
    fgrid = Grid(-12 * e_end, 12 * e_end, cfg.grid["n_points"] * 2, cfg.grid.get("dt"), c)
    cases["free"] = (Hamiltonian(free), sample(g, fgrid))
    sel = _selective_setup(cfg)
    sg = Grid(sel["target"].x_c - 12 * e_end, sel["spectator"].x_c + 12 * e_end,
              cfg.grid["n_points"] * 2, cfg.grid.get("dt"), c)
    cases["rabi_window"] = (Hamiltonian(free, sel["drive"]), sample(sel["psi"], sg))
    return cases


def conservation_checks(cfg: ExperimentConfig, steps: int = 1000) -> dict:
    """Relative norm and energy drift over ``steps`` steps of each case.

    Unless the config fixes dt, the conservative step ``Grid.strict_dt`` is
    used here, since the sharp drive window makes the coarse default step
    resolve the dressed-state edge poorly.
    """
    out = {}
    for name, (H, s0) in conservation_cases(cfg, steps).items():
        if cfg.grid.get("dt") is None:
            s0 = replace(s0, grid=replace(s0.grid, dt=s0.grid.strict_dt()))
        n0, e0 = s0.norm2(), energy_expectation(s0, H)
        s1 = evolve(s0, H, steps * s0.grid.dt)
        n1, e1 = s1.norm2(), energy_expectation(s1, H)
        out[name] = {"norm_drift": abs(n1 - n0) / n0,
                     "energy_drift": abs(e1 - e0) / abs(e0), "energy": e0}
    return out


def imperfection_point(cfg: ExperimentConfig, x_L: float, T: float):
    """Measured and bounded imperfection error for a joint at ``x_L``.

    The difference between double-well and harmonic evolution obeys
    ``i hbar d delta/dt = H_dw delta + V1 psi_ho(t)`` and is propagated
    directly from zero, so no cancellation limits small values.
    """
    c = build_consts(cfg)
    g = initial_state(cfg)
    pot = build_potential(cfg, x_L)
    # room for the above-barrier flux to move out without wrapping
    base = _grid_for(cfg, pot, g)
    grid = Grid(base.x_min, base.x_max + 4 * pot.x_L, base.n_points * 2, base.dt, c)
    v1 = v1_ho(pot, grid.x)

    def src(t):
        st = sample(evolve_quadratic(g, "harmonic", t), grid, check_support=False)
        return SpinorGrid(grid, v1 * st.amp_g0, v1 * st.amp_e)

    zero = SpinorGrid(grid, np.zeros(grid.n_points, complex), np.zeros(grid.n_points, complex))
    delta = evolve(zero, pot, T, check=False, source=src)
    measured = math.sqrt(delta.norm2())
    summary = trajectory_summary(g, pot.x_L, T)
    bound = imperfection_bound(summary, pot.x_L, c, T).with_measurement(measured)
    return bound, summary


def _imperfection_sweep(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    prm = cfg.params
    eps = derive_spread(initial_state(cfg))
    ys, ms = [], []
    for f in prm["x_L_over_eps"]:
        x_L = float(f) * eps
        b, summ = imperfection_point(cfg, x_L, prm["T"])
        b = replace(b, name=f"imperfection[x_L={x_L:g}]")
        rep.add_bound(b)
        rep.rows.append({"x_L": x_L, "y_M_min": summ["y_M_min"], "bound": b.bound_value,
                         "measured": b.measured_error, "margin": b.margin})
        ys.append(summ["y_M_min"] ** 2)
        ms.append(math.log(b.measured_error))
    fit = slope_fit(ys, ms)
    rep.fits["log_measured_vs_y2"] = fit
    rep.check("decay_affine_r2", fit["r2"] > prm["r2_min"])
    rep.check("decay_negative_slope", fit["slope"] < 0)
    rep.plot = {"x": "x_L", "y": ["bound", "measured"], "logy": True, "logx": False}


def trotter_point(cfg: ExperimentConfig, tau: float, gamma: float, substeps: int):
    """Symmetric-splitting error of one driven step against a fine grid solution."""
    c = build_consts(cfg)
    g = initial_state(cfg)
    beams = build_beams(cfg)
    pot = IdealHarmonic(c)
    base = _grid_for(cfg, pot, g)
    grid = replace(base, dt=tau / substeps)
    s = sample(g, grid)
    exact = evolve(s, Hamiltonian(pot, PhamdownDrive(beams, gamma)), tau)
    split = evolve(s, pot, 0.5 * tau)
    split = driven_rotation_exact(split, beams, gamma, tau)
    split = evolve(split, pot, 0.5 * tau)
    m1, m2 = trotter_m_norms(s, beams, gamma, pot, tau)
    return trotter_bound(m1, m2, tau, c).with_measurement(distance(exact, split))


def _trotter_scaling(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    prm = cfg.params
    taus = [float(t) for t in prm["taus"]]
    ms = []
    for tau in taus:
        b = trotter_point(cfg, tau, prm["gamma"], prm["substeps"])
        rep.add_bound(replace(b, name=f"trotter[tau={tau:g}]"))
        rep.rows.append({"tau": tau, "bound": b.bound_value, "measured": b.measured_error,
                         "margin": b.margin})
        ms.append(b.measured_error)
    fit = slope_fit(np.log(taus), np.log(ms))
    rep.fits["log_error_vs_log_tau"] = fit
    rep.check("cubic_slope", abs(fit["slope"] - 3.0) <= prm["slope_window"])
    rep.plot = {"x": "tau", "y": ["bound", "measured"], "logy": True, "logx": True}


def _worst_packet(E: float, consts: PhysicalConstants) -> GwpTerm:
    box = energy_param_bounds(E, consts)
    return GwpTerm(1.0, 0.0, box["x_c_max"], 0.0, 0.5 * box["eps2_max"], consts=consts)


def step_bounds(state: SpinorGrid, step, beams: PhamdownBeams, E: float,
                x_L: float, lattice: int = 4) -> list:
    """Per-step error bounds of one propagator in a sequence.

    Field-free steps carry the imperfection bound; driven steps add the
    splitting bound and the leakage of the drive through the window edge.
    """
    c = step.potential.consts
    out = [imperfection_from_energy(E, x_L, c, step.tau)]
    if step.kind == "driven":
        m1, m2 = trotter_m_norms(state, beams, step.gamma, step.potential, step.tau,
                                 lattice)
        out.append(trotter_bound(m1, m2, step.tau, c))
        eps_w = beams.eps_window or 1e-3 * derive_spread(_worst_packet(E, c))
        nb = basic_norm("NBAS2", 0, _worst_packet(E, c), x_L, eps_w)
        out.append(BoundReport("window_leakage", "drive leakage through the window edge",
                               {"tau": step.tau, "nbas2": nb},
                               step.tau * 2.0 * beams.omega0 * nb))
    return out


def _seq_params(cfg: ExperimentConfig, g: GwpTerm) -> dict:
    return {"omega0": cfg.beams["omega0"], "delta_t": cfg.pulse["delta_t"],
            "n": cfg.pulse["n"], "dk": cfg.beams["dk"], "eps0": derive_spread(g)}


def sequence_truncation(params: dict) -> dict:
    """Per-repeat truncation totals of the two step families."""
    v = {w: expansion_bound(w, **params).bound_value
         for w in ("SEQ_639", "SEQ_654", "SEQ_672", "SEQ_689")}
    return {"first": 2 * sum(v.values()),
            "second": 2 * (v["SEQ_639"] + v["SEQ_654"] + v["SEQ_672"])}


def run_with_budget(cfg: ExperimentConfig, state: SpinorGrid, seq, E: float,
                    lattice: int = 4):
    """Execute ``seq`` and accumulate per-repeat bound families on the way."""
    beams = seq.beams
    x_L = beams.window[1] if beams.window and beams.window[1] is not None else \
        cfg.potential["x_L"]
    trunc = sequence_truncation(_seq_params(cfg, initial_state(cfg)))
    first, second, records = [], [], []
    for r in range(seq.repeats):
        f_tot, s_tot = trunc["first"], trunc["second"]
        for i, step in enumerate(seq.steps):
            bs = step_bounds(state, step, beams, E, x_L, lattice)
            if step.kind == "driven":
                s_tot += sum(b.bound_value for b in bs)
                drive = PhamdownDrive(beams, step.gamma)
            else:
                f_tot += sum(b.bound_value for b in bs)
                drive = None
            state = evolve(state, Hamiltonian(step.potential, drive), step.signed_tau)
            rec = observe_all(state, step.potential)
            rec.update(repeat=r, step=i, kind=step.kind, tau=step.signed_tau)
            records.append(rec)
        first.append(f_tot)
        second.append(s_tot)
    if seq.phase_per_repeat:
        state = state.scaled(np.exp(-1j * seq.repeats * seq.phase_per_repeat))
    return state, records, first, second


def _energy_cap(g: GwpTerm) -> float:
    from .gwp_core import energy
    return energy(g) * (1 + 1e-6)


def _pulse_basic(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    prm = cfg.params
    c = build_consts(cfg)
    g = initial_state(cfg)
    pot = build_potential(cfg)
    beams = build_beams(cfg)
    grid = _grid_for(cfg, pot, g)
    s0 = sample(g, grid)
    n = cfg.pulse["n"]
    tau0 = cfg.pulse["delta_t"] / math.sqrt(n)
    E = _energy_cap(g)

    def measure(tau):
        seq = build_sequence("experimental_a", tau, 1, pot, beams)
        fin, _ = run_sequence(s0, seq, trace=False)
        ref = target_propagator(s0, beams, tau)
        ref = evolve(ref, IdealHarmonic(c), seq.duration)
        ref = ref.scaled(np.exp(-1j * seq.phase_per_repeat))
        return distance(fin, ref), seq

    meas, seq = measure(tau0)
    one = replace(seq, repeats=1)
    _, _, first, second = run_with_budget(cfg, s0, one, E)
    red = expansion_bound("RED_694", omega0=beams.omega0, delta_t=cfg.pulse["delta_t"],
                          n=n)
    budget = BoundReport("basic_sequence", "reduction bound plus per-sequence budget",
                         {"reduction": red.bound_value, "first": first[0],
                          "second": second[0], "tau": tau0},
                         red.bound_value + first[0] + second[0]).with_measurement(meas)
    rep.add_bound(budget)
    taus = sorted(set([float(t) for t in prm["taus"]] + [tau0]))
    errs = []
    for tau in taus:
        m = meas if tau == tau0 else measure(tau)[0]
        r = expansion_bound("RED_694", omega0=beams.omega0, delta_t=tau, n=1)
        rep.add_bound(r.with_measurement(m), key=f"bound:RED_694[tau={tau:g}]")
        rep.rows.append({"tau": tau, "bound": r.bound_value, "measured": m,
                         "margin": r.bound_value - m})
        errs.append(m)
    fit = slope_fit(np.log(taus), np.log(errs))
    rep.fits["log_error_vs_log_tau"] = fit
    rep.check("cubic_slope", abs(fit["slope"] - 3.0) <= prm["slope_window"])
    rep.plot = {"x": "tau", "y": ["bound", "measured"], "logy": True, "logx": True}


def ld_reference(cfg: ExperimentConfig, g: GwpTerm):
    """Single-packet Lamb-Dicke image of ``g`` after the full pulse, and its bound."""
    b = cfg.beams
    q = (2 * b["omega0"] * cfg.pulse["delta_t"]) ** 2
    ld, bd = lamb_dicke_state(g, q, 0.0, n=cfg.pulse["n"], dk=b["dk"])
    return replace(ld, amplitude=ld.amplitude * np.exp(1j * q)), bd


def _gauss(x, A, x0, s):
    return A * np.exp(-((x - x0) / s) ** 2)


def _ssiss_run(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    prm = cfg.params
    c = build_consts(cfg)
    g = initial_state(cfg)
    pot = build_potential(cfg)
    beams = build_beams(cfg)
    n, dt = cfg.pulse["n"], cfg.pulse["delta_t"]
    grid = _grid_for(cfg, pot, g)
    s0 = sample(g, grid)
    seq = build_sequence(cfg.pulse["kind"], dt, n, pot, beams)
    fin, records, first, second = run_with_budget(cfg, s0, seq, _energy_cap(g),
                                                  prm["lattice"])
    rep.traces["steps"] = records
    rep.traces["family_first"] = first
    rep.traces["family_second"] = second

    p_meas = observe(fin, "p") - g.p_c
    p_tr = c.hbar * beams.dk * (2 * beams.omega0 * dt) ** 2
    ratio = p_meas / p_tr
    rep.fits["momentum"] = {"p_measured": p_meas, "p_target": p_tr, "ratio": ratio}
    rep.check("momentum_kick", abs(ratio - 1) <= prm["momentum_tol"])

    params = _seq_params(cfg, g)
    reports = {"first": first, "second": second,
               "ldstep": expansion_bound("LDSTEP_6100", **params),
               "reduction": expansion_bound("RED_694", **params)}
    budget = total_error_budget(reports, n)
    ld, ld_bound = ld_reference(cfg, g)
    meas = distance(fin, sample(ld, grid))
    rep.add_bound(budget.with_measurement(meas), key="bound:total_budget")
    rep.fits["ld_single_step_bound"] = ld_bound

    rho = sum(np.abs(a) ** 2 for a in fin.components)
    popt, _ = optimize.curve_fit(_gauss, grid.x, rho,
                                 p0=[rho.max(), observe(fin, "x"), derive_spread(g)])
    resid = float(np.sum(np.abs(rho - _gauss(grid.x, *popt))) * grid.dx)
    rep.add_bound(BoundReport("density_fit_residual", "single-Gaussian fit tolerance",
                              {"A": popt[0], "x0": popt[1], "width": abs(popt[2])},
                              prm["fit_tol"]).with_measurement(resid))
    rep.rows = [{"repeat": r, "first": f, "second": s} for r, (f, s)
                in enumerate(zip(first, second))]
    rep.plot = {"x": "repeat", "y": ["first", "second"], "logy": True, "logx": False}


def _selective_setup(cfg: ExperimentConfig) -> dict:
    c = build_consts(cfg)
    prm = _merge(_SCENARIO_PARAMS["selective-excite"], cfg.params) \
        if cfg.scenario != "selective-excite" else cfg.params
    g = initial_state(cfg)
    eps = derive_spread(g)
    xt = prm["target_x"]
    xs = xt + prm["separation"] * eps
    tgt = replace(g, x_c=xt, amplitude=1 / math.sqrt(2))
    spc = replace(g, x_c=xs, amplitude=1 / math.sqrt(2))
    edge = 0.5 * (xt + xs)
    eps_w = cfg.beams.get("eps_window") or None
    drive = RabiWindowDrive(prm["omega1"], (None, edge), eps_w)
    psi = GaussianSuperposition((tgt, spc), ("g0", "g0"))
    return {"target": tgt, "spectator": spc, "edge": edge, "drive": drive, "psi": psi,
            "tau": math.pi / prm["omega1"], "eps_w": eps_w, "consts": c}


def _selective_excite(cfg: ExperimentConfig, rep: ExperimentReport) -> None:
    prm = cfg.params
    s = _selective_setup(cfg)
    c, tau, edge = s["consts"], s["tau"], s["edge"]
    free = FreeSpace(c)
    eps_end = derive_spread(evolve_quadratic(s["target"], "free", tau))
    grid = Grid(s["target"].x_c - 12 * eps_end, s["spectator"].x_c + 12 * eps_end,
                cfg.grid["n_points"], cfg.grid.get("dt"), c)
    fin = evolve(sample(s["psi"], grid), Hamiltonian(free, s["drive"]), tau)
    left = grid.x < edge
    dx = grid.dx
    w = lambda a, m: float(np.sum(np.abs(a[m]) ** 2) * dx)
    tgt_exc = w(fin.amp_e, left) / (w(fin.amp_e, left) + w(fin.amp_g0, left))
    spc_exc = w(fin.amp_e, ~left) / (w(fin.amp_e, ~left) + w(fin.amp_g0, ~left))
    rep.traces["populations"] = {"target_excited": tgt_exc, "spectator_excited": spc_exc,
                                 "spectator_ground": 1 - spc_exc}
    rep.check("target_flipped", tgt_exc > prm["threshold"])
    rep.check("spectator_kept", 1 - spc_exc > prm["threshold"])
    # |sin(a m)| <= a m with a = omega1 tau / 2, and the spectator's overlap
    # with the window is the mirrored basic norm at the latest (widest) time
    spc_end = evolve_quadratic(s["spectator"], "free", tau)
    mirrored = replace(spc_end, x_c=-spc_end.x_c, amplitude=1.0)
    nb = basic_norm("NBAS2", 0, mirrored, -edge, s["eps_w"] or 1e-3)
    y_l = (spc_end.x_c - edge) / derive_spread(spc_end)
    bound = (0.5 * prm["omega1"] * tau * nb) ** 2
    rep.add_bound(BoundReport("spectator_excitation", "window-overlap excitation bound",
                              {"Y_L": y_l, "nbas2": nb}, bound).with_measurement(spc_exc))
    rep.rows = [{"packet": "target", "excited": tgt_exc},
                {"packet": "spectator", "excited": spc_exc}]


_RUNNERS = {
    "oracle-validate": _oracle_validate,
    "imperfection-sweep": _imperfection_sweep,
    "trotter-scaling": _trotter_scaling,
    "pulse-basic": _pulse_basic,
    "ssiss-run": _ssiss_run,
    "selective-excite": _selective_excite,
}


def _run_single(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport(config=cfg.to_dict())
    t0 = time.perf_counter()
    try:
        _RUNNERS[cfg.scenario](cfg, rep)
    except BoundaryLeakError as exc:
        raise BoundaryLeakError(f"scenario {cfg.scenario}: {exc}") from exc
    except ValueError as exc:
        raise ValueError(f"scenario {cfg.scenario}: {exc}") from exc
    rep.timing["total_s"] = time.perf_counter() - t0
    return rep


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the configured scenario, expanding any sweep into sub-runs."""
    if not cfg.sweep:
        return _run_single(cfg)
    paths = [s[0] for s in cfg.sweep]
    combos = list(itertools.product(*[list(s[1]) for s in cfg.sweep]))
    subs = []
    for combo in combos:
        sub = replace(cfg, sweep=[])
        for p, v in zip(paths, combo):
            sub = sub.with_override(p, v)
        subs.append(sub)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            reports = list(ex.map(_run_single, subs))
    else:
        reports = [_run_single(s) for s in subs]
    rep = ExperimentReport(config=cfg.to_dict())
    for combo, sub in zip(combos, reports):
        tag = ",".join(f"{p}={v}" for p, v in zip(paths, combo))
        rep.traces[tag] = {"fits": sub.fits, "traces": sub.traces}
        for b in sub.bounds:
            rep.bounds.append(replace(b, name=f"{b.name}@{tag}"))
        for k, v in sub.verdicts.items():
            rep.verdicts[f"{k}@{tag}"] = v
        for row in sub.rows or [{}]:
            rep.rows.append({**dict(zip(paths, combo)), **row})
        rep.timing[tag] = sub.timing
    rep.plot = reports[0].plot
    return rep


# ---------------------------------------------------------------- output

def emit_report(report: ExperimentReport, out_dir, formats=("json",)) -> list:
    """Write the report as JSON, CSV and/or SVG; returns the written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    stem = report.config.get("scenario", "report")
    written = []
    for fmt in formats:
        if fmt == "json":
            p = out / f"{stem}.json"
            p.write_text(report.to_json())
        elif fmt == "csv":
            p = out / f"{stem}.csv"
            rows = report.rows or [{"scenario": stem, "n_bounds": len(report.bounds),
                                    "passed": report.passed}]
            cols = list(dict.fromkeys(k for r in rows for k in r))
            with p.open("w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=cols)
                w.writeheader()
                w.writerows(rows)
        elif fmt == "svg":
            p = out / f"{stem}.svg"
            _plot_svg(report, p)
        else:
            raise ValueError(f"unknown format {fmt!r}")
        written.append(p)
    return written


def _plot_svg(report: ExperimentReport, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    spec = report.plot
    fig, ax = plt.subplots(figsize=(6, 4))
    if spec and report.rows:
        xs = [r[spec["x"]] for r in report.rows]
        for col in spec["y"]:
            ys = [abs(r[col]) if r.get(col) is not None else np.nan for r in report.rows]
            ax.plot(xs, ys, marker="o", label=col)
        if spec.get("logy"):
            ax.set_yscale("log")
        if spec.get("logx"):
            ax.set_xscale("log")
        ax.set_xlabel(spec["x"])
        ax.legend()
    ax.set_title(report.config.get("scenario", ""))
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

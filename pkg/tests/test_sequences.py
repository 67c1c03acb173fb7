import math

from ssiss.experiments import ExperimentConfig, _energy_cap, build_beams, \
    build_potential, run_with_budget
from ssiss.gwp_core import ground_state
from ssiss.grid_oracle import Grid, distance, run_sequence, sample
from ssiss.pulses import build_sequence


def test_theoretical_and_experimental_agree_within_bounds():
    cfg = ExperimentConfig("pulse-basic")
    pot = build_potential(cfg)
    beams = build_beams(cfg)
    g = ground_state()
    s0 = sample(g, Grid.for_problem(pot, 0.0, 1.5))
    th = build_sequence("theoretical_a", 0.2, 16, pot, beams)
    ex = build_sequence("experimental_a", 0.2, 16, pot, beams)
    a, _ = run_sequence(s0, th, repeats=1, trace=False)
    b, _ = run_sequence(s0, ex, repeats=1, trace=False)
    _, _, f_th, s_th = run_with_budget(cfg, s0, th.__class__(th.steps, 1, 0.0, th.kind, beams),
                                       _energy_cap(g))
    _, _, f_ex, s_ex = run_with_budget(cfg, s0, ex.__class__(ex.steps, 1, ex.phase_per_repeat,
                                                             ex.kind, beams), _energy_cap(g))
    budget = f_th[0] + s_th[0] + f_ex[0] + s_ex[0]
    d = distance(a, b)
    assert d <= budget
    assert math.isfinite(d)

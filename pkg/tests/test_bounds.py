import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from ssiss.bounds import (BoundReport, basic_norm, energy_param_bounds, erfc_tail_bound,
                          expansion_bound, gaussian_integral_ik, imperfection_bound,
                          imperfection_from_energy, total_error_budget,
                          trajectory_summary, trotter_bound)
from ssiss.gwp_core import GwpTerm, PhysicalConstants, derive_spread, energy, evaluate, \
    evolve_quadratic, ground_state
from ssiss.potentials import smooth_step

C = PhysicalConstants()


def test_bound_report_roundtrip_and_verdict():
    r = BoundReport("x", "label", {"a": 1}, 2.0, 1.0)
    assert r.margin == 1.0 and r.verdict == "PASS"
    assert BoundReport.from_dict(r.to_dict()) == r
    assert BoundReport("x", "l", {}, 1.0, 2.0).verdict == "FAIL"
    assert BoundReport("x", "l", {}, 1.0).verdict is None
    with pytest.raises(ValueError):
        BoundReport("x", "l", {}, -1.0)


def test_ik_examples():
    assert gaussian_integral_ik(0, 0.3, 0.8) == pytest.approx(0.8 * math.sqrt(math.pi))
    x0, e = 0.4, 1.1
    assert gaussian_integral_ik(2, x0, e) == pytest.approx(
        e * math.sqrt(math.pi) * (x0 ** 2 + e ** 2 / 2), rel=1e-14)


@pytest.mark.parametrize("k", range(11))
def test_ik_quadrature(k):
    x0, e = 0.7, 1.3
    q = integrate.quad(lambda x: x ** k * math.exp(-((x - x0) / e) ** 2), -np.inf, np.inf,
                       epsabs=0, epsrel=1e-13, limit=200)[0]
    assert gaussian_integral_ik(k, x0, e) == pytest.approx(q, rel=1e-10)


def test_erfc_tail_examples():
    assert erfc_tail_bound(0.0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)
    assert erfc_tail_bound(1.0) == pytest.approx(0.1467, abs=1e-4)
    assert 0.5 * math.sqrt(math.pi) * special.erfc(1.0) == pytest.approx(0.1394, abs=1e-4)


@given(st.floats(0, 8))
def test_erfc_tail_dominance(y):
    exact = 0.5 * math.sqrt(math.pi) * special.erfc(y)
    assert erfc_tail_bound(y) >= exact * (1 - 1e-12)


def test_nbas1_examples():
    g = ground_state(x_c=0.4)
    at = basic_norm("NBAS1", 0, g, g.x_c, 0.1)
    for c in np.linspace(-1, 2, 13):
        assert basic_norm("NBAS1", 0, g, c, 0.1) <= at * (1 + 1e-12)
    far = basic_norm("NBAS1", 0, g, g.x_c + 10 * derive_spread(g), 0.1)
    assert far < 1e-15 * at


def test_nbas1_closed_form_vs_quadrature():
    g = GwpTerm(x_c=0.3, p_c=0.2, dx2=0.6, t0_param=0.4)
    for l in (0, 1, 3):
        from ssiss.potentials import smooth_delta
        q = integrate.quad(lambda x: x ** (2 * l) * smooth_delta(x - 0.9, 0.2) ** 2
                           * abs(evaluate(g, x)) ** 2, -10, 10, points=[0.9],
                           epsabs=0, epsrel=1e-12, limit=400)[0]
        assert basic_norm("NBAS1", l, g, 0.9, 0.2) == pytest.approx(math.sqrt(q), rel=1e-9)


def test_nbas2_dense_mesh():
    g = GwpTerm(x_c=0.2, p_c=0.5, dx2=0.8, t0_param=0.3)
    x = np.linspace(-20, 25, 1_000_001)
    f = x ** 4 * smooth_step(x - 1.5, 0.3) ** 2 * np.abs(evaluate(g, x)) ** 2
    mesh = math.sqrt(np.sum(f) * (x[1] - x[0]))
    assert basic_norm("NBAS2", 2, g, 1.5, 0.3) == pytest.approx(mesh, rel=1e-9)
    with pytest.raises(ValueError):
        basic_norm("NBAS3", 0, g, 0, 0.1)


def test_imperfection_examples():
    s = {"x_M": 0.0, "eps_M": 1.0, "y_M_min": 3.0, "P_max": 10.0}
    b3 = imperfection_bound(s, 3.0, C, 1.0).bound_value
    b6 = imperfection_bound(dict(s, y_M_min=6.0), 3.0, C, 1.0).bound_value
    assert b6 / b3 == pytest.approx(math.exp(-(36 - 9) / 2), rel=1e-12)
    with pytest.raises(ValueError):
        imperfection_bound(dict(s, y_M_min=0.0), 3.0, C, 1.0)
    g = ground_state()
    vals = [imperfection_bound(trajectory_summary(g, xl, 1.0), xl, C, 1.0).bound_value
            for xl in (10, 20, 40)]
    assert vals[-1] < 1e-300 or vals[-1] < vals[0] * 1e-50


def test_imperfection_decay_affine():
    g = ground_state()
    ys, ls = [], []
    for y in range(3, 9):
        summ = trajectory_summary(g, float(y), 2 * math.pi)
        ys.append(summ["y_M_min"] ** 2)
        ls.append(math.log(imperfection_bound(summ, float(y), C, 2 * math.pi).bound_value))
    from scipy.stats import linregress
    r = linregress(ys, ls)
    assert r.rvalue ** 2 > 0.999


def test_imperfection_dominates_grid_at_six():
    from ssiss.experiments import ExperimentConfig, imperfection_point
    b, _ = imperfection_point(ExperimentConfig("imperfection-sweep"), 6.0, 2 * math.pi)
    assert b.margin > 0
    assert b.measured_error > 0


def test_energy_box_dominates_trajectory():
    g = ground_state()
    e = imperfection_from_energy(0.5, 6.0, C, 1.0).bound_value
    t = imperfection_bound(trajectory_summary(g, 6.0, 1.0), 6.0, C, 1.0).bound_value
    assert e >= t


def test_trotter_examples():
    assert trotter_bound(1.0, 1.0, 0.0, C).bound_value == 0.0
    a = trotter_bound(0.3, 0.2, 0.1, C).bound_value
    assert trotter_bound(0.3, 0.2, 0.05, C).bound_value == pytest.approx(a / 8)
    assert a == pytest.approx(0.5 / 6 * 1e-3 * 0.4)
    with pytest.raises(ValueError):
        trotter_bound(-1.0, 0.0, 0.1, C)


def test_energy_param_examples():
    b = energy_param_bounds(0.5, C, x_L=6.0)
    assert b["x_c_max"] == pytest.approx(1.0) and b["p_c_max"] == pytest.approx(1.0)
    assert (b["eps2_min"], b["eps2_max"]) == pytest.approx((0.5, 2.0))
    assert b["dev_ratio_lower"] == pytest.approx(5 / math.sqrt(2))
    with pytest.raises(ValueError):
        energy_param_bounds(0.0, C)


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0.3, 1.5), st.floats(-1, 1))
def test_energy_boxes_hold_over_period(x_c, p_c, dx2, t0):
    g = GwpTerm(x_c=x_c, p_c=p_c, dx2=dx2, t0_param=t0)
    E = energy(g)
    b = energy_param_bounds(E, C, x_L=10.0)
    for t in np.linspace(0, 2 * math.pi, 64):
        h = evolve_quadratic(g, "harmonic", t)
        e2 = derive_spread(h) ** 2
        assert abs(h.x_c) < b["x_c_max"] and abs(h.p_c) < b["p_c_max"]
        assert b["eps2_min"] < e2 < b["eps2_max"]
        assert b["W_min"] < abs(h.W) < b["W_max"]
        assert b["dev_ratio_lower"] <= (10.0 - h.x_c) / math.sqrt(e2)


def test_expansion_examples():
    red = expansion_bound("RED_694", omega0=0.1, delta_t=0.25, n=1).bound_value
    assert red == pytest.approx(5 / 6 * 1e-3 + 0.5e-4 + 1e-6 / 48, rel=1e-12)
    for w in ("SEQ_639", "SEQ_654", "SEQ_672", "SEQ_689"):
        assert expansion_bound(w, omega0=0.5, delta_t=0.0, n=4, dk=0.05,
                               eps0=1.0).bound_value == 0.0
    u, e, dk = 0.05, 1.0, 0.05
    s = expansion_bound("SEQ_639", omega0=u, delta_t=1.0, n=1, dk=dk, eps0=e).bound_value
    assert s == pytest.approx((2 * u) ** 3 * dk ** 3 * math.sqrt(5 / 6144 + dk / (256 * math.sqrt(math.pi))))
    with pytest.raises(ValueError):
        expansion_bound("SEQ_639", omega0=0.5)
    with pytest.raises(ValueError):
        expansion_bound("RED_694", omega0=-1.0, delta_t=1.0, n=1)
    with pytest.raises(ValueError):
        expansion_bound("NOPE")


def test_budget_examples():
    z = BoundReport("z", "l", {}, 0.0)
    assert total_error_budget({"first": 0.0, "second": 0.0, "ldstep": z}, 5).bound_value == 0
    with pytest.raises(ValueError):
        total_error_budget({"first": 0.0, "second": 0.0}, 5)
    p = dict(omega0=0.5, delta_t=0.2, dk=0.05, eps0=1.0)
    v = [n * expansion_bound("LDSTEP_6100", n=n, **p).bound_value for n in (10, 100)]
    assert v[0] == pytest.approx(v[1], rel=1e-12)
    b = total_error_budget({"first": [1.0, 2.0], "second": 0.5, "ldstep": 0.25,
                            "reduction": 0.1}, 2)
    assert b.bound_value == pytest.approx(3.0 + 1.0 + 0.5 + 0.2)

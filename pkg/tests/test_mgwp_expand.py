import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import linregress

from ssiss.gwp_core import GwpTerm, derive_spread, ground_state, modulate
from ssiss.mgwp_expand import (bessel_expand, driven_state_exact, generalized_lamb_dicke,
                               lamb_dicke_state, taylor_order, taylor_truncation,
                               ten_term_expansion, ten_term_residual_exact)

X = np.linspace(-30, 30, 60001)
DX = X[1] - X[0]


def _dist(a, b):
    return math.sqrt(np.sum(np.abs(a - b) ** 2) * DX)


def test_bessel_examples():
    g = ground_state()
    r = bessel_expand(g, 0.0, 0.05, 5)
    assert r.n_terms == 1 and r.residual_bound == 0.0
    r = bessel_expand(g, 0.5, 0.05, 8)
    ps = sorted(t.p_c for t in r.approx.terms)
    np.testing.assert_allclose(ps, 0.05 * np.arange(-8, 9), atol=1e-14)
    phase = np.exp(0.5j * np.sin(0.05 * X))
    err8 = np.max(np.abs(r.approx.component("g0", X) / g(X) - phase))
    assert err8 <= r.residual_bound
    # the first dropped coefficient J_9(0.5) is about 1e-11, so one more
    # order is needed for 1e-12 pointwise accuracy of the phase factor
    r9 = bessel_expand(g, 0.5, 0.05, 9)
    assert np.max(np.abs(r9.approx.component("g0", X) / g(X) - phase)) < 1e-12


def test_bessel_tail_monotone():
    tails = [bessel_expand(ground_state(), 3.0, 0.1, n).residual_bound for n in range(0, 20)]
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    assert tails[-1] < 1e-12


def test_ten_term_null_and_structure():
    g = ground_state()
    r = ten_term_expansion(g, 0.0, 0.05, 0.2)
    assert r.residual_bound == 0.0
    np.testing.assert_allclose(r.approx.component("g0", X), g(X), atol=1e-15)
    r = ten_term_expansion(g, 0.1, 0.05, 0.2)
    assert r.n_terms <= 10
    assert set(r.approx.labels) == {"g0", "e"}
    with pytest.warns(RuntimeWarning):
        ten_term_expansion(g, 0.5, 0.05, 0.2)


@pytest.mark.parametrize("amp", [0.05, 0.1])
@pytest.mark.parametrize("dke", [0.02, 0.05])
@pytest.mark.parametrize("variant", ["single", "two_step"])
def test_ten_term_dominance(amp, dke, variant):
    g = GwpTerm(x_c=0.3, p_c=0.1, dx2=0.5)
    dk = dke / derive_spread(g)
    r = ten_term_expansion(g, amp, dk, 0.2, variant=variant)
    eg, ee = driven_state_exact(g, amp, dk, 0.2, X, variant)
    meas = math.sqrt(_dist(eg, r.approx.component("g0", X)) ** 2
                     + _dist(ee, r.approx.component("e", X)) ** 2)
    assert meas <= r.residual_bound
    exact = ten_term_residual_exact(g, amp, dk, variant=variant)
    assert exact == pytest.approx(meas, rel=1e-3, abs=1e-15)


def test_ld_identity_and_kick():
    g = ground_state()
    h, b = lamb_dicke_state(g, 0.0, 0.0)
    assert b == 0.0 and h == g
    q = (2 * 0.5 * 0.2) ** 2
    h, _ = lamb_dicke_state(g, q, 0.0, n=1, dk=0.05)
    assert h.p_c == pytest.approx(0.05 * q, rel=1e-14)
    with pytest.raises(ValueError):
        lamb_dicke_state(g, q, 0.0, n=0)


@pytest.mark.parametrize("dke", [0.02, 0.05, 0.1])
@pytest.mark.parametrize("variant", ["second", "first"])
def test_ld_dominance(dke, variant):
    g = ground_state()
    dk = dke / derive_spread(g)
    qs, qc = 0.3, 0.2
    h, b = lamb_dicke_state(g, qs, qc, n=1, dk=dk, variant=variant)
    exact = np.exp(1j * (qs * np.sin(dk * X) + qc * np.cos(dk * X))) * g(X)
    assert _dist(exact, h(X)) <= b


def test_ld_scaling_law():
    p_tr = 0.002
    dks = np.geomspace(0.005, 0.05, 6)
    vals = [lamb_dicke_state(ground_state(), p_tr / dk, 0.0, dk=dk)[1] for dk in dks]
    assert linregress(np.log(dks), np.log(vals)).slope == pytest.approx(2.0, abs=0.05)
    eps = np.geomspace(0.5, 1.5, 6)
    vals = [lamb_dicke_state(GwpTerm(dx2=e * e / 2), p_tr / 0.01, 0.0, dk=0.01)[1]
            for e in eps]
    assert linregress(np.log(eps), np.log(vals)).slope == pytest.approx(3.0, abs=0.05)


def test_ld_additivity():
    g = GwpTerm(x_c=0.2, p_c=0.1, dx2=0.6)
    q_s, q_c, n = 0.4, 0.3, 5
    one, _ = lamb_dicke_state(g, q_s, q_c, n=n, dk=0.05)
    h = g
    for _ in range(n):
        h, _ = lamb_dicke_state(h, q_s / n, q_c / n, n=1, dk=0.05)
    for a, b in ((one.x_c, h.x_c), (one.p_c, h.p_c), (one.dx2, h.dx2),
                 (one.t0_param, h.t0_param)):
        assert a == pytest.approx(b, abs=1e-12)


def test_generalized_ld_matches_modulate():
    g = ground_state()
    h, b = generalized_lamb_dicke(g, 0.1, 0.2, 0.03, m3=0.0, y_m=8.0)
    ref = replace(modulate(g, 0.2, -0.015j))
    exact = np.exp(1j * (0.1 + 0.2 * X + 0.015 * X ** 2)) * g(X)
    assert _dist(exact, h(X)) <= b + 1e-12
    assert abs(h.p_c - ref.p_c) < 1e-15


def test_taylor_helpers():
    c, s = taylor_truncation(0.5, 2)
    assert c == pytest.approx(0.5 ** 5 / 120) and s == pytest.approx(0.5 ** 6 / 720)
    n = taylor_order(0.5, 1.0)
    assert 2 * n + 1 > 2 * math.e * 0.5 + 10
    assert 2 * (n - 1) + 1 <= 2 * math.e * 0.5 + 10

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ssiss.gwp_core import GaussianSuperposition, ground_state
from ssiss.grid_oracle import Grid, sample
from ssiss.mgwp_expand import driven_state_exact
from ssiss.potentials import IdealHarmonic
from ssiss.pulses import (GAMMAS, PhamdownBeams, build_sequence, driven_rotation_exact,
                          interaction_hi, q_components, target_phase,
                          target_propagator)

B = PhamdownBeams.from_dk(0.5, 0.05, 0.2)
GRID = Grid(-12, 12, 1024)


def test_beams_validation():
    assert B.dk == pytest.approx(0.05) and B.ksum == pytest.approx(0.2)
    with pytest.raises(ValueError):
        PhamdownBeams(0.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        PhamdownBeams(1.0, 0.1, 0.1, alpha=0.3)
    with pytest.raises(ValueError):
        interaction_hi(B, 0.3, 0.0)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=50), st.sampled_from(GAMMAS))
def test_q_bounded(x, gamma):
    qx, qy = q_components(B, gamma, np.array(x))
    assert np.all(np.abs(qx) <= 4 * 0.5 + 1e-15)
    assert np.all(np.abs(qy) <= 4 * 0.5 + 1e-15)


def test_q_at_origin():
    qx, qy = q_components(B, 0.0, 0.0)
    assert qx == pytest.approx(2 * math.sqrt(2) * 0.5, abs=1e-15)
    assert qy == pytest.approx(0.0, abs=1e-15)


def test_hi_hermitian_and_antiphase():
    x = np.random.default_rng(1).uniform(-30, 30, 100)
    h0 = interaction_hi(B, 0.0, x)
    hpi = interaction_hi(B, math.pi, x)
    np.testing.assert_allclose(h0, -hpi, atol=1e-14)
    np.testing.assert_allclose(h0, np.conj(np.swapaxes(h0, -1, -2)), atol=1e-15)


def _state(label="g0"):
    return sample(GaussianSuperposition((ground_state(),), (label,)), GRID)


def test_rotation_identity_and_g1():
    s = _state()
    out = driven_rotation_exact(s, B, 0.0, 0.0)
    np.testing.assert_array_equal(out.amp_g0, s.amp_g0)
    g1 = _state("g1")
    out = driven_rotation_exact(g1, B, 1.5 * math.pi, 0.3)
    np.testing.assert_array_equal(out.amp_g1, g1.amp_g1)
    assert np.all(out.amp_e == 0) and np.all(out.amp_g0 == 0)


def test_rotation_closed_form_three_half_pi():
    tau = 0.07
    s = _state()
    out = driven_rotation_exact(s, B, 1.5 * math.pi, tau)
    g, e = driven_state_exact(ground_state(), 2 * B.omega0 * tau, B.dk, B.ksum, GRID.x)
    np.testing.assert_allclose(out.amp_g0, g, atol=1e-12)
    np.testing.assert_allclose(out.amp_e, e, atol=1e-12)


@given(st.sampled_from(GAMMAS), st.floats(0, 2))
def test_rotation_unitary_and_antiphase(gamma, tau):
    s = _state()
    out = driven_rotation_exact(s, B, gamma, tau)
    assert out.norm2() == pytest.approx(s.norm2(), abs=1e-12)
    back = driven_rotation_exact(out, B, (gamma + math.pi) % (2 * math.pi), tau)
    np.testing.assert_allclose(back.amp_g0, s.amp_g0, atol=1e-12)
    np.testing.assert_allclose(back.amp_e, s.amp_e, atol=1e-12)


def test_window_selectivity():
    bw = PhamdownBeams.from_dk(0.5, 0.05, 0.2, window=(None, 2.0), eps_window=0.05)
    s = _state()
    out = driven_rotation_exact(s, bw, 0.0, 1.0)
    far = GRID.x > 2.0 + 5 * 0.05
    assert np.max(np.abs(out.amp_g0[far] - s.amp_g0[far])) < 1e-10
    assert np.max(np.abs(out.amp_e[far])) < 1e-10


def test_target_propagator():
    s = _state()
    same = target_propagator(s, B, 0.0)
    np.testing.assert_array_equal(same.amp_g0, s.amp_g0)
    g1 = _state("g1")
    np.testing.assert_array_equal(target_propagator(g1, B, 0.3).amp_g1, g1.amp_g1)
    dt = 0.2
    out = target_propagator(s, B, dt)
    np.testing.assert_allclose(np.abs(out.amp_g0), np.abs(s.amp_g0), atol=1e-15)
    # up to the constant (2 Omega0 dt)^2 the phase is (2 Omega0 dt)^2 sin(dk x)
    q = (2 * B.omega0 * dt) ** 2
    ref = s.amp_g0 * np.exp(1j * q) * np.exp(1j * q * np.sin(B.dk * GRID.x))
    np.testing.assert_allclose(out.amp_g0, ref, atol=1e-12)
    assert np.all(target_phase(B, dt, GRID.x) >= 0)


def test_build_sequence_structure():
    pot = IdealHarmonic()
    seq = build_sequence("experimental_a", 0.2, 16, pot, B)
    assert len(seq.steps) == 9 and seq.repeats == 16
    assert [s.gamma for s in seq.steps if s.kind == "driven"] == \
        pytest.approx([1.5 * math.pi, math.pi, 0.5 * math.pi, 0.0])
    tau = 0.2 / 4
    first = seq.steps[0].tau
    assert first + tau / 2 == pytest.approx(2 * math.pi, abs=1e-14)
    assert seq.steps[2].tau + tau == pytest.approx(2 * math.pi, abs=1e-14)
    assert seq.phase_per_repeat == pytest.approx(5 * math.pi)
    th = build_sequence("theoretical_a", 0.2, 16, pot, B)
    assert all(s.inverse for s in th.steps if s.kind == "free")
    assert th.steps[0].signed_tau == pytest.approx(-tau / 2)
    b = build_sequence("improved_b", 0.2, 16, pot, B)
    assert sum(s.kind == "driven" for s in b.steps) == 8
    json.dumps(seq.to_dict())
    with pytest.raises(ValueError):
        build_sequence("experimental_a", 0.2, 0, pot, B)
    with pytest.raises(ValueError):
        build_sequence("experimental_a", 0.0, 1, pot, B)
    with pytest.raises(ValueError):
        build_sequence("bogus", 0.2, 1, pot, B)


def test_null_pulse_is_identity_up_to_phase():
    from ssiss.grid_oracle import inner, run_sequence
    pot = IdealHarmonic()
    seq = build_sequence("experimental_a", 1e-12, 1, pot, B)
    assert all(s.tau < 1e-11 for s in seq.steps if s.kind == "driven")
    s = _state()
    out, _ = run_sequence(s, seq, trace=False)
    assert abs(inner(s, out)) ** 2 >= 1 - 1e-8

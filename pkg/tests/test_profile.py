import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zndstab import thermo
from zndstab.profile import (ProfileError, _flux_constants, ProfileRep, ShockSetup, cj_speed,
                             rankine_hugoniot_vn, upstream_sound_speed)
from zndstab.thermo import GasModel


def _inert_mach(M, gamma=1.4):
    g = GasModel(gamma=gamma, q_release=0.0)
    c0 = upstream_sound_speed(g)
    return g, ShockSetup(det_speed=M * c0)


def test_inert_mach3_rankine_hugoniot():
    g, setup = _inert_mach(3.0)
    v, u, S, p = rankine_hugoniot_vn(g, setup)
    gam, M = 1.4, 3.0
    assert v == pytest.approx(((gam - 1) * M**2 + 2) / ((gam + 1) * M**2), rel=1e-10)
    assert p == pytest.approx((2 * gam * M**2 - (gam - 1)) / (gam + 1), rel=1e-10)


def test_strong_shock_limit():
    g, setup = _inert_mach(1e4)
    v = rankine_hugoniot_vn(g, setup)[0]
    assert v == pytest.approx(0.4 / 2.4, rel=1e-6)


def test_jump_conditions(rep):
    g = rep.g
    v, u, S, p = rep.vn
    m = rep.m
    assert u / v == pytest.approx(m, rel=1e-14)
    assert p + m * m * v == pytest.approx(rep.mom, rel=1e-12)
    e = thermo.internal_energy(g, v, S, 1.0)
    assert e + p * v + 0.5 * u * u == pytest.approx(rep.H, rel=1e-12)
    assert u * u < g.gamma * p * v


def test_cj_speed():
    assert cj_speed(GasModel(q_release=0.0)) == pytest.approx(upstream_sound_speed(GasModel()))
    qs = [0.5, 1.0, 2.0, 4.0]
    D = [cj_speed(GasModel(q_release=q)) for q in qs]
    assert np.all(np.diff(D) > 0)
    # burned state at D_CJ is the double root and is sonic
    g = GasModel(q_release=1.0)
    m, mom, H, a, b = _flux_constants(g, 1.0, 1.0, cj_speed(g))
    v = -b / (2 * a)
    p = mom - m * m * v
    assert m * v / np.sqrt(g.gamma * p * v) == pytest.approx(1.0, abs=1e-6)


def test_bad_speed():
    with pytest.raises(ProfileError):
        ProfileRep(GasModel(), ShockSetup(overdrive=0.9))


def test_state_boundaries(rep):
    v, u, S = rep.state_of_lambda(1.0)
    assert (v, u, S) == pytest.approx(rep.vn[:3], rel=1e-12)
    v0, u0, S0 = rep.state_of_lambda(0.0)
    assert v0 == pytest.approx(float(rep.end.v))
    k = rep.local(np.linspace(0.02, 0.98, 49)).kappa
    k0, k1 = float(rep.end.kappa), float(rep.plus.kappa)
    assert np.all((k - min(k0, k1)) * (max(k0, k1) - k) > 0)


def test_flux_conservation(rep):
    lam = np.linspace(0, 1, 1001)
    for r in rep.flux_residual(lam):
        assert np.max(r) < 1e-10
    assert np.max(rep.local(lam).kappa) < 1 - 1e-6


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 20.0))
def test_x_lambda_roundtrip(x):
    rep = _REP
    lam = float(rep.lambda_of_x(x))
    assert rep.x_of_lambda(lam) == pytest.approx(x, rel=1e-8, abs=1e-8)


def test_x_endpoints(rep):
    assert rep.lambda_of_x(0.0) == pytest.approx(1.0)
    assert rep.x_of_lambda(0.0) == np.inf
    lam = rep.lambda_of_x(np.linspace(0, 30, 301))
    assert np.all(np.diff(lam) < 0)


def test_decay_rate(rep):
    g = rep.g
    st_ = rep.end
    closed = g.k_rate * np.exp(-g.E_act / float(st_.T)) / float(st_.u)
    assert rep.decay_rate() == pytest.approx(closed, rel=1e-12)
    assert rep.fitted_decay_rate() == pytest.approx(closed, rel=0.01)
    x = np.linspace(5, 20, 16) / rep.mu
    ratio = rep.lambda_of_x(x) / np.exp(-rep.mu * x)
    assert np.ptp(ratio[-5:]) / ratio[-1] < 1e-3


def test_decay_rate_no_activation():
    rep = ProfileRep(GasModel(E_act=0.0))
    assert rep.mu == pytest.approx(rep.g.k_rate / float(rep.end.u), rel=1e-12)


def test_exponential_approach(rep):
    x = np.linspace(5, 20, 31) / rep.mu
    d = np.abs(rep.at_x(x).v - rep.end.v)
    r = d * np.exp(rep.mu * x)
    assert np.max(r) / np.min(r) < 2.0


def test_reference_is_type_d(rep):
    assert rep.type_classify() == "TypeD"


def test_inert_profile_degenerate():
    g, setup = _inert_mach(3.0)
    rep = ProfileRep(g, setup)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert rep.type_classify() == "Mixed"


def test_dump_columns(rep):
    out = rep.dump([0.0, 1.0])
    assert out.shape == (2, 9)
    assert out[0, 1] == pytest.approx(1.0)


_REP = ProfileRep(GasModel())

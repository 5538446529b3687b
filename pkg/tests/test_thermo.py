import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zndstab import thermo
from zndstab.thermo import GasModel, ThermoDomainError, ThermoState

G = GasModel()

vs = st.floats(0.2, 3.0)
Ss = st.floats(-1.0, 2.0)
lams = st.floats(0.0, 1.0)


def _fd(f, x, rel=1e-6):
    dx = rel * max(abs(x), 1.0)
    return (f(x + dx) - f(x - dx)) / (2 * dx)


def test_temperature_entropy_inverse():
    v = np.linspace(0.3, 2.0, 11)
    T = thermo.temperature(G, v, 0.4)
    assert np.allclose(thermo.entropy(G, v, T), 0.4, atol=1e-13)


def test_reference_state():
    assert thermo.temperature(G, G.v_ref, G.S_ref) == pytest.approx(G.T_ref)


def test_domain_errors():
    with pytest.raises(ThermoDomainError):
        ThermoState(v=-1.0, S=0.0, lam=0.5)
    with pytest.raises(ThermoDomainError):
        thermo.rate(G, 1.0, 0.0, 1.5)
    with pytest.raises(ThermoDomainError):
        GasModel(gamma=1.0)


def test_gas_roundtrip():
    g = GasModel(gamma=1.4, q_release=0.0)
    assert GasModel.from_dict(g.to_dict()) == g


def test_rate_vanishes_without_reactant():
    r, r_v, r_S, r_lam = thermo.rate(G, 0.7, 0.3, 0.0)
    assert r == 0 and r_v == 0 and r_S == 0
    assert r_lam < 0


def test_entropy_source_zero_cases():
    assert thermo.entropy_source(G, 0.7, 0.3, 0.0)[0] == 0
    g0 = GasModel(q_release=0.0)
    assert np.all(thermo.entropy_source(g0, 0.7, 0.3, np.linspace(0, 1, 5))[0] == 0)


@settings(max_examples=60, deadline=None)
@given(vs, Ss, lams)
def test_pressure_partials(v, S, lam):
    p, p_v, p_S, p_lam = thermo.pressure(G, v, S, lam)
    assert p_v == pytest.approx(_fd(lambda t: thermo.pressure(G, t, S)[0], v), rel=1e-6)
    assert p_S == pytest.approx(_fd(lambda t: thermo.pressure(G, v, t)[0], S), rel=1e-6)
    assert p_lam == 0
    assert thermo.sound_speed_sq(G, v, S) == pytest.approx(-v * v * p_v, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(vs, Ss, st.floats(0.05, 0.95))
def test_rate_and_source_partials(v, S, lam):
    r, r_v, r_S, r_lam = thermo.rate(G, v, S, lam)
    assert r <= 0
    assert r_v == pytest.approx(_fd(lambda t: thermo.rate(G, t, S, lam)[0], v), rel=1e-6, abs=1e-12)
    assert r_S == pytest.approx(_fd(lambda t: thermo.rate(G, v, t, lam)[0], S), rel=1e-6, abs=1e-12)
    assert r_lam == pytest.approx(_fd(lambda t: thermo.rate(G, v, S, t)[0], lam), rel=1e-6)
    phi, phi_v, phi_S, phi_lam = thermo.entropy_source(G, v, S, lam)
    assert phi >= 0
    assert phi_v == pytest.approx(_fd(lambda t: thermo.entropy_source(G, t, S, lam)[0], v), rel=1e-6, abs=1e-12)
    assert phi_S == pytest.approx(_fd(lambda t: thermo.entropy_source(G, v, t, lam)[0], S), rel=1e-6, abs=1e-12)
    assert phi_lam == pytest.approx(_fd(lambda t: thermo.entropy_source(G, v, S, t)[0], lam), rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(vs, Ss)
def test_gibbs_relation(v, S):
    # de = T dS - p dv at fixed lambda
    e = lambda vv, SS: thermo.internal_energy(G, vv, SS)
    T = thermo.temperature(G, v, S)
    p = thermo.pressure(G, v, S)[0]
    assert _fd(lambda t: e(v, t), S) == pytest.approx(T, rel=1e-6)
    assert _fd(lambda t: e(t, S), v) == pytest.approx(-p, rel=1e-6)

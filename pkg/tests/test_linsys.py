from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zndstab import linsys
from zndstab.linsys import (classify_class, coeffs, eigenvalues, matrices_at,
                            phi0_closed_form, s_branch, spectral_data)

zetas = st.complex_numbers(min_magnitude=0.0, max_magnitude=20.0,
                           allow_nan=False, allow_infinity=False).filter(lambda z: z.real > 1e-3)
xs = st.floats(0.0, 40.0)


def _random(rep, rng, n):
    x = rng.uniform(0, rep.x_max_default, n)
    z = rng.uniform(1e-3, 5, n) + 1j * rng.uniform(-5, 5, n)
    return coeffs(rep, x), z


def test_b_row3_zero_and_det(rep, rng):
    c, z = _random(rep, rng, 200)
    sm = matrices_at(c, z)
    assert np.all(sm.B[:, 2, :] == 0)
    assert np.all(np.abs(np.linalg.det(sm.A_x)) > 0)


def test_phi0_closed_form_matches_product(rep, rng):
    c, z = _random(rep, rng, 300)
    P = matrices_at(c, z).Phi0
    F = phi0_closed_form(c, z)
    assert np.max(np.abs(P - F)) / np.max(np.abs(P)) < 1e-12
    m = c.m
    assert np.allclose(F[:, 0, 2], -1j * m / (1 - c.eta), rtol=1e-14)
    for k in (2, 3, 4):
        assert np.allclose(F[:, k, k], z / c.u, rtol=1e-14)


def test_phi1_endstate_pattern(rep):
    c = coeffs(rep, np.inf)
    F1 = linsys.phi1(c)[0]
    # only the lambda row survives at x = inf
    mask = np.ones((5, 5), bool)
    mask[4, :] = False
    assert np.max(np.abs(F1[mask])) < 1e-12
    assert F1[4, 4] == pytest.approx(-c.r[3][0] / c.u[0])


def test_s_branch_cases():
    assert s_branch(2.0, 1.0) == pytest.approx(np.sqrt(5), abs=1e-14)
    assert s_branch(2j, 1.0) == pytest.approx(1j * np.sqrt(3), abs=1e-14)
    assert s_branch(-2j, 1.0) == pytest.approx(-1j * np.sqrt(3), abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(zetas)
def test_s_branch_continuity(z):
    # no cut inside Re zeta > 0: small steps give small increments
    path = z + np.linspace(0, 1e-3, 21) * np.exp(1j * 0.7)
    path = path[path.real > 0]
    s = s_branch(path, 1.3)
    assert np.max(np.abs(np.diff(s))) < 1e-2


def test_spectral_example():
    c = SimpleNamespace(u=1.0, eta=0.75, kappa=0.5, c0sq_eta=3.0)
    mu1, mu2, mu3 = eigenvalues(c, 1.0)
    assert mu1 == pytest.approx(-5 / 3)
    assert mu2 == pytest.approx(1.0)
    assert mu3 == 1.0


@settings(max_examples=60, deadline=None)
@given(xs, zetas)
def test_eigen_identity(x, z):
    c = coeffs(_REP, x)
    sd = spectral_data(c, z)
    F = phi0_closed_form(c, z)[0]
    T = sd.T[0]
    lhs = F @ T
    rhs = T * sd.mu[0][None, :]
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))
    assert np.allclose(T[:, 0], sd.P0[0] + sd.s[0] * sd.Q0[0], rtol=1e-12)
    assert np.allclose(T[:, 1], sd.P0[0] - sd.s[0] * sd.Q0[0], rtol=1e-12)
    assert sd.mu[0, 2] == sd.mu[0, 3] == sd.mu[0, 4]
    re = sd.mu[0].real
    assert re[0] < 0 and np.all(re[1:] >= 0)


def test_singular_locus(rep):
    zt = 0.88005j
    xt = linsys.turning_point(rep, zt)
    c = coeffs(rep, xt)
    sd = spectral_data(c, zt)
    assert sd.singular[0]
    T = sd.T[0]
    sv = np.linalg.svd(T[:, :2], compute_uv=False)
    assert sv[1] < 1e-6 * sv[0]
    for x in (0.2, 3.0, 15.0):
        c = coeffs(rep, x)
        sd = spectral_data(c, 1.0 + 0.5j)
        assert not sd.singular[0]
        assert np.linalg.svd(sd.T[0], compute_uv=False)[-1] > 1e-8


def test_classify(rep):
    zi, z0 = linsys.zeta_inf(rep), linsys.zeta_0(rep)
    ci = classify_class(rep, zi)
    assert ci.cls == "III" and ci.plus and ci.endpoint == "zeta_inf"
    assert classify_class(rep, z0).endpoint == "zeta_0"
    assert classify_class(rep, 1 + 1j).cls == "I"
    assert classify_class(rep, float(rep.plus.u)).cls == "II"
    assert classify_class(rep, -0.9j).cls == "III"
    assert not classify_class(rep, -0.9j).plus


def test_classify_partition(rep):
    rng = linsys._ranges(rep)
    seen = set()
    for re in np.linspace(0, 2, 9):
        for im in np.linspace(-2, 2, 17):
            seen.add(classify_class(rep, complex(re, im), ranges=rng).cls)
    assert seen <= {"I", "II", "III"}


def test_turning_points(rep):
    zi, z0 = linsys.zeta_inf(rep), linsys.zeta_0(rep)
    assert linsys.turning_point(rep, z0) == 0.0
    assert linsys.turning_point(rep, zi) == np.inf
    zt = 0.88005j
    xt = linsys.turning_point(rep, zt)
    c = coeffs(rep, xt)
    assert abs(s_branch(zt, c.c0sq_eta)[0]) < 1e-6
    assert abs(zt**2 + c.c0sq_eta[0]) < 1e-10
    assert linsys.x_zeta_derivative(rep, zt).imag > 0
    with pytest.raises(ValueError):
        linsys.turning_point(rep, 1 + 1j)


def test_wkb_start_value(rep):
    z = 1 + 0.5j
    T = spectral_data(coeffs(rep, 0.0), z).T[0]
    assert np.allclose(linsys.wkb_leading(rep, 1, 0.0, z, 0.1), T[:, 0])
    with pytest.raises(ValueError):
        linsys.wkb_leading(rep, 1, 5.0, 0.88005j, 0.1)


def test_wkb_decay(rep):
    z = 1 + 0.5j
    n = [np.linalg.norm(linsys.wkb_leading(rep, 1, x, z, 0.1)) for x in (0.5, 1.0, 2.0)]
    assert n[0] > n[1] > n[2]


def _wkb_defect(rep, x, z, h, dx=None):
    hi, ki = linsys.wkb_exponents(rep, 1, x, z)
    c = coeffs(rep, x)
    sd = spectral_data(c, z)
    T = sd.T[0]
    Ti = T[:, 0]
    dTi = linsys.t_derivative(c, z, sd.s)[0][:, 0]
    l = np.linalg.inv(T)[0]
    F1 = linsys.phi1(c)[0]
    kp = l @ (F1 @ Ti - dTi) / (l @ Ti)
    # theta = exp(h1/h + k1) T1 with the exponential factored out
    dth = (sd.mu[0, 0] / h + kp) * Ti + dTi
    G = linsys.generator(c, z, h)[0]
    return np.linalg.norm(h * dth - G @ Ti) / np.linalg.norm(Ti)


def test_wkb_defect_order(rep):
    z, x = 1 + 0.5j, 1.5
    hs = np.array([1e-1, 1e-2, 1e-3])
    d = np.array([_wkb_defect(rep, x, z, h) for h in hs])
    order = np.polyfit(np.log(hs), np.log(d), 1)[0]
    assert order >= 0.8


def test_wkb_defect_matches_finite_difference(rep):
    z, x, h, dx = 1 + 0.5j, 1.5, 0.1, 1e-4
    th = [linsys.wkb_leading(rep, 1, x + k * dx, z, h) for k in (-1, 0, 1)]
    dth = (th[2] - th[0]) / (2 * dx)
    G = linsys.generator(coeffs(rep, x), z, h)[0]
    fd = np.linalg.norm(h * dth - G @ th[1]) / np.linalg.norm(th[1])
    assert fd == pytest.approx(_wkb_defect(rep, x, z, h), rel=1e-3)


from zndstab.profile import ProfileRep  # noqa: E402
from zndstab.thermo import GasModel  # noqa: E402

_REP = ProfileRep(GasModel())

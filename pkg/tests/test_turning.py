import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zndstab import blockform as BF
from zndstab import linsys as L
from zndstab import specfun as sf
from zndstab import turning as T
from zndstab.evans import EvansSolver

Z_INT = 0.88005j


@pytest.fixture(scope="module")
def ld(rep):
    return T.langer_build(rep, Z_INT)


@pytest.fixture(scope="module")
def zl(rep):
    return T.langer_at_zero(rep)


@pytest.fixture(scope="module")
def a_coef(rep):
    return T.fit_e_coefficient(rep)


def _angle(a, b):
    c = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.acos(min(1.0, c))


def test_langer_signs(ld):
    assert abs(ld.rho(ld.x_tp)) < 1e-10
    assert ld.rho(ld.x_tp - ld.delta) > 0
    assert ld.rho(ld.x_tp + ld.delta) < 0
    assert np.all(ld.rho_x_grid < 0)
    assert np.isrealobj(ld.rho_grid)


def test_langer_identity(ld):
    assert ld.identity_residual < 1e-8
    x = np.linspace(*ld.interval, 57)
    C = ld.C_fun(x)
    assert np.max(np.abs(ld.rho_x(x) ** 2 * ld.rho(x) - C)) < 1e-8 * np.max(np.abs(C))


def test_langer_interval_variation(ld):
    d = np.abs(ld.d_fun(ld.x))
    assert d.max() <= 1.5 * d.min()


def test_rho_zeta_positive(rep, ld):
    assert (-1j * T.rho_zeta_fd(rep, Z_INT, ld.x_tp)).real > 0


def test_langer_domain(rep):
    with pytest.raises(T.TurningDomainError):
        T.langer_build(rep, 0.1 + 0.88j)
    with pytest.raises((T.TurningDomainError, ValueError)):
        T.langer_build(rep, L.zeta_inf(rep))


def test_airy_defect_order(rep, ld):
    hs = np.array([1e-2, 1e-3])
    d = np.array([T.airy_defect(ld, rep, Z_INT, h) for h in hs])
    for k in range(2):
        order = np.log(d[0, k] / d[1, k]) / np.log(hs[0] / hs[1])
        assert order >= 0.8


def test_theta_minus_tracks_t1(rep, ld):
    x = np.array([ld.x[0]])
    T1 = L.spectral_data(L.coeffs(rep, x), Z_INT).T[0][:, 0]
    ang = []
    for h in (1e-2, 1e-3, 1e-4):
        tm, _ = T.airy_pair(ld, rep, x, Z_INT, h, scaled=True)
        ang.append(_angle(tm[0], T1))
    assert ang[0] > ang[1] > ang[2]
    assert ang[2] < 0.05


def test_airy_gram(rep, ld):
    # independent on the oscillatory side; where rho > 0 both rotated Airy
    # functions are dominant and differ by the factor exp(-(4/3) rho^{3/2}/h)
    h = 0.03
    x = np.linspace(*ld.interval, 21)
    g = T.airy_gram(ld, rep, Z_INT, h, x)
    rho = ld.rho(x)
    assert np.all(g[rho <= 0] > 0.04)
    pos = rho > 0
    assert np.all(np.log(g[pos]) >= -4 / 3 * rho[pos] ** 1.5 / h - 3)


def test_langer_consistency(rep, ld):
    # evans decaying direction at the left end matches theta_-
    xL = ld.x[0]
    S = EvansSolver(rep)
    ang = []
    for h in (0.02, 0.01):
        _, _, samp, _ = S.decaying(Z_INT, h, x_out=(xL,))
        tm, _ = T.airy_pair(ld, rep, np.array([xL]), Z_INT, h, scaled=True)
        ang.append(_angle(samp[xL][0][0], tm[0]))
    assert math.log(ang[0] / ang[1]) / math.log(2) >= 0.8


def test_zero_langer(rep, zl):
    assert abs(zl.rho0(zl.zeta0)) < 1e-6
    for h in (1e-1, 1e-3, 1e-6):
        assert T.regime_at_zero(zl, zl.zeta0, h) == "A"
    z = zl.zeta0 - 0.02j
    assert T.regime_at_zero(zl, z, 0.5) == "A"
    assert T.regime_at_zero(zl, z, 1e-6) == "B"
    seq = [T.regime_at_zero(zl, z, h) for h in np.logspace(0, -6, 61)]
    changes = sum(a != b for a, b in zip(seq, seq[1:]))
    assert changes == 1


def test_zero_langer_matches_direct(rep, zl):
    z = zl.zeta0 - 0.03j
    direct = T.rho_direct(rep, z, L.turning_point(rep, z), np.array([0.0]))[0]
    assert abs(zl.rho0(z) - direct) < 1e-8


def test_regime_at_infinity(rep, a_coef):
    zi = L.zeta_inf(rep)
    rd = T.regime_classify_infinity(rep, zi, 0.1, a_coef=a_coef)
    assert rd.alpha == 0 and rd.beta_t == 0 and rd.regime == "III"
    rd = T.regime_classify_infinity(rep, zi + 0.02j, 1e-3, a_coef=a_coef)
    assert cmath.phase(rd.beta) == pytest.approx(math.pi / 2)
    assert abs(rd.beta_t) >= rd.K and rd.regime == "II"
    rd = T.regime_classify_infinity(rep, zi + 0.02, 1e-3, a_coef=a_coef)
    assert cmath.phase(rd.alpha) == pytest.approx(math.pi / 4)
    assert rd.regime == "I"
    with pytest.raises(T.TurningDomainError):
        T.regime_classify_infinity(rep, zi + 1.0, 0.1, a_coef=a_coef)
    assert rd.to_dict()["regime"] == "I"


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 0.2), st.floats(-0.2, 0.2), st.sampled_from([0.1, 0.01, 0.001]))
def test_regime_partition(dr, di, h):
    zi = L.zeta_inf(_REP)
    z = zi + complex(dr, di)
    if abs(z - zi) > 0.25 * abs(zi):
        return
    rd = T.regime_classify_infinity(_REP, z, h, a_coef=_A)
    assert rd.alpha**2 == pytest.approx(1j * (z - zi), abs=1e-14)
    big = abs(rd.beta_t) > rd.K
    steep = cmath.phase(rd.beta_t) >= math.pi / 2 - rd.delta
    expected = "III" if not big else ("II" if steep else "I")
    assert rd.regime == expected


def test_t_map(rep, a_coef):
    rd = T.regime_classify_infinity(rep, L.zeta_inf(rep), 0.1, a_coef=a_coef)
    t = rd.t_map(np.linspace(0, 30, 31))
    assert np.all(t.real > 0) and np.all(np.abs(t.imag) < 1e-14 * t.real)
    assert np.all(np.diff(t.real) < 0)


def test_e_fit(rep, a_coef):
    x = np.array([12.0, 20.0, 28.0])
    ratio = T.e_of_x(rep, x) * np.exp(rep.mu * x)
    assert np.allclose(ratio, a_coef, rtol=1e-3)


def test_xi_maps():
    s0 = T.sigma0_regime1()
    assert abs(T.xi_regime1(s0)) < 1e-12
    for sig in (0.3 + 0.2j, 1.5 - 0.4j, 4.0 + 1.0j):
        d = 2e-4
        f = [T.xi_regime1(sig + k * d) for k in (-2, -1, 1, 2)]
        deriv = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * d)
        assert abs(deriv - np.sqrt(1 + sig**-2)) < 1e-10
    # regime II map: (2/3) xi^{3/2} = Xi, continuous through sigma = 1
    sig = np.array([0.5 + 0.1j, 1.3 + 0.05j, 0.8 - 0.2j])
    xi, sxi = T.xi_regime2(sig)
    assert np.allclose(sxi**2, xi)
    assert np.allclose(2 / 3 * xi * sxi, T.Xi_regime2(sig))
    path = 1 + 0.05j * np.exp(1j * np.linspace(-np.pi, 0, 41))
    xi_p = T.xi_regime2(path)[0]
    assert np.max(np.abs(np.diff(xi_p))) < 0.05


def test_regime3_is_bessel(rep, a_coef):
    zi = L.zeta_inf(rep)
    h = 0.1
    rd = T.regime_classify_infinity(rep, zi, h, a_coef=a_coef)
    x = np.linspace(5, 10, 6)
    w, _ = T.leading_infinity_solution(rd, x)
    T0 = (2 / rd.mu) * math.sqrt(rd.a_coef * rd.D_inf.real)
    xm = rd.mu * x / 2 - math.log(T0)
    wI = sf.model_oracle(0.0, h, xm, with_K=False)[0]
    assert np.allclose(w, wI, rtol=1e-12)


def test_regime1_decays(rep, a_coef):
    zi = L.zeta_inf(rep)
    rd = T.regime_classify_infinity(rep, zi + 0.02, 1e-3, a_coef=a_coef)
    assert rd.regime == "I"
    x = np.linspace(5, 10, 50) / rep.mu
    w, _ = T.leading_infinity_solution(rd, x)
    a = np.abs(w)
    nz = a > 0
    assert nz.sum() > 5
    assert np.all(np.diff(a[nz]) < 0) and np.all(np.diff(a) <= 0)


@pytest.mark.parametrize("dz,h", [(0.0, 0.1), (0.0, 0.01), (0.02j, 0.01), (0.02j, 0.001),
                                  (0.02, 0.01), (0.02, 0.001)])
def test_scalar_defect_bound(rep, a_coef, dz, h):
    # leading terms drop the O(exp(-mu M)) coefficient perturbation
    zi = L.zeta_inf(rep)
    rd = T.regime_classify_infinity(rep, zi + dz, h, a_coef=a_coef)
    M = 5 / rep.mu
    x = np.linspace(M, M + 5 / rep.mu, 2001)
    bt = abs(rd.beta_t)
    bound = max(h, 1 / bt if bt > 0 else 0) + 2 * math.exp(-rep.mu * M)
    assert T.scalar_defect(rd, rep, x) <= bound


def test_reconstructed_defect(rep, block_ref, a_coef):
    bd, sr = block_ref
    rd = T.regime_classify_infinity(rep, bd.zeta, bd.h, a_coef=a_coef)
    w, hw = T.leading_infinity_solution(rd, bd.x)
    th = BF.reconstruct_theta(bd, sr, w, hw)
    M = 5 / rep.mu
    m = (bd.x >= M) & (bd.x <= M + 5 / rep.mu)
    m[:3] = False
    assert BF.theta_defect(bd, sr, th, m) <= max(bd.h, 1 / abs(rd.beta_t))


from zndstab.profile import ProfileRep  # noqa: E402
from zndstab.thermo import GasModel  # noqa: E402

_REP = ProfileRep(GasModel())
_A = T.fit_e_coefficient(_REP)


def test_gauss_legendre_matches_quad(rep, ld):
    from scipy import integrate
    xt = ld.x_tp
    for x in (xt - 0.3, xt + 0.25):
        ref = integrate.quad(lambda t: T._C_x_at(rep, xt + t * (x - xt), Z_INT).real, 0, 1,
                             epsabs=1e-14, epsrel=1e-13)[0]
        assert T.d_fun(rep, Z_INT, xt, x).real == pytest.approx(ref, rel=1e-11)
    # rho from the defining integral (2/3) rho^{3/2} = int_x^{x_tp} sqrt(-C) ds, left side
    x = xt - 0.3
    I = integrate.quad(lambda s: math.sqrt(T.C_of(L.coeffs(rep, s), Z_INT).real[0]), x, xt,
                       epsabs=1e-14, epsrel=1e-12)[0]
    rho = T.rho_direct(rep, Z_INT, xt, x)
    assert rho > 0
    assert (2 / 3) * rho**1.5 == pytest.approx(I, rel=1e-8)

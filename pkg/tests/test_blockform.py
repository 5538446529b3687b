import numpy as np
import pytest
from scipy import integrate
from scipy.interpolate import make_interp_spline

from zndstab import blockform as BF
from zndstab import linsys as L


def _slope(x, y, lo, hi):
    sel = (x > lo) & (x < hi)
    return -np.polyfit(x[sel], np.log(y[sel]), 1)[0]


def test_a022_is_scalar(rep):
    c = L.coeffs(rep, [1.0, 7.0])
    z = 0.3 + 0.8j
    _, A22 = BF.a0_blocks(c, z)
    for k in range(2):
        assert np.all(A22[k][~np.eye(3, dtype=bool)] == 0)
        assert np.allclose(np.diag(A22[k]), z / c.u[k], rtol=1e-15, atol=0)


def test_a011_eigenvalues_are_mu12(rep):
    c = L.coeffs(rep, [0.5, 4.0, np.inf])
    z = 0.2 + 0.7j
    A11, _ = BF.a0_blocks(c, z)
    mu = L.spectral_data(c, z).mu
    for k in range(3):
        ev = np.sort_complex(np.linalg.eigvals(A11[k]))
        assert np.allclose(ev, np.sort_complex(mu[k, :2]), rtol=1e-12)


def test_y1_invertible_at_turning_point(rep):
    z = 0.88005j
    c = L.coeffs(rep, L.turning_point(rep, z))
    T = L.spectral_data(c, z).T[0]
    Y1 = BF.y1_matrix(c, z)[0]
    assert abs(np.linalg.det(T)) < 1e-6
    assert np.linalg.svd(Y1, compute_uv=False)[-1] > 1e-3


def test_d_matches_definition(rep):
    # Y1' from the chain rule agrees with a finite difference in x
    z, x, dx = 0.4 + 0.9j, 6.0, 1e-5
    Yp = BF.y1_matrix(L.coeffs(rep, x + dx), z)[0]
    Ym = BF.y1_matrix(L.coeffs(rep, x - dx), z)[0]
    dY = BF.y1_derivative(L.coeffs(rep, x), z)[0]
    assert np.allclose(dY, (Yp - Ym) / (2 * dx), atol=1e-8)


def test_sylvester_endstate(rep):
    z, h = L.zeta_inf(rep) + 0.05j, 0.1
    a = BF.sylvester_endstate(rep, z, h)
    c = L.coeffs(rep, np.inf)
    _, d, A11, A22 = BF.y1_and_d(c, z)
    d11, d12, d21, d22 = BF.split(d[0])
    res = A22[0] @ a - a @ (A11[0] + h * d11) + d21 + h * d22 @ a
    assert np.linalg.norm(res) < 1e-12 * max(1.0, np.linalg.norm(d21))
    assert np.all(BF._sylvester(A11[0], A22[0], np.zeros((3, 2))) == 0)
    a0 = BF.sylvester_endstate(rep, z, 0.0)
    assert np.allclose(A22[0] @ a0 - a0 @ A11[0], -d21, atol=1e-13)


def test_sylvester_gap_error():
    P = np.diag([1.0, 2.0]).astype(complex)
    with pytest.raises(BF.BlockformError):
        BF._sylvester(P, np.eye(3, dtype=complex), np.ones((3, 2)))


def test_lemma_decay_rates(rep, block_ref):
    bd, _ = block_ref
    x = bd.x
    d11, d12, _, _ = BF.split(bd.d)
    lo, hi = x[0] + 1, 12.0
    assert _slope(x, np.linalg.norm(d12, axis=(1, 2)), lo, hi) == pytest.approx(rep.mu, rel=0.1)
    assert _slope(x, np.linalg.norm(d11 - d11[-1], axis=(1, 2)), lo, hi) == pytest.approx(rep.mu, rel=0.1)
    dev = np.linalg.norm(bd.alpha21 - bd.alpha21_inf, axis=(1, 2))
    assert _slope(x, dev, lo, hi) == pytest.approx(rep.mu, rel=0.1)


def test_riccati_health(block_ref):
    bd, _ = block_ref
    assert np.max(np.linalg.norm(bd.alpha21, axis=(1, 2))) <= 10 * (1 + np.linalg.norm(bd.alpha21_inf))
    assert np.all(bd.alpha12[0] == 0)


def test_conjugation(block_ref):
    bd, _ = block_ref
    assert bd.conjugation_residual() < 1e-8
    assert bd.off_diagonal_residual() < 1e-8


def test_a11_formula(block_ref):
    bd, _ = block_ref
    d11, d12, _, _ = BF.split(bd.d)
    k = 100
    ref = bd.A011[k] + bd.h * d11[k] + bd.h**2 * d12[k] @ bd.alpha21[k]
    assert np.allclose(bd.A11[k], ref)


def test_scalar_reduction(block_ref):
    bd, sr = block_ref
    assert np.min(np.abs(sr.b)) > 0
    assert abs(sr.r[-1]) < 1e-6 * np.max(np.abs(sr.r))
    # leading coefficient (zeta^2 + c0^2 eta) b_^2
    A0 = bd.A011
    b_ = A0[:, 0, 1]
    s2 = A0[:, 1, 0] / b_
    assert np.allclose(sr.C, s2 * b_**2, rtol=1e-12)


def test_scalar_reduction_order(rep):
    z = L.zeta_inf(rep) + 0.05j
    hs = np.array([0.2, 0.1])
    dev = []
    for h in hs:
        sr = BF.scalar_reduction(BF.riccati_solve(rep, z, h, X_max=15.0, n_grid=513))
        dev.append(np.max(np.abs(sr.hr)))
    order = np.log(dev[0] / dev[1]) / np.log(hs[0] / hs[1])
    assert order >= 0.8


def test_k_round_trip(block_ref):
    bd, sr = block_ref
    h, x = bd.h, bd.x
    q = sr.C + sr.hr
    spr = make_interp_spline(x, q.real, k=5)
    spi = make_interp_spline(x, q.imag, k=5)
    sel = x <= x[0] + 3
    xs = x[sel]
    sol = integrate.solve_ivp(lambda t, y: [y[1] / h, (spr(t) + 1j * spi(t)) * y[0] / h],
                              (xs[0], xs[-1]), [1 + 0j, 0.3j], method="DOP853",
                              t_eval=xs, rtol=1e-12, atol=1e-14)
    w, hw = sol.y
    phi = np.einsum("nij,nj->ni", sr.K()[sel], np.stack([w, hw], 1))
    dphi = BF._spline_deriv(xs, phi[:, :, None])[:, :, 0]
    mean = (0.5 * (sr.a + sr.d))[sel]
    R = h * dphi + mean[:, None] * phi - np.einsum("nij,nj->ni", bd.A11[sel], phi)
    rel = np.linalg.norm(R, axis=1) / np.linalg.norm(phi, axis=1)
    assert np.max(rel[3:-3]) < 1e-7


def test_decaying_space_factorization(rep, block_ref):
    # evans decaying direction at x = M lies in Y (phi1; 0) for the decaying phi1
    from zndstab.evans import EvansSolver
    bd, _ = block_ref
    phi = BF.decaying_phi1(bd)
    M = float(bd.x[0])
    v = bd.Y[0] @ np.concatenate([phi[0], np.zeros(3)])
    _, _, samp, _ = EvansSolver(rep).decaying(bd.zeta, bd.h, x_out=(M,))
    w = samp[M][0][0]
    c = abs(np.vdot(v, w)) / (np.linalg.norm(v) * np.linalg.norm(w))
    assert np.arccos(min(1.0, c)) < 1e-5


def test_a11_endstate_eigenvalues(rep, block_ref):
    bd, _ = block_ref
    ev = np.sort_complex(np.linalg.eigvals(bd.A11[-1]))
    mu = np.sort_complex(L.spectral_data(L.coeffs(rep, np.inf), bd.zeta).mu[0, :2])
    assert np.max(np.abs(ev - mu)) < 1e-10 * np.max(np.abs(mu))

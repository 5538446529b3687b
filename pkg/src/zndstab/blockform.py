"""2+3 block diagonalization of the linear system near x = infinity.

theta = Y1 Y2 phi with Y1 = (P0, Q0, T3, T4, T5) and
Y2 = [[I, h alpha12], [h alpha21, I]] turns h theta' = G theta into
h phi' = diag(A11, A22) phi.  The 2x2 block is then reduced to the scalar
equation h^2 w'' = (C + h r) w.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import make_interp_spline

from . import linsys as L
from .profile import ProfileRep


class BlockformError(RuntimeError):
    pass


def y1_matrix(c: L.Coeffs, zeta):
    P0, Q0 = L.pq_vectors(c, zeta)
    T3 = L.t3_vector(c, zeta)
    shape = P0.shape[:-1]
    Y = np.zeros(shape + (5, 5), complex)
    Y[..., :, 0] = P0
    Y[..., :, 1] = Q0
    Y[..., :, 2] = T3
    Y[..., 3, 3] = 1.0
    Y[..., 4, 4] = 1.0
    return Y


def y1_derivative(c: L.Coeffs, zeta):
    dP, dQ = L.pq_derivative(c, zeta)
    dT = L.t_derivative(c, zeta)
    shape = dP.shape[:-1]
    dY = np.zeros(shape + (5, 5), complex)
    dY[..., :, 0] = dP
    dY[..., :, 1] = dQ
    dY[..., :, 2] = dT[..., :, 2]
    return dY


def a0_blocks(c: L.Coeffs, zeta):
    """A0_11 (2x2) and A0_22 = (zeta/u) I3."""
    zeta = np.asarray(zeta, dtype=complex)
    kap, eta, u = c.kappa, c.eta, c.u
    s2 = zeta**2 + c.c0sq_eta
    shape = np.broadcast(zeta, u).shape
    A11 = np.zeros(shape + (2, 2), complex)
    a_ = -kap**2 * zeta / (eta * u)
    b_ = -kap / (eta * u)
    A11[..., 0, 0] = a_
    A11[..., 0, 1] = b_
    A11[..., 1, 0] = s2 * b_
    A11[..., 1, 1] = a_
    A22 = (zeta / u)[..., None, None] * np.eye(3)
    return A11, A22


def y1_and_d(c: L.Coeffs, zeta):
    """(Y1, d, A0_11, A0_22) with d = Y1^-1 Phi1 Y1 - Y1^-1 Y1'."""
    Y1 = y1_matrix(c, zeta)
    dY1 = y1_derivative(c, zeta)
    F1 = L.phi1(c)
    d = np.linalg.solve(Y1, F1 @ Y1 - dY1)
    A11, A22 = a0_blocks(c, zeta)
    return Y1, d, A11, A22


def split(d):
    return d[..., :2, :2], d[..., :2, 2:], d[..., 2:, :2], d[..., 2:, 2:]


def sylvester_endstate(rep: ProfileRep, zeta, h, gap_tol=1e-6, c_inf=None):
    """alpha21(inf) from 0 = A0_22 a - a (A0_11 + h d11) + d21 + h d22 a."""
    c = c_inf if c_inf is not None else L.coeffs(rep, np.inf)
    _, d, A11, A22 = y1_and_d(c, complex(zeta))
    d11, d12, d21, d22 = split(d[0])
    return _sylvester(A11[0] + h * d11, A22[0] + h * d22, d21, gap_tol)


def _sylvester(P, Q, d21, gap_tol=1e-6):
    """Solve Q a - a P = -d21 for the 3x2 matrix a (vec form, 6x6)."""
    ep = np.linalg.eigvals(P)
    eq = np.linalg.eigvals(Q)
    gap = np.min(np.abs(eq[:, None] - ep[None, :]))
    if gap < gap_tol:
        raise BlockformError(f"eigenvalue gap {gap:.2e} below threshold")
    # column-major vec: vec(Q a) = (I2 kron Q) vec a, vec(a P) = (P^T kron I3) vec a
    Mat = np.kron(np.eye(2), Q) - np.kron(P.T, np.eye(3))
    vec = np.linalg.solve(Mat, -d21.reshape(-1, order="F"))
    return vec.reshape((3, 2), order="F")


def _rhs21(A11, A22, d, h, a21):
    d11, d12, d21, d22 = split(d)
    return (A22 @ a21 - a21 @ A11 + h * (d22 @ a21 - a21 @ d11) + d21
            - h * h * a21 @ d12 @ a21) / h


def _rhs12(A11, A22, d, h, a12):
    d11, d12, d21, d22 = split(d)
    return (A11 @ a12 - a12 @ A22 + h * (d11 @ a12 - a12 @ d22) + d12
            - h * h * a12 @ d21 @ a12) / h


@dataclass
class BlockDecomp:
    zeta: complex
    h: float
    x: np.ndarray
    Y1: np.ndarray
    dY1: np.ndarray
    d: np.ndarray
    A011: np.ndarray
    A022: np.ndarray
    alpha21: np.ndarray
    alpha12: np.ndarray
    alpha21_inf: np.ndarray
    G: np.ndarray

    @property
    def A11(self):
        d11, d12, _, _ = split(self.d)
        return self.A011 + self.h * d11 + self.h**2 * d12 @ self.alpha21

    @property
    def A22(self):
        _, _, d21, d22 = split(self.d)
        return self.A022 + self.h * d22 + self.h**2 * d21 @ self.alpha12

    @property
    def Y2(self):
        n = self.x.size
        Y2 = np.zeros((n, 5, 5), complex)
        Y2[:, :2, :2] = np.eye(2)
        Y2[:, 2:, 2:] = np.eye(3)
        Y2[:, :2, 2:] = self.h * self.alpha12
        Y2[:, 2:, :2] = self.h * self.alpha21
        return Y2

    @property
    def Y(self):
        return self.Y1 @ self.Y2

    def conjugation_residual(self):
        """max_x |h Y' - G Y + Y diag(A11, A22)| / |Y| with Y' from splines."""
        Y = self.Y
        dY = _spline_deriv(self.x, Y)
        Lam = np.zeros_like(Y)
        Lam[:, :2, :2] = self.A11
        Lam[:, 2:, 2:] = self.A22
        R = self.h * dY - self.G @ Y + Y @ Lam
        nr = np.linalg.norm(R, axis=(1, 2)) / np.linalg.norm(Y, axis=(1, 2))
        return float(np.max(nr[3:-3]))

    def off_diagonal_residual(self):
        """Off-diagonal blocks of Y^-1 (G Y - h Y'), relative to the generator size."""
        Y = self.Y
        dY = _spline_deriv(self.x, Y)
        Gc = np.linalg.solve(Y, self.G @ Y - self.h * dY)
        off = np.maximum(np.linalg.norm(Gc[:, :2, 2:], axis=(1, 2)),
                         np.linalg.norm(Gc[:, 2:, :2], axis=(1, 2)))
        scale = np.linalg.norm(Gc, axis=(1, 2))
        return float(np.max((off / scale)[3:-3]))


def _spline_deriv(x, Y, k=5, nu=1):
    Yr = Y.reshape(Y.shape[0], -1)
    sp_r = make_interp_spline(x, Yr.real, k=k)
    sp_i = make_interp_spline(x, Yr.imag, k=k)
    out = sp_r.derivative(nu)(x) + 1j * sp_i.derivative(nu)(x)
    return out.reshape(Y.shape)


def riccati_solve(rep: ProfileRep, zeta, h, M=None, X_max=None, n_grid=2049,
                  rtol=1e-11, atol=1e-13, bound_factor=10.0, check_bounds=True) -> BlockDecomp:
    """Integrate alpha21 backwards from X_max and alpha12 forwards from M."""
    zeta = complex(zeta)
    M = 5.0 / rep.mu if M is None else float(M)
    X_max = rep.x_max_default if X_max is None else float(X_max)
    c_inf = L.coeffs(rep, np.inf)
    a21_inf = sylvester_endstate(rep, zeta, h, c_inf=c_inf)

    def parts(x):
        c = L.coeffs(rep, x)
        _, d, A11, A22 = y1_and_d(c, zeta)
        return A11[0], A22[0], d[0]

    def f21(x, y):
        A11, A22, d = parts(x)
        return _rhs21(A11, A22, d, h, y.reshape(3, 2)).ravel()

    def f12(x, y):
        A11, A22, d = parts(x)
        return _rhs12(A11, A22, d, h, y.reshape(2, 3)).ravel()

    x = np.linspace(M, X_max, n_grid)
    s21 = integrate.solve_ivp(f21, (X_max, M), a21_inf.ravel().astype(complex), method="DOP853",
                              t_eval=x[::-1], rtol=rtol, atol=atol)
    s12 = integrate.solve_ivp(f12, (M, X_max), np.zeros(6, complex), method="DOP853",
                              t_eval=x, rtol=rtol, atol=atol)
    if not (s21.success and s12.success):
        raise BlockformError("Riccati integration failed")
    a21 = s21.y.T[::-1].reshape(-1, 3, 2)
    a12 = s12.y.T.reshape(-1, 2, 3)
    lim21 = bound_factor * (1 + np.linalg.norm(a21_inf))
    n21 = np.max(np.linalg.norm(a21, axis=(1, 2)))
    n12 = np.max(np.linalg.norm(a12, axis=(1, 2)))
    if check_bounds and (n21 > lim21 or n12 > bound_factor * (1 + n21)):
        raise BlockformError(f"Riccati solution left its health bound at zeta={zeta}, h={h}")
    c = L.coeffs(rep, x)
    Y1, d, A011, A022 = y1_and_d(c, zeta)
    dY1 = y1_derivative(c, zeta)
    G = L.generator(c, zeta, h)
    return BlockDecomp(zeta=zeta, h=float(h), x=x, Y1=Y1, dY1=dY1, d=d, A011=A011, A022=A022,
                       alpha21=a21, alpha12=a12, alpha21_inf=a21_inf, G=G)


def _continuous_sqrt(b):
    s = np.sqrt(b)
    for i in range(1, s.size):
        if abs(s[i] - s[i - 1]) > abs(s[i] + s[i - 1]):
            s[i] = -s[i]
    return s


@dataclass
class ScalarReduction:
    x: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    alpha: np.ndarray
    C: np.ndarray
    hr: np.ndarray
    r: np.ndarray
    varphi0: np.ndarray
    sqrt_b: np.ndarray
    h: float

    def K(self, scaled=True):
        """K(x) of shape (n, 2, 2); with scaled=True the factor exp(varphi0/h) is omitted."""
        sb = self.sqrt_b
        isb = 1.0 / sb
        disb = _spline_deriv(self.x, isb[:, None, None])[:, 0, 0]
        Kx = np.zeros((self.x.size, 2, 2), complex)
        Kx[:, 0, 0] = sb
        Kx[:, 1, 0] = self.alpha * isb - self.h * disb
        Kx[:, 1, 1] = isb
        if not scaled:
            Kx = Kx * np.exp(self.varphi0 / self.h)[:, None, None]
        return Kx


def scalar_reduction(bd: BlockDecomp) -> ScalarReduction:
    """C, r, varphi0 and K for h^2 w'' = (C + h r) w."""
    A = bd.A11
    h = bd.h
    a, b, c, d = A[:, 0, 0], A[:, 0, 1], A[:, 1, 0], A[:, 1, 1]
    if np.min(np.abs(b)) == 0:
        raise BlockformError("b vanishes on the grid")
    al = 0.5 * (d - a)
    A0 = bd.A011
    a_, b_, c_, d_ = A0[:, 0, 0], A0[:, 0, 1], A0[:, 1, 0], A0[:, 1, 1]
    C = b_ * c_ + (0.5 * (d_ - a_)) ** 2
    x = bd.x
    sb = _continuous_sqrt(b)
    d_al_b = _spline_deriv(x, (al / b)[:, None, None])[:, 0, 0]
    db = _spline_deriv(x, b[:, None, None])[:, 0, 0]
    inner = 0.5 * b ** -1.5 * db
    d_inner = _spline_deriv(x, inner[:, None, None])[:, 0, 0]
    hr = (b * c + al**2) - C - h * b * d_al_b - h * h * sb * d_inner
    # varphi0 with the improper integral truncated at X_max
    mean = 0.5 * (a + d)
    m_inf = mean[-1]
    diff = mean - m_inf
    tail = integrate.cumulative_trapezoid(diff[::-1], x[::-1], initial=0.0)[::-1]
    sp = make_interp_spline(x, diff.real, k=5).antiderivative()
    spi = make_interp_spline(x, diff.imag, k=5).antiderivative()
    tail = (sp(x) - sp(x[-1])) + 1j * (spi(x) - spi(x[-1]))
    varphi0 = m_inf * x + tail
    return ScalarReduction(x=x, a=a, b=b, c=c, d=d, alpha=al, C=C, hr=hr, r=hr / h,
                           varphi0=varphi0, sqrt_b=sb, h=h)


def decaying_phi1(bd: BlockDecomp, rtol=1e-11):
    """Decaying solution of h phi1' = A11 phi1, integrated backwards from X_max.

    Returns phi1 on the grid, normalized at each point (direction only) and the
    gauge-removed values.
    """
    x = bd.x
    A11 = bd.A11
    h = bd.h
    sp_r = make_interp_spline(x, A11.reshape(-1, 4).real, k=5)
    sp_i = make_interp_spline(x, A11.reshape(-1, 4).imag, k=5)
    Ainf = A11[-1]
    ev, evec = np.linalg.eig(Ainf)
    j = int(np.argmin(ev.real))
    lam = ev[j]

    def f(t, y):
        A = (sp_r(t) + 1j * sp_i(t)).reshape(2, 2)
        return (A @ y - lam * y) / h

    sol = integrate.solve_ivp(f, (x[-1], x[0]), evec[:, j].astype(complex), method="DOP853",
                              t_eval=x[::-1], rtol=rtol, atol=1e-14)
    if not sol.success:
        raise BlockformError("phi1 integration failed")
    return sol.y.T[::-1]


def reconstruct_theta(bd: BlockDecomp, sr: ScalarReduction, w, hwx):
    """theta = Y (K (w, h w_x); 0) on the decomposition grid (exp(varphi0/h) omitted)."""
    phi1 = np.einsum("nij,nj->ni", sr.K(scaled=True), np.stack([w, hwx], axis=1))
    full = np.concatenate([phi1, np.zeros((phi1.shape[0], 3), complex)], axis=1)
    return np.einsum("nij,nj->ni", bd.Y, full)


def theta_defect(bd: BlockDecomp, sr: ScalarReduction, theta, mask=None):
    """Relative defect |h theta' - G theta| / |theta| of theta = exp(varphi0/h) * theta_s."""
    h = bd.h
    dth = _spline_deriv(bd.x, theta[:, :, None])[:, :, 0]
    dphi = (0.5 * (sr.a + sr.d))[:, None] / h
    R = h * (dth + dphi * theta) - np.einsum("nij,nj->ni", bd.G, theta)
    rel = np.linalg.norm(R, axis=1) / np.linalg.norm(theta, axis=1)
    if mask is None:
        mask = slice(3, -3)
    return float(np.max(rel[mask]))

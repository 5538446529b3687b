"""Linearized 5x5 system about the steady profile.

State ordering is (v, u, u~, S, lambda).  The system reads
h theta_x = (Phi0(x, zeta) + h Phi1(x)) theta.  Functions accept arrays of
profile coefficients (leading shape ``(n,)``) and broadcast against ``zeta``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import thermo
from .profile import ProfileRep, ProfileError


@dataclass
class Coeffs:
    """Profile data at a set of x values needed by the linear system.

    Every field is an array of the same shape; ``*_x`` fields are x-derivatives.
    """
    x: np.ndarray
    lam: np.ndarray
    m: float
    v: np.ndarray
    u: np.ndarray
    S: np.ndarray
    p: np.ndarray
    T: np.ndarray
    c0sq: np.ndarray
    p_v: np.ndarray
    p_S: np.ndarray
    p_lam: np.ndarray
    r: tuple
    phi: tuple
    v_x: np.ndarray
    u_x: np.ndarray
    S_x: np.ndarray
    p_x: np.ndarray
    c0sq_x: np.ndarray
    lam_x: np.ndarray

    @property
    def c0(self):
        return np.sqrt(self.c0sq)

    @property
    def eta(self):
        return 1.0 - self.u**2 / self.c0sq

    @property
    def kappa(self):
        return self.u / self.c0

    @property
    def c0sq_eta(self):
        return self.c0sq - self.u**2

    @property
    def c0sq_eta_x(self):
        return self.c0sq_x - 2.0 * self.u * self.u_x

    @property
    def p_S_x(self):
        return self.p_x / self.p * self.p_S

    @property
    def c0_x(self):
        return 0.5 * self.c0sq_x / self.c0

    def __getitem__(self, idx):
        out = {}
        for k, val in self.__dict__.items():
            if k == "m":
                out[k] = val
            elif isinstance(val, tuple):
                out[k] = tuple(np.asarray(a)[idx] for a in val)
            else:
                out[k] = np.asarray(val)[idx]
        return Coeffs(**out)


def coeffs_from_lambda(rep: ProfileRep, lam, x=None) -> Coeffs:
    g = rep.g
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    st = rep.local(lam)
    p, p_v, p_S, p_lam = thermo.pressure(g, st.v, st.S, lam)
    r = thermo.rate(g, st.v, st.S, lam)
    phi = thermo.entropy_source(g, st.v, st.S, lam)
    lx = st.lam_x
    if x is None:
        x = np.array([rep.x_of_lambda(l) for l in lam])
    return Coeffs(x=np.asarray(x, dtype=float), lam=lam, m=rep.m, v=st.v, u=st.u, S=st.S, p=p,
                  T=st.T, c0sq=st.c0sq, p_v=p_v, p_S=p_S, p_lam=p_lam, r=r, phi=phi,
                  v_x=lx * st.v_l, u_x=lx * st.u_l, S_x=lx * st.S_l, p_x=lx * st.p_l,
                  c0sq_x=lx * st.c0sq_l, lam_x=lx)


def coeffs(rep: ProfileRep, x) -> Coeffs:
    """Profile coefficients at x (x = inf allowed, giving the endstate)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lam = np.where(np.isinf(x), 0.0, rep.lambda_of_x(np.where(np.isinf(x), 0.0, x)))
    return coeffs_from_lambda(rep, lam, x)


# ---------------------------------------------------------------------------
# matrices

@dataclass
class SystemMatrices:
    A_x: np.ndarray
    A_y: np.ndarray
    B: np.ndarray
    Phi0: np.ndarray
    Phi1: np.ndarray


def _zeros(shape, dtype=float):
    return np.zeros(tuple(shape) + (5, 5), dtype=dtype)


def system_parts(c: Coeffs):
    """A_x, A_y, B as arrays of shape (n, 5, 5)."""
    n = c.v.shape
    v, u = c.v, c.u
    Ax = _zeros(n)
    Ax[..., 0, 0] = u
    Ax[..., 0, 1] = -v
    Ax[..., 1, 0] = v * c.p_v
    Ax[..., 1, 1] = u
    Ax[..., 1, 3] = v * c.p_S
    Ax[..., 1, 4] = v * c.p_lam
    Ax[..., 2, 2] = u
    Ax[..., 3, 3] = u
    Ax[..., 4, 4] = u
    Ay = _zeros(n)
    Ay[..., 0, 2] = -v
    Ay[..., 2, 0] = v * c.p_v
    Ay[..., 2, 3] = v * c.p_S
    Ay[..., 2, 4] = v * c.p_lam
    _, r_v, r_S, r_lam = c.r
    _, phi_v, phi_S, phi_lam = c.phi
    g_over = c.c0sq / v**2
    g_over_x = c.c0sq_x / v**2 - 2.0 * c.c0sq * c.v_x / v**3
    B = _zeros(n)
    B[..., 0, 0] = -c.u_x
    B[..., 0, 1] = c.v_x
    B[..., 1, 0] = c.p_x - v * g_over_x
    B[..., 1, 1] = c.u_x
    B[..., 1, 3] = v * c.p_S_x
    B[..., 1, 4] = 0.0  # p_lambda vanishes identically for this EOS
    B[..., 3, 0] = -phi_v
    B[..., 3, 1] = c.S_x
    B[..., 3, 3] = -phi_S
    B[..., 3, 4] = -phi_lam
    B[..., 4, 0] = -r_v
    B[..., 4, 1] = c.lam_x
    B[..., 4, 3] = -r_S
    B[..., 4, 4] = -r_lam
    del g_over
    return Ax, Ay, B


def _T(a):
    return np.swapaxes(a, -1, -2)


def matrices_at(c: Coeffs, zeta) -> SystemMatrices:
    """Product-form Phi0 = (A_x^-1 (zeta I + i A_y))^T and Phi1 = (A_x^-1 B)^T."""
    Ax, Ay, B = system_parts(c)
    zeta = np.asarray(zeta, dtype=complex)
    rhs = zeta[..., None, None] * np.eye(5) + 1j * Ay
    Axb = np.broadcast_to(Ax, rhs.shape)
    Phi0 = _T(np.linalg.solve(Axb, rhs))
    Phi1 = _T(np.linalg.solve(Ax, B))
    return SystemMatrices(Ax, Ay, B, Phi0, Phi1)


def phi1(c: Coeffs):
    Ax, _, B = system_parts(c)
    return _T(np.linalg.solve(Ax, B))


def phi0_split(c: Coeffs):
    """Return (M1, M2) with Phi0 = zeta*M1 + M2 (closed form)."""
    n = c.v.shape
    u, m, eta, pS, pl = c.u, c.m, c.eta, c.p_S, c.p_lam
    k2 = 1.0 - eta
    M1 = _zeros(n)
    M1[..., 0, 0] = -k2 / (eta * u)
    M1[..., 0, 1] = -m / (eta * u)
    M1[..., 1, 0] = -k2 / (eta * m * u)
    M1[..., 1, 1] = -k2 / (eta * u)
    M1[..., 2, 2] = 1.0 / u
    M1[..., 3, 0] = k2 * pS / (eta * m * m * u)
    M1[..., 3, 1] = k2 * pS / (eta * m * u)
    M1[..., 3, 3] = 1.0 / u
    M1[..., 4, 0] = k2 * pl / (eta * m * m * u)
    M1[..., 4, 1] = k2 * pl / (eta * m * u)
    M1[..., 4, 4] = 1.0 / u
    M2 = _zeros(n, complex)
    M2[..., 0, 2] = -1j * m / k2
    M2[..., 2, 0] = 1j * k2 / (eta * m)
    M2[..., 2, 1] = 1j / eta
    M2[..., 3, 2] = 1j * pS / m
    M2[..., 4, 2] = 1j * pl / m
    return M1, M2


def phi0_closed_form(c: Coeffs, zeta):
    M1, M2 = phi0_split(c)
    zeta = np.asarray(zeta, dtype=complex)
    return zeta[..., None, None] * M1 + M2


# ---------------------------------------------------------------------------
# spectral data

def s_branch(zeta, c0sq_eta):
    """s = sqrt(zeta^2 + c0^2 eta) with the cut on the imaginary segment.

    For Re zeta > 0 the principal root; on Re zeta = 0 the one-sided limits
    from the right half plane.
    """
    zeta = np.asarray(zeta, dtype=complex)
    w = zeta * zeta + c0sq_eta
    s = np.sqrt(w)
    on_axis = (zeta.real == 0) & (w.real < 0)
    if np.any(on_axis):
        alt = 1j * np.sign(zeta.imag) * np.sqrt(np.abs(w.real))
        s = np.where(on_axis, alt, s)
    return s


@dataclass
class SpectralData:
    eta: np.ndarray
    kappa: np.ndarray
    s: np.ndarray
    mu: np.ndarray        # (..., 5)
    T: np.ndarray         # (..., 5, 5), columns are eigenvectors
    P0: np.ndarray
    Q0: np.ndarray
    m: float
    singular: np.ndarray


def eigenvalues(c: Coeffs, zeta, s=None):
    zeta = np.asarray(zeta, dtype=complex)
    u, eta, kap = c.u, c.eta, c.kappa
    if s is None:
        s = s_branch(zeta, c.c0sq_eta)
    mu1 = -kap * (kap * zeta + s) / (eta * u)
    mu2 = -kap * (kap * zeta - s) / (eta * u)
    mu3 = zeta / u
    return mu1, mu2, mu3


def pq_vectors(c: Coeffs, zeta):
    zeta = np.asarray(zeta, dtype=complex)
    shape = np.broadcast(zeta, c.u).shape
    P0 = np.zeros(shape + (5,), complex)
    Q0 = np.zeros(shape + (5,), complex)
    u, m, c0 = c.u, c.m, c.c0
    P0[..., 1] = zeta / u
    P0[..., 2] = -1j
    Q0[..., 0] = m * c0 / u**2
    Q0[..., 3] = -c.p_S / (c0 * m)
    Q0[..., 4] = -c.p_lam / (c0 * m)
    return P0, Q0


def t3_vector(c: Coeffs, zeta):
    zeta = np.asarray(zeta, dtype=complex)
    shape = np.broadcast(zeta, c.u).shape
    T3 = np.zeros(shape + (5,), complex)
    T3[..., 0] = -1j * c.m / (1.0 - c.eta)
    T3[..., 1] = 1j
    T3[..., 2] = zeta / c.u
    return T3


def spectral_data(c: Coeffs, zeta) -> SpectralData:
    zeta = np.asarray(zeta, dtype=complex)
    s = s_branch(zeta, c.c0sq_eta)
    mu1, mu2, mu3 = eigenvalues(c, zeta, s)
    P0, Q0 = pq_vectors(c, zeta)
    T3 = t3_vector(c, zeta)
    shape = P0.shape[:-1]
    T = np.zeros(shape + (5, 5), complex)
    T[..., :, 0] = P0 + s[..., None] * Q0
    T[..., :, 1] = P0 - s[..., None] * Q0
    T[..., :, 2] = T3
    T[..., 3, 3] = 1.0
    T[..., 4, 4] = 1.0
    mu = np.stack(np.broadcast_arrays(mu1, mu2, mu3, mu3, mu3), axis=-1)
    scale = np.abs(zeta) + np.sqrt(c.c0sq)
    singular = np.minimum(np.abs(s), np.abs(zeta - c.u)) < 1e-8 * scale
    return SpectralData(eta=c.eta, kappa=c.kappa, s=s, mu=mu, T=T, P0=P0, Q0=Q0,
                        m=c.m, singular=singular)


def t_derivative(c: Coeffs, zeta, s=None):
    """x-derivative of the eigenvector matrix T (closed-form chain rule)."""
    zeta = np.asarray(zeta, dtype=complex)
    if s is None:
        s = s_branch(zeta, c.c0sq_eta)
    u, m, c0, pS = c.u, c.m, c.c0, c.p_S
    u_x, c0_x, pS_x = c.u_x, c.c0_x, c.p_S_x
    s_x = 0.5 * c.c0sq_eta_x / s
    shape = np.broadcast(zeta, u).shape
    dT = np.zeros(shape + (5, 5), complex)
    a_x = m * (s_x * c0 + s * c0_x) / u**2 - 2.0 * m * s * c0 * u_x / u**3
    w_x = -zeta * u_x / u**2
    b_x = -(pS_x * s + pS * s_x) / (c0 * m) + pS * s * c0_x / (c0**2 * m)
    dT[..., 0, 0], dT[..., 0, 1] = a_x, -a_x
    dT[..., 1, 0], dT[..., 1, 1] = w_x, w_x
    dT[..., 3, 0], dT[..., 3, 1] = b_x, -b_x
    dT[..., 0, 2] = -1j * m * (2.0 * c0 * c0_x / u**2 - 2.0 * c0**2 * u_x / u**3)
    dT[..., 2, 2] = w_x
    return dT


def pq_derivative(c: Coeffs, zeta):
    """x-derivatives of P0 and Q0."""
    zeta = np.asarray(zeta, dtype=complex)
    shape = np.broadcast(zeta, c.u).shape
    dP = np.zeros(shape + (5,), complex)
    dQ = np.zeros(shape + (5,), complex)
    u, m, c0 = c.u, c.m, c.c0
    dP[..., 1] = -zeta * c.u_x / u**2
    dQ[..., 0] = m * (c.c0_x / u**2 - 2.0 * c0 * c.u_x / u**3)
    dQ[..., 3] = -c.p_S_x / (c0 * m) + c.p_S * c.c0_x / (c0**2 * m)
    return dP, dQ


# ---------------------------------------------------------------------------
# frequency classes and turning points

def _ranges(rep: ProfileRep, n=2049):
    lam = np.linspace(0.0, 1.0, n)
    st = rep.local(lam)
    w = np.sqrt(st.c0sq_eta)
    return (float(w.min()), float(w.max()), float(st.u.min()), float(st.u.max()))


@dataclass
class ClassInfo:
    cls: str
    plus: bool = False
    endpoint: str | None = None


def classify_class(rep: ProfileRep, zeta, tol=1e-12, ranges=None) -> ClassInfo:
    """Frequency classes I, II, III (with III+ and endpoint flags)."""
    zeta = complex(zeta)
    if zeta.real < 0:
        raise ValueError("Re zeta must be non-negative")
    wmin, wmax, umin, umax = ranges or _ranges(rep)
    a = abs(zeta)
    if zeta.real == 0 and wmin - tol <= a <= wmax + tol and a > 0:
        endpoint = None
        w_inf, w_0 = rep.c0_sqrt_eta_range()
        if abs(a - w_inf) <= tol * max(1.0, a):
            endpoint = "zeta_inf"
        elif abs(a - w_0) <= tol * max(1.0, a):
            endpoint = "zeta_0"
        return ClassInfo("III", plus=zeta.imag > 0, endpoint=endpoint)
    if zeta.imag == 0 and umin - tol <= zeta.real <= umax + tol:
        return ClassInfo("II")
    return ClassInfo("I")


def zeta_0(rep: ProfileRep) -> complex:
    return 1j * rep.c0_sqrt_eta_range()[1]


def zeta_inf(rep: ProfileRep) -> complex:
    return 1j * rep.c0_sqrt_eta_range()[0]


def turning_lambda(rep: ProfileRep, zeta) -> float:
    """lambda* with c0^2 eta(lambda*) = |zeta|^2 (zeta in III+)."""
    zeta = complex(zeta)
    w_inf, w_0 = rep.c0_sqrt_eta_range()
    a = abs(zeta)
    if zeta.real != 0 or zeta.imag <= 0 or not (w_inf - 1e-14 <= a <= w_0 + 1e-14):
        raise ValueError("zeta is not in III+")
    f = lambda l: float(rep.local(l).c0sq_eta) - a * a
    if abs(a - w_0) < 1e-14:
        return rep.lambda0
    if abs(a - w_inf) < 1e-14:
        return 0.0
    lam = optimize.brentq(f, 0.0, rep.lambda0, xtol=1e-16, rtol=1e-15, maxiter=500)
    return lam


def turning_point(rep: ProfileRep, zeta) -> float:
    """x(zeta) with s(x(zeta), zeta) = 0; returns inf at zeta_inf."""
    lam = turning_lambda(rep, zeta)
    if lam == 0.0:
        return np.inf
    return rep.x_of_lambda(lam)


def x_zeta_derivative(rep: ProfileRep, zeta) -> complex:
    """x_zeta from f_x x_zeta + 2 zeta = 0 with f = zeta^2 + c0^2 eta,
    evaluated at the real turning point of i|zeta|."""
    zeta = complex(zeta)
    lam = turning_lambda(rep, 1j * abs(zeta))
    st = rep.local(lam)
    f_x = st.dx(st.c0sq_l - 2.0 * st.u * st.u_l)
    if f_x == 0:
        raise ValueError("degenerate turning point (f_x = 0)")
    return -2.0 * zeta / float(f_x)


# ---------------------------------------------------------------------------
# WKB approximants

def _cquad(f, a, b, tol=1e-10):
    re = integrate.quad(lambda t: f(t).real, a, b, epsabs=tol, epsrel=tol, limit=400)[0]
    im = integrate.quad(lambda t: f(t).imag, a, b, epsabs=tol, epsrel=tol, limit=400)[0]
    return re + 1j * im


def wkb_exponents(rep: ProfileRep, i, x, zeta):
    """(h_i, k_i) at x: h_i = int_0^x mu_i, k_i with k_i' = l_i (Phi1 T_i - T_i')."""
    i0 = i - 1

    def mu_i(t):
        c = coeffs(rep, t)
        return spectral_data(c, zeta).mu[0, i0]

    def k_prime(t):
        c = coeffs(rep, t)
        sd = spectral_data(c, zeta)
        T = sd.T[0]
        Ti = T[:, i0]
        dTi = t_derivative(c, zeta, sd.s)[0][:, i0]
        l = np.linalg.inv(T)[i0]
        F1 = phi1(c)[0]
        return l @ (F1 @ Ti - dTi) / (l @ Ti)

    return _cquad(mu_i, 0.0, x), _cquad(k_prime, 0.0, x)


def _has_turning_point(rep, zeta, x):
    zeta = complex(zeta)
    if zeta.real != 0 or zeta.imag <= 0:
        return False
    w_inf, w_0 = rep.c0_sqrt_eta_range()
    if not (w_inf <= abs(zeta) <= w_0):
        return False
    return turning_point(rep, zeta) <= x


def wkb_leading(rep: ProfileRep, i, x, zeta, h):
    """theta_i(x) = exp(h_i/h + k_i) T_i(x, zeta)."""
    if _has_turning_point(rep, zeta, x):
        raise ValueError("turning point inside [0, x]")
    hi, ki = wkb_exponents(rep, i, x, zeta)
    c = coeffs(rep, x)
    T = spectral_data(c, zeta).T[0]
    return np.exp(hi / h + ki) * T[:, i - 1]


def generator(c: Coeffs, zeta, h):
    """G = Phi0 + h Phi1."""
    return phi0_closed_form(c, zeta) + h * phi1(c)

"""Complex special functions used by the turning-point machinery.

Airy Ai/Ai' (any complex z), modified Bessel I_nu/K_nu of complex order for
|arg z| <= pi/2, a Lanczos Gamma, the closed-form model-problem oracle and a
Picard solver for W'' = (u^2 + psi) W on real segments.

Series are summed with mpmath numbers at a working precision raised to cover
the cancellation of the sum; every other step runs in double precision.
Functions with a ``_scaled`` suffix return (mantissa, exponent) with
value = mantissa * exp(exponent), exponent real.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class SeriesPolicy:
    airy_radius: float = 8.0
    bessel_radius: float = 20.0
    asym_terms: int = 60
    target_eps: float = 1e-12

    def __post_init__(self):
        if self.airy_radius <= 0 or self.bessel_radius <= 0:
            raise ValueError("thresholds must be positive")
        if self.asym_terms < 1:
            raise ValueError("asym_terms must be at least 1")


DEFAULT_POLICY = SeriesPolicy()


class GammaPole(ValueError):
    """Gamma evaluated at a non-positive integer."""


class SpecfunDomainError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Gamma

_LANCZOS_G = 7
_LANCZOS = [
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
]


def _is_pole(z: complex) -> bool:
    return z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real)


def loggamma_complex(z) -> complex:
    """log Gamma(z) (some branch; exp of it is Gamma)."""
    z = complex(z)
    if _is_pole(z):
        raise GammaPole(f"Gamma has a pole at {z}")
    if z.real < 0.5:
        return complex(math.log(math.pi)) - cmath.log(cmath.sin(math.pi * z)) - loggamma_complex(1 - z)
    z = z - 1
    x = _LANCZOS[0]
    for i in range(1, _LANCZOS_G + 2):
        x += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2 * math.pi) + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


def gamma_complex(z) -> complex:
    """Gamma(z) by the Lanczos approximation with reflection for Re z < 1/2."""
    z = complex(z)
    if _is_pole(z):
        raise GammaPole(f"Gamma has a pole at {z}")
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * gamma_complex(1 - z))
    return cmath.exp(loggamma_complex(z))


# ---------------------------------------------------------------------------
# Airy

_AI0 = "0.35502805388781723926006318600418317639797917419917724058332651"
_AIP0 = "-0.25881940379280679840518356018920396347909113835493458221000181"


def _airy_u(n):
    u = [1.0]
    for k in range(1, n):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, n)]
    return u, v


_U, _V = _airy_u(60)


def _ff(j, n):
    out = 1
    for i in range(n):
        out *= j - i
    return out


def airy_series(z, nderiv=0, extra_digits=None):
    """Maclaurin series for Ai^(n)(z), n = 0, 1, 2, ... (any z, slow for large |z|)."""
    z = complex(z)
    a = abs(z)
    if extra_digits is None:
        extra_digits = int(4.0 / 3.0 * a ** 1.5 / math.log(10)) + 6
    with mpmath.workdps(17 + extra_digits):
        c0, c1 = mpmath.mpf(_AI0), mpmath.mpf(_AIP0)
        if z == 0:
            # only the z^n coefficient survives
            k, r = divmod(nderiv, 3)
            if r == 2:
                return 0j
            coef = mpmath.mpf(1)
            for i in range(1, k + 1):
                coef /= (3 * i - 1) * (3 * i) if r == 0 else (3 * i) * (3 * i + 1)
            return complex((c0 if r == 0 else c1) * coef * mpmath.factorial(nderiv))
        zm = mpmath.mpc(z.real, z.imag)
        z3 = zm ** 3
        zn = zm ** nderiv
        tf = mpmath.mpc(1)       # cf_k z^(3k)
        tg = zm                  # cg_k z^(3k+1)
        total = mpmath.mpc(0)
        eps = mpmath.mpf(10) ** (-(17 + extra_digits))
        k = 0
        while True:
            term = 0
            if 3 * k >= nderiv:
                term += c0 * tf * _ff(3 * k, nderiv)
            if 3 * k + 1 >= nderiv:
                term += c1 * tg * _ff(3 * k + 1, nderiv)
            term = term / zn
            total += term
            if k > 2 and abs(term) <= eps * (abs(total) + eps) and a ** 3 < (3 * k) ** 2:
                break
            k += 1
            tf = tf * z3 / ((3 * k - 1) * (3 * k))
            tg = tg * z3 / ((3 * k) * (3 * k + 1))
            if k > 5000:
                raise SpecfunDomainError("Airy series failed to converge")
        return complex(total)


def _asym_sum(coefs, x, alternate=True, tol=1e-17):
    """Sum of (+-1)^k c_k x^-k truncated at the smallest term."""
    total = 0j
    xp = 1.0 + 0j
    prev = math.inf
    for k, c in enumerate(coefs):
        term = c * xp
        if k > 0 and abs(term) >= prev:
            break
        total += (-1) ** k * term if alternate else term
        prev = abs(term)
        if prev < tol * abs(total):
            break
        xp /= x
    return total, prev


def _airy_principal_scaled(z):
    """(Ai_m, Ai'_m, e) for |arg z| <= 2pi/3 with the exponent -chi factored out."""
    chi = 2.0 / 3.0 * z ** 1.5
    z14 = z ** 0.25
    su, _ = _asym_sum(_U, chi)
    sv, _ = _asym_sum(_V, chi)
    e = -chi
    ph = cmath.exp(1j * e.imag)
    ai = ph * su / (2.0 * math.sqrt(math.pi) * z14)
    aip = -ph * z14 * sv / (2.0 * math.sqrt(math.pi))
    return ai, aip, e.real


def _airy_oscillatory_scaled(z):
    """Ai(-w), Ai'(-w) for w = -z, |arg w| < 2pi/3."""
    w = -z
    g = 2.0 / 3.0 * w ** 1.5
    w14 = w ** 0.25
    ue, _ = _asym_sum(_U[0::2], g * g)
    uo, _ = _asym_sum(_U[1::2], g * g)
    ve, _ = _asym_sum(_V[0::2], g * g)
    vo, _ = _asym_sum(_V[1::2], g * g)
    uo, vo = uo / g, vo / g
    e = abs(g.imag)
    # sin, cos of (g + pi/4) with exp(|Im g|) removed
    a = g + math.pi / 4
    ep = cmath.exp(1j * a.real) * math.exp(-a.imag - e)
    em = cmath.exp(-1j * a.real) * math.exp(a.imag - e)
    sn = (ep - em) / 2j
    cs = (ep + em) / 2
    ai = (sn * ue - cs * uo) / (math.sqrt(math.pi) * w14)
    aip = -w14 * (cs * ve + sn * vo) / math.sqrt(math.pi)
    return ai, aip, e


def airy_scaled(z, policy: SeriesPolicy = DEFAULT_POLICY):
    """(Ai_m, Ai'_m, exponent): Ai(z) = Ai_m exp(exponent), likewise Ai'."""
    z = complex(z)
    if not (cmath.isfinite(z)):
        raise SpecfunDomainError("z must be finite")
    if abs(z) < policy.airy_radius:
        return airy_series(z, 0), airy_series(z, 1), 0.0
    if abs(cmath.phase(z)) <= 2.0 * math.pi / 3.0:
        return _airy_principal_scaled(z)
    return _airy_oscillatory_scaled(z)


def airy(z, policy: SeriesPolicy = DEFAULT_POLICY):
    """(Ai(z), Ai'(z))."""
    ai, aip, e = airy_scaled(z, policy)
    f = math.exp(e)
    return ai * f, aip * f


def airy_rotated(j, z, policy: SeriesPolicy = DEFAULT_POLICY):
    """Ai_j(z) = Ai(z exp(-2 pi i j/3)), j in {0, 1, -1}."""
    if j not in (0, 1, -1):
        raise SpecfunDomainError("j must be 0, 1 or -1")
    return airy(complex(z) * cmath.exp(-2j * math.pi * j / 3.0), policy)[0]


def cauchy_derivative(f, z, r=0.25, n=48):
    """f'(z) from the trapezoid rule on a circle of radius r (f analytic)."""
    th = 2 * math.pi * np.arange(n) / n
    pts = z + r * np.exp(1j * th)
    vals = np.array([f(p) for p in pts])
    return complex(np.mean(vals * np.exp(-1j * th)) / r)


# ---------------------------------------------------------------------------
# Bessel

def _bessel_a(nu, n):
    a = [1.0 + 0j]
    four = 4 * nu * nu
    for k in range(1, n):
        a.append(a[-1] * (four - (2 * k - 1) ** 2) / (k * 8.0))
    return a


def _check_bessel(nu, z):
    if nu.real < 0:
        raise SpecfunDomainError("Re nu must be non-negative")
    if abs(nu) > 50:
        raise SpecfunDomainError("|nu| must not exceed 50")
    if z == 0:
        raise SpecfunDomainError("z must be nonzero")
    if abs(cmath.phase(z)) > math.pi / 2 + 1e-12:
        raise SpecfunDomainError("|arg z| must not exceed pi/2")


def _i_series_mp(nu, z, nderiv, dps):
    """I_nu(z) (or its z-derivative) as an mpmath number, at precision dps."""
    with mpmath.workdps(dps):
        num = mpmath.mpc(nu.real, nu.imag)
        zm = mpmath.mpc(z.real, z.imag)
        q = zm * zm / 4
        half = zm / 2
        # prefactor (z/2)^nu / Gamma(nu+1); rgamma handles poles of Gamma
        pref = mpmath.exp(num * mpmath.log(half))
        term = pref * mpmath.rgamma(num + 1)
        total = mpmath.mpc(0)
        eps = mpmath.mpf(10) ** (-dps)
        k = 0
        first_nonzero = False
        while True:
            if nderiv:
                contrib = term * (num + 2 * k) / zm
            else:
                contrib = term
            total += contrib
            if term != 0:
                first_nonzero = True
            if first_nonzero and k > abs(z) and abs(contrib) <= eps * abs(total):
                break
            k += 1
            denom = k * (num + k)
            if denom == 0:
                # Gamma(nu+k) pole: 1/Gamma(nu+k+1) restart from the exact value
                term = mpmath.exp((num + 2 * k) * mpmath.log(half)) * mpmath.rgamma(num + k + 1) / mpmath.factorial(k)
            else:
                term = term * q / denom
            if k > 20000:
                raise SpecfunDomainError("Bessel series failed to converge")
        return total


def _i_series(nu, z, nderiv=0):
    extra = (abs(z) - z.real) / math.log(10) + 8
    v = _i_series_mp(nu, z, nderiv, int(17 + extra))
    return complex(v)


def _i_asym_scaled(nu, z, nderiv=0, n=60):
    """I_nu or I'_nu by the large-|z| expansion; None if not accurate enough."""
    a = _bessel_a(nu, n)
    s1, err1 = _asym_sum(a, z)
    sqrt2piz = cmath.sqrt(2 * math.pi * z)
    if err1 > 1e-14 * abs(s1):
        return None
    if nderiv:
        # I' = I_{nu+1} + (nu/z) I_nu
        nxt = _i_asym_scaled(nu + 1, z, 0, n)
        cur = _i_asym_scaled(nu, z, 0, n)
        if nxt is None or cur is None:
            return None
        return nxt[0] + nu / z * cur[0], cur[1]
    val = cmath.exp(1j * z.imag) * s1 / sqrt2piz
    if z.imag != 0:
        sgn = 1 if z.imag > 0 else -1
        s2, _ = _asym_sum(a, z, alternate=False)
        val += sgn * 1j * cmath.exp(sgn * 1j * math.pi * nu) * cmath.exp(-2 * z.real - 1j * z.imag) * s2 / sqrt2piz
    return val, z.real


def bessel_I_scaled(nu, z, nderiv=0, policy: SeriesPolicy = DEFAULT_POLICY):
    """(mantissa, exponent) for I_nu(z) (nderiv=1: I'_nu(z))."""
    nu, z = complex(nu), complex(z)
    _check_bessel(nu, z)
    if abs(z) >= policy.bessel_radius:
        r = _i_asym_scaled(nu, z, nderiv)
        if r is not None:
            return r
    e = z.real
    v = _i_series_mp(nu, z, nderiv, int(17 + (abs(z) - z.real) / math.log(10) + 8))
    with mpmath.workdps(30):
        return complex(v * mpmath.exp(-e)), e


def bessel_I(nu, z, nderiv=0, policy: SeriesPolicy = DEFAULT_POLICY):
    m, e = bessel_I_scaled(nu, z, nderiv, policy)
    return m * math.exp(e)


def _k_asym_scaled(nu, z, n=60):
    a = _bessel_a(nu, n)
    s, err = _asym_sum(a, z, alternate=False)
    if err > 1e-14 * abs(s):
        return None
    return cmath.sqrt(math.pi / (2 * z)) * cmath.exp(-1j * z.imag) * s, -z.real


def _k_reflection(nu, z, nderiv):
    """K via pi/2 (I_{-nu} - I_nu)/sin(nu pi) in extended precision (scaled by e^{Re z})."""
    sn = abs(cmath.sin(math.pi * nu))
    extra = (2 * max(z.real, 0) + abs(z) - z.real) / math.log(10) + math.log10(1 / max(sn, 1e-300)) + 10
    dps = int(17 + extra)
    ip = _i_series_mp(-nu, z, nderiv, dps)
    im = _i_series_mp(nu, z, nderiv, dps)
    with mpmath.workdps(dps):
        num = mpmath.mpc(nu.real, nu.imag)
        k = mpmath.pi / 2 * (ip - im) / mpmath.sin(num * mpmath.pi)
        return complex(k * mpmath.exp(z.real)), -z.real


def bessel_K_scaled(nu, z, nderiv=0, policy: SeriesPolicy = DEFAULT_POLICY):
    """(mantissa, exponent) for K_nu(z) (nderiv=1: K'_nu(z))."""
    nu, z = complex(nu), complex(z)
    _check_bessel(nu, z)
    if abs(z) >= policy.bessel_radius:
        if nderiv:
            a = _k_asym_scaled(nu + 1, z)
            b = _k_asym_scaled(nu, z)
            if a is not None and b is not None:
                return -a[0] + nu / z * b[0], b[1]
        else:
            r = _k_asym_scaled(nu, z)
            if r is not None:
                return r
    dist = abs(nu - round(nu.real))
    if dist < 1e-3:
        # K is entire in nu: mean value over a circle avoids the removable
        # singularity of the reflection formula at integer order
        n, rad = 32, 0.3
        th = 2 * math.pi * np.arange(n) / n
        vals = [_k_reflection(nu + rad * cmath.exp(1j * t), z, nderiv)[0] for t in th]
        return complex(np.mean(vals)), -z.real
    return _k_reflection(nu, z, nderiv)


def bessel_K(nu, z, nderiv=0, policy: SeriesPolicy = DEFAULT_POLICY):
    m, e = bessel_K_scaled(nu, z, nderiv, policy)
    return m * math.exp(e)


def bessel_weights(nu, z, delta=0.25):
    """Bounding functions V_nu, X_nu and the weight E_nu = (V/X)^(1/2) (diagnostic)."""
    nu, z = complex(nu), complex(z)
    a = nu.real
    az = abs(z)
    V = abs(z ** a * cmath.exp(z)) / (1 + az ** (a + 0.5))
    ell = math.log((1 + 2 * az) / az) if abs(nu) < delta else 1.0
    X = ell * (1 + az ** a) / (1 + math.sqrt(az)) * abs(cmath.exp(-z)) / az ** a
    return V, X, math.sqrt(V / X)


# ---------------------------------------------------------------------------
# model problem  h^2 w'' = (e^{-2x} + alpha^2) w

def model_oracle(alpha, h, x, policy: SeriesPolicy = DEFAULT_POLICY, with_K=True):
    """Closed-form pair w_I = I_beta(e^{-x}/h), w_K = K_beta(e^{-x}/h), beta = alpha/h.

    Returns (w_I, w_K, dw_I/dx, dw_K/dx) as complex arrays shaped like x.
    """
    beta = complex(alpha) / h
    if beta.real < -1e-14:
        raise SpecfunDomainError("Re(alpha/h) must be non-negative")
    if abs(beta) > 50:
        raise SpecfunDomainError("|alpha/h| must not exceed 50")
    beta = complex(max(beta.real, 0.0), beta.imag)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((4,) + xs.shape, complex)
    for i, xi in np.ndenumerate(xs):
        t = math.exp(-xi) / h
        out[0][i] = bessel_I(beta, t, 0, policy)
        out[2][i] = -t * bessel_I(beta, t, 1, policy)
        if with_K:
            out[1][i] = bessel_K(beta, t, 0, policy)
            out[3][i] = -t * bessel_K(beta, t, 1, policy)
    return out[0], out[1], out[2], out[3]


def model_ode_check(alpha, h, x_max=5.0, n=101, rtol=1e-12):
    """Max relative error of w_I against direct integration of the model ODE.

    The recessive-at-infinity solution w_I is integrated from x_max towards 0,
    the direction in which it dominates.
    """
    alpha = complex(alpha)
    x = np.linspace(0.0, x_max, n)
    wI, _, dI, _ = model_oracle(alpha, h, x, with_K=False)

    def rhs(t, y):
        return [y[1], (math.exp(-2 * t) + alpha * alpha) / h**2 * y[0]]

    sol = integrate.solve_ivp(rhs, (x_max, 0.0), [wI[-1], dI[-1]], method="DOP853",
                              t_eval=x[::-1], rtol=rtol, atol=1e-300)
    if not sol.success:
        raise RuntimeError(sol.message)
    w_num = sol.y[0][::-1]
    return float(np.max(np.abs(w_num - wI) / np.abs(wI)))


# ---------------------------------------------------------------------------
# m = 0 Picard solver

_CHEB_CACHE_P = 16


def _cheb_nodes_and_integration(p):
    """Chebyshev-Lobatto nodes on [-1,1] and the matrix of indefinite integrals from -1."""
    t = -np.cos(np.pi * np.arange(p + 1) / p)
    V = np.polynomial.chebyshev.chebvander(t, p)
    Vinv = np.linalg.inv(V)
    S = np.zeros((p + 1, p + 1))
    for j in range(p + 1):
        c = np.zeros(p + 1)
        c[j] = 1.0
        ci = np.polynomial.chebyshev.chebint(c, lbnd=-1)
        S[:, j] = np.polynomial.chebyshev.chebval(t, ci)
    return t, S @ Vinv


_T_NODES, _S_MAT = _cheb_nodes_and_integration(_CHEB_CACHE_P)


@dataclass
class PicardResult:
    xi: np.ndarray
    W: np.ndarray
    eta: np.ndarray
    bound: np.ndarray
    iterations: int
    converged: bool


def normal_form_m0_picard(u_param, psi, a, b, j=1, panels=None, tol=1e-12, max_iter=200):
    """Solve W'' = (u^2 + psi) W on [a, b] as W_j = exp(+-u xi) + eta_j.

    ``psi`` is a callable or a pair (xi_samples, psi_samples) (interpolated by a
    cubic spline).  j = 1 integrates from the endpoint where Re(u xi) is
    smallest, j = 2 from the other end; the segment must be progressive.
    """
    u = complex(u_param)
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    if not b > a:
        raise ValueError("need a < b")
    if not callable(psi):
        xs, ps = psi
        ps = np.asarray(ps)
        sr = CubicSpline(xs, ps.real)
        si = CubicSpline(xs, ps.imag) if np.iscomplexobj(ps) else None
        psi = (lambda v, sr=sr, si=si: sr(v) + (1j * si(v) if si is not None else 0.0))
    sign = 1.0 if j == 1 else -1.0
    us = sign * u                      # W = exp(us * xi) + eta
    if us.real < 0 or (us.real == 0 and False):
        start_left = False
    else:
        start_left = True
    if abs(us.real) < 1e-300 and u.real == 0:
        start_left = j == 1
    if panels is None:
        panels = max(8, int(math.ceil(abs(u) * (b - a) / 1.0)) + 8)
    edges = np.linspace(a, b, panels + 1)
    if not start_left:
        edges = edges[::-1]
    p = _CHEB_CACHE_P
    # nodes ordered along the path
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = edges[:-1, None] + half[:, None] * (_T_NODES[None, :] + 1.0)
    psiv = np.asarray(psi(nodes), dtype=complex)
    # scaled unknown: eta = exp(us xi) * y, y(start) = 0
    # y(xi) = int_start^xi (1 - exp(-2 us (xi - v)))/(2 us) psi(v) (1 + y(v)) dv
    y = np.zeros_like(psiv)
    e_loc = np.exp(2 * us * (nodes - edges[:-1, None]))        # exp(2us(v - e_k))
    e_panel = np.exp(-2 * us * (edges[1:] - edges[:-1]))      # exp(-2us * panel length)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = psiv * (1.0 + y)
        A_loc = (g @ _S_MAT.T) * half[:, None]                  # int_{e_k}^{node} g
        B_loc = ((g * e_loc) @ _S_MAT.T) * half[:, None]        # int_{e_k}^{node} exp(2us(v-e_k)) g
        A_start = np.concatenate([[0.0], np.cumsum(A_loc[:, -1])[:-1]])
        F = np.zeros(panels, complex)                          # int_start^{e_k} exp(-2us(e_k - v)) g
        for k in range(1, panels):
            F[k] = e_panel[k - 1] * (F[k - 1] + B_loc[k - 1, -1])
        A = A_start[:, None] + A_loc
        Bf = np.exp(-2 * us * (nodes - edges[:-1, None])) * (F[:, None] + B_loc)
        if us == 0:
            raise ValueError("u must be nonzero")
        y_new = (A - Bf) / (2 * us)
        change = np.max(np.abs(y_new - y))
        y = y_new
        if change < tol:
            converged = True
            break
    if not converged and not np.all(np.isfinite(y)):
        raise RuntimeError("Picard iteration diverged")
    xi = nodes.ravel()
    ex = np.exp(us * xi)
    eta = (ex * y.ravel())
    # a-priori bound (exp(int |psi| / |u|) - 1) |exp(us xi)|
    absint = np.concatenate([[0.0], np.cumsum((np.abs(psiv) @ _S_MAT.T)[:, -1] * np.abs(half))[:-1]])
    V = (absint[:, None] + (np.abs(psiv) @ _S_MAT.T) * np.abs(half)[:, None]).ravel()
    bound = (np.exp(V / abs(u)) - 1.0) * np.abs(ex)
    order = np.argsort(xi)
    # drop duplicated panel edges
    xi, eta, bound, ex = xi[order], eta[order], bound[order], ex[order]
    keep = np.concatenate([[True], np.diff(xi) > 1e-15 * max(1.0, abs(b - a))])
    return PicardResult(xi=xi[keep], W=(ex + eta)[keep], eta=eta[keep], bound=bound[keep],
                        iterations=it, converged=converged)

"""Steady strong-detonation (ZND) profile.

The reaction zone is reduced to algebra in the progress variable: the
conserved fluxes fix (v, u, S) as functions of lambda, and lambda(x)
follows from the scalar rate equation lambda_x = r/u.  Position is
recovered by quadrature in tau = -log(lambda/lambda0).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline

from . import thermo
from .thermo import GasModel


class ProfileError(ValueError):
    """Raised when no strong-detonation profile exists for the inputs."""


@dataclass(frozen=True)
class ShockSetup:
    """Upstream state (lambda = 1) and detonation speed.

    Exactly one of ``det_speed`` and ``overdrive`` is used; ``det_speed``
    wins when both are given.
    """
    v_minus: float = 1.0
    p_minus: float = 1.0
    overdrive: float | None = 1.2
    det_speed: float | None = None

    def to_dict(self) -> dict:
        return {"v_minus": self.v_minus, "p_minus": self.p_minus,
                "overdrive": self.overdrive, "det_speed": self.det_speed}


@dataclass
class LocalState:
    """Profile quantities at given lambda (arrays), with lambda-derivatives.

    Suffix ``_l`` denotes d/dlambda, suffix ``_x`` denotes d/dx.
    """
    lam: np.ndarray
    v: np.ndarray
    u: np.ndarray
    S: np.ndarray
    p: np.ndarray
    T: np.ndarray
    c0sq: np.ndarray
    v_l: np.ndarray
    u_l: np.ndarray
    S_l: np.ndarray
    p_l: np.ndarray
    T_l: np.ndarray
    c0sq_l: np.ndarray
    lam_x: np.ndarray

    @property
    def eta(self):
        return 1.0 - self.u**2 / self.c0sq

    @property
    def kappa(self):
        return self.u / np.sqrt(self.c0sq)

    @property
    def c0sq_eta(self):
        return self.c0sq - self.u**2

    def dx(self, f_l):
        """Chain rule f' = lambda_x * df/dlambda."""
        return self.lam_x * f_l


def _flux_constants(g: GasModel, v_minus, p_minus, D):
    G = g.gamma / (g.gamma - 1.0)
    m = D / v_minus
    mom = p_minus + m * m * v_minus
    H = G * p_minus * v_minus + 0.5 * (m * v_minus) ** 2 + g.q_release * 1.0
    a = m * m * (0.5 - G)
    b = G * mom
    return m, mom, H, a, b


def _discriminant(g, v_minus, p_minus, D, lam):
    m, mom, H, a, b = _flux_constants(g, v_minus, p_minus, D)
    c = g.q_release * lam - H
    return b * b - 4.0 * a * c


def _roots(a, b, c):
    """Both roots (small, large) of a v^2 + b v + c = 0 with a < 0 < b."""
    disc = b * b - 4.0 * a * c
    if np.any(disc < 0):
        raise ProfileError(f"negative discriminant {np.min(disc):.3e}: no real state")
    big = (-b - np.sqrt(disc)) / (2.0 * a)
    small = c / (a * big)
    return small, big


def upstream_sound_speed(g: GasModel, v_minus=1.0, p_minus=1.0):
    return np.sqrt(g.gamma * p_minus * v_minus)


def cj_speed(g: GasModel, v_minus=1.0, p_minus=1.0, rtol=1e-10):
    """Chapman-Jouguet speed: smallest D with a real burned (lambda=0) state."""
    c0 = upstream_sound_speed(g, v_minus, p_minus)
    if g.q_release == 0:
        return float(c0)
    f = lambda D: _discriminant(g, v_minus, p_minus, D, 0.0)
    lo, hi = c0, 2.0 * c0
    k = 0
    while f(hi) <= 0:
        hi *= 2.0
        k += 1
        if k > 200:
            raise ProfileError("could not bracket the CJ speed")
    return float(optimize.brentq(f, lo, hi, xtol=1e-15, rtol=rtol * 1e-2, maxiter=500))


def rankine_hugoniot_vn(g: GasModel, setup: ShockSetup):
    """Post-shock (von Neumann) state with lambda frozen at 1.

    Returns (v_plus, u_plus, S_plus, p_plus).
    """
    D = detonation_speed(g, setup)
    m, mom, H, a, b = _flux_constants(g, setup.v_minus, setup.p_minus, D)
    small, big = _roots(a, b, g.q_release - H)
    v = float(small)
    p = mom - m * m * v
    if not p > 0:
        raise ProfileError("non-physical post-shock pressure")
    u = m * v
    T = p * v / g.R_gas
    if u * u >= g.gamma * p * v:
        raise ProfileError("post-shock flow is not subsonic")
    return v, u, float(thermo.entropy(g, v, T)), p


def detonation_speed(g: GasModel, setup: ShockSetup) -> float:
    if setup.det_speed is not None:
        D = float(setup.det_speed)
    else:
        if setup.overdrive is None or not setup.overdrive > 1:
            raise ProfileError("overdrive f = (D/D_CJ)^2 must exceed 1")
        D = cj_speed(g, setup.v_minus, setup.p_minus) * np.sqrt(setup.overdrive)
    c0 = upstream_sound_speed(g, setup.v_minus, setup.p_minus)
    if not D > c0:
        raise ProfileError("upstream flow must be supersonic (D > c0-)")
    return D


class ProfileRep:
    """Steady profile P(x) = (v, u, S, lambda) for x > 0."""

    def __init__(self, g: GasModel, setup: ShockSetup | None = None,
                 tau_max: float = 90.0, dtau: float = 0.01):
        self.g = g
        self.setup = setup or ShockSetup()
        self.D = detonation_speed(g, self.setup)
        self.v_minus = self.setup.v_minus
        self.p_minus = self.setup.p_minus
        self.u_minus = self.D
        self.S_minus = float(thermo.entropy(g, self.v_minus, self.p_minus * self.v_minus / g.R_gas))
        (self.m, self.mom, self.H, self._a, self._b) = _flux_constants(
            g, self.v_minus, self.p_minus, self.D)
        self.lambda0 = 1.0
        d0 = _discriminant(g, self.v_minus, self.p_minus, self.D, 0.0)
        if d0 <= 0:
            raise ProfileError("speed below CJ: burned state is not real")
        self.vn = rankine_hugoniot_vn(g, self.setup)
        self.plus = self.local(1.0)
        self.end = self.local(0.0)
        k = self.plus.kappa
        if not (np.all(self.local(np.linspace(0, 1, 257)).kappa < 1 - 1e-6)):
            raise ProfileError("reaction zone is not subsonic")
        del k
        self.mu = float(-self.rate_H(0.0))
        self._build_table(tau_max, dtau)

    # algebra in lambda -------------------------------------------------
    def v_of_lambda(self, lam):
        lam = np.asarray(lam, dtype=float)
        small, _ = _roots(self._a, self._b, self.g.q_release * lam - self.H)
        return small

    def local(self, lam) -> LocalState:
        """Profile state and lambda-derivatives at ``lam`` (scalar or array)."""
        g = self.g
        lam = np.asarray(lam, dtype=float)
        v = self.v_of_lambda(lam)
        m = self.m
        p = self.mom - m * m * v
        T = p * v / g.R_gas
        S = thermo.entropy(g, v, T)
        u = m * v
        v_l = -g.q_release / (2.0 * self._a * v + self._b)
        p_l = -m * m * v_l
        T_l = (p_l * v + p * v_l) / g.R_gas
        S_l = g.c_v * T_l / T + g.R_gas * v_l / v
        c0sq = g.gamma * p * v
        c0sq_l = g.gamma * (p_l * v + p * v_l)
        r = thermo.rate(g, v, S, lam)[0]
        return LocalState(lam=lam, v=v, u=u, S=S, p=p, T=T, c0sq=c0sq,
                          v_l=v_l, u_l=m * v_l, S_l=S_l, p_l=p_l, T_l=T_l,
                          c0sq_l=c0sq_l, lam_x=r / u)

    def state_of_lambda(self, lam):
        """(v, u, S) on the subsonic branch."""
        lam = np.asarray(lam, dtype=float)
        if np.any(lam < 0) or np.any(lam > self.lambda0):
            raise ProfileError("lambda outside [0, lambda0]")
        st = self.local(lam)
        return st.v, st.u, st.S

    def rate_H(self, lam):
        """H(lambda) = r/(lambda u) = -k exp(-E/RT)/u (finite at lambda=0)."""
        g = self.g
        v = self.v_of_lambda(lam)
        p = self.mom - self.m**2 * v
        T = p * v / g.R_gas
        return -g.k_rate * np.exp(-g.E_act / (g.R_gas * T)) / (self.m * v)

    def flux_residual(self, lam):
        """Relative deviation of (m, mom, H) from their shock values."""
        st = self.local(lam)
        g = self.g
        e = thermo.internal_energy(g, st.v, st.S, lam)
        H = e + st.p * st.v + 0.5 * st.u**2
        mom = st.p + self.m**2 * st.v
        return (np.abs(st.u / st.v - self.m) / self.m,
                np.abs(mom - self.mom) / self.mom,
                np.abs(H - self.H) / self.H)

    # x <-> lambda --------------------------------------------------------
    def _build_table(self, tau_max, dtau):
        n = int(round(tau_max / dtau))
        tau = np.linspace(0.0, tau_max, n + 1)
        xg, wg = np.polynomial.legendre.leggauss(8)
        a, b = tau[:-1], tau[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid[:, None] + half[:, None] * xg[None, :]
        f = 1.0 / (-self.rate_H(self.lambda0 * np.exp(-nodes)))
        panel = half * (f * wg[None, :]).sum(axis=1)
        x = np.concatenate([[0.0], np.cumsum(panel)])
        dtaudx = -self.rate_H(self.lambda0 * np.exp(-tau))
        self._tau_tab = tau
        self._x_tab = x
        self._tau_of_x = CubicHermiteSpline(x, tau, dtaudx)
        self._x_end = x[-1]
        self._tau_end = tau[-1]

    def tau_of_x(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ProfileError("x must be non-negative")
        out = np.where(x <= self._x_end, self._tau_of_x(np.minimum(x, self._x_end)),
                       self._tau_end + self.mu * (x - self._x_end))
        return out

    def lambda_of_x(self, x):
        return self.lambda0 * np.exp(-self.tau_of_x(x))

    def x_of_lambda(self, lam, epsabs=1e-13, epsrel=1e-12):
        """x(lambda) by adaptive quadrature; lambda = 0 maps to +inf."""
        lam = float(lam)
        if not 0 <= lam <= self.lambda0:
            raise ProfileError("lambda outside [0, lambda0]")
        if lam == 0.0:
            return np.inf
        tau = -np.log(lam / self.lambda0)
        f = lambda t: 1.0 / (-self.rate_H(self.lambda0 * np.exp(-t)))
        val, _ = integrate.quad(f, 0.0, tau, epsabs=epsabs, epsrel=epsrel, limit=500)
        return val

    def at_x(self, x) -> LocalState:
        return self.local(self.lambda_of_x(x))

    # derived scalars ---------------------------------------------------
    @property
    def x_max_default(self) -> float:
        return max(30.0 / self.mu, 30.0)

    def decay_rate(self) -> float:
        """mu = k exp(-E/R T_inf)/u_inf."""
        return self.mu

    def fitted_decay_rate(self, x_lo=None, x_hi=None, n=200):
        x_lo = 10.0 / self.mu if x_lo is None else x_lo
        x_hi = 20.0 / self.mu if x_hi is None else x_hi
        x = np.linspace(x_lo, x_hi, n)
        lam = np.array([self.lambda_of_x(xi) for xi in x])
        return -np.polyfit(x, np.log(lam), 1)[0]

    def type_classify(self, n=512, warn=True) -> str:
        """'TypeD', 'TypeI' or 'Mixed' from the sign of d/dx (c0^2 - u^2)."""
        lam = np.arange(1, n + 1) / n * self.lambda0
        st = self.local(lam)
        val = st.dx(st.c0sq_l - 2.0 * st.u * st.u_l)
        scale = np.max(np.abs(st.c0sq_eta)) * self.mu
        if np.any(np.abs(val) < 1e-12 * scale):
            if warn:
                warnings.warn("degenerate profile: d/dx(c0^2-u^2) vanishes", RuntimeWarning)
            return "Mixed"
        if np.all(val < 0):
            return "TypeD"
        if np.all(val > 0):
            return "TypeI"
        return "Mixed"

    def c0_sqrt_eta_range(self):
        """(c0 sqrt(eta) at x=inf, at x=0)."""
        return float(np.sqrt(self.end.c0sq_eta)), float(np.sqrt(self.plus.c0sq_eta))

    def dump(self, x):
        """Columns x, lambda, v, u, S, p, T, c0, c0^2-u^2."""
        x = np.asarray(x, dtype=float)
        st = self.at_x(x)
        return np.column_stack([x, st.lam, st.v, st.u, st.S, st.p, st.T,
                                np.sqrt(st.c0sq), st.c0sq_eta])

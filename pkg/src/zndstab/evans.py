"""Decaying solution of the linearized system and the stability function V.

The decaying solution is integrated backwards from X_max to 0 in the gauge
theta = exp(int mu_1/h) theta~, so theta~ stays O(1) up to slow drift which is
removed by renormalization (tracked in ``log_scale``).  Many frequencies are
advanced together with a shared adaptive Dormand-Prince 5(4) step.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linsys as L
from .profile import ProfileRep


class EvansError(RuntimeError):
    pass


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class JumpData:
    v_minus: float
    v_plus: float
    u_minus: float
    u_plus: float
    T_plus: float
    eta_plus: float
    kappa_plus: float
    c0sq_eta_plus: float
    p_S_plus: float
    m: float
    g_plus: float
    chi_v: float
    ell_plus: float
    h_t: np.ndarray
    h_y3: float
    P_plus: np.ndarray

    @property
    def h_y(self):
        out = np.zeros(5)
        out[2] = self.h_y3
        return out


def jump_data(rep: ProfileRep) -> JumpData:
    st = rep.plus
    c = L.coeffs_from_lambda(rep, 1.0, x=0.0)
    vm, vp = rep.v_minus, float(st.v)
    Tp, etap = float(st.T), float(st.eta)
    pSp = float(c.p_S[0])
    m = rep.m
    gp = Tp - 0.5 * (vm - vp) * pSp
    chi = vp / vm
    ell = 2.0 - (1.0 - etap) * (1.0 - chi) * vm * pSp / Tp
    ht = (vm - vp) / (vm * Tp * etap) * np.array(
        [2.0 * (1.0 - etap) * gp / m, Tp * etap + 2.0 * (1.0 - etap) * gp, 0.0,
         -m * (vm - vp) * etap, 0.0])
    P_plus = np.array([vp, float(st.u), 0.0, float(st.S), rep.lambda0])
    return JumpData(v_minus=vm, v_plus=vp, u_minus=rep.u_minus, u_plus=float(st.u),
                    T_plus=Tp, eta_plus=etap, kappa_plus=float(st.kappa),
                    c0sq_eta_plus=float(st.c0sq_eta), p_S_plus=pSp, m=m, g_plus=gp,
                    chi_v=chi, ell_plus=ell, h_t=ht, h_y3=m * (vm - vp), P_plus=P_plus)


def L1(jd: JumpData, zeta):
    """Von Neumann function L1(zeta)."""
    zeta = np.asarray(zeta, dtype=complex)
    s = L.s_branch(zeta, jd.c0sq_eta_plus)
    up, um, eta, kap = jd.u_plus, jd.u_minus, jd.eta_plus, jd.kappa_plus
    return -um * (1.0 - jd.chi_v) / eta * (
        jd.ell_plus * zeta * (zeta + kap * s) / (up * um) + eta * (1.0 - zeta**2 / (up * um)))


def stability_V(jd: JumpData, theta0, zeta, h):
    """V = theta0.P(0+) - theta0.(zeta h_t + i h_y)/h with bilinear dots."""
    theta0 = np.asarray(theta0, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    h = np.asarray(h, dtype=float)
    w = zeta[..., None] * jd.h_t + 1j * jd.h_y
    return theta0 @ jd.P_plus - np.sum(theta0 * w, axis=-1) / h


def type_theta1_residual(theta0, T1):
    """min_c |c theta0 - T1| / |T1|."""
    theta0 = np.asarray(theta0, dtype=complex)
    T1 = np.asarray(T1, dtype=complex)
    n0 = np.sum(np.abs(theta0) ** 2, axis=-1)
    n1 = np.sum(np.abs(T1) ** 2, axis=-1)
    if np.any(n0 == 0) or np.any(n1 == 0):
        raise ValueError("zero vector in residual")
    c = np.sum(np.conj(theta0) * T1, axis=-1) / n0
    r = c[..., None] * theta0 - T1
    return np.sqrt(np.sum(np.abs(r) ** 2, axis=-1) / n1)


def limiting_mu1_vector(rep: ProfileRep, zeta, h, c_inf=None, iters=10, tol=1e-12):
    """Eigenpair of G(inf) = Phi0(inf) + h Phi1(inf) continuing (mu_1, T_1).

    Shifted inverse iteration from the unperturbed pair; returns (mu, e) with
    e normalized to unit length.
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    h = np.broadcast_to(np.asarray(h, dtype=float), zeta.shape)
    c = c_inf if c_inf is not None else L.coeffs(rep, np.inf)
    sd = L.spectral_data(c, zeta)
    mu = sd.mu[..., 0].copy()
    e = sd.T[..., :, 0].copy()
    e /= np.linalg.norm(e, axis=-1, keepdims=True)
    G = L.phi0_closed_form(c, zeta) + h[..., None, None] * L.phi1(c)
    eye = np.eye(5)
    scale = np.linalg.norm(G, axis=(-2, -1))
    for _ in range(iters):
        res = np.linalg.norm(np.einsum("...ij,...j->...i", G, e) - mu[..., None] * e, axis=-1)
        if np.all(res <= tol * scale):
            break
        shift = mu + 1e-13 * scale
        with np.errstate(all="ignore"):
            try:
                y = np.linalg.solve(G - shift[..., None, None] * eye, e[..., None])[..., 0]
            except np.linalg.LinAlgError:
                break
        ok = np.all(np.isfinite(y), axis=-1) & (np.linalg.norm(y, axis=-1) > 0)
        y = np.where(ok[..., None], y, e)
        y /= np.linalg.norm(y, axis=-1, keepdims=True)
        Gy = np.einsum("...ij,...j->...i", G, y)
        mu_new = np.sum(np.conj(y) * Gy, axis=-1)
        # keep the continuation close to mu_1 (guard against jumping branches)
        jump = np.abs(mu_new - sd.mu[..., 0]) > 0.5 * np.abs(sd.mu[..., 1] - sd.mu[..., 0]) + 10 * h * scale
        e = np.where(jump[..., None], e, y)
        mu = np.where(jump, mu, mu_new)
    res = np.linalg.norm(np.einsum("...ij,...j->...i", G, e) - mu[..., None] * e, axis=-1)
    return mu, e, res / scale


@dataclass
class EvansResult:
    zeta: complex
    h: float
    theta0: np.ndarray
    log_scale: complex
    V: complex
    L1: complex
    theta1_residual: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "zeta": [self.zeta.real, self.zeta.imag], "h": self.h,
            "theta0": [[z.real, z.imag] for z in self.theta0],
            "log_scale": [self.log_scale.real, self.log_scale.imag],
            "V": [self.V.real, self.V.imag], "abs_V": abs(self.V),
            "L1": [self.L1.real, self.L1.imag], "abs_L1": abs(self.L1),
            "theta1_residual": self.theta1_residual, "diagnostics": self.diagnostics,
        }


class EvansSolver:
    """Backward integration of the gauge-removed system for many (zeta, h)."""

    def __init__(self, rep: ProfileRep, X_max: float | None = None, rtol: float = 1e-10,
                 atol: float = 1e-13, max_steps: int = 2_000_000):
        self.rep = rep
        self.X_max = rep.x_max_default if X_max is None else float(X_max)
        self.rtol = rtol
        self.atol = atol
        self.max_steps = max_steps
        self.c_inf = L.coeffs(rep, np.inf)
        self.jd = jump_data(rep)
        self.c_0 = L.coeffs_from_lambda(rep, rep.lambda0, x=0.0)

    # coefficient bundle at a set of x
    def _parts(self, x):
        c = L.coeffs(self.rep, x)
        M1, M2 = L.phi0_split(c)
        F1 = L.phi1(c)
        return M1, M2, F1, c

    @staticmethod
    def _rhs(M1, M2, F1, c, k, zeta, h, Y, gauge):
        GY = (zeta[:, None] * (Y @ M1[k].T) + Y @ M2[k].T + h[:, None] * (Y @ F1[k].T))
        if gauge:
            s = L.s_branch(zeta, c.c0sq_eta[k])
            kap, eta, u = c.kappa[k], c.eta[k], c.u[k]
            mu1 = -kap * (kap * zeta + s) / (eta * u)
            GY = GY - mu1[:, None] * Y
        return GY / h[:, None]

    def integrate(self, zeta, h, Y0, x_start, x_end, x_out=(), gauge=True):
        """Integrate theta~' = (G - mu1 I) theta~ / h from x_start to x_end.

        Returns (Y_end, log_scale, samples, stats) where samples maps each
        x in x_out to the (normalized) states there.
        """
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        h = np.broadcast_to(np.asarray(h, dtype=float), zeta.shape).copy()
        Y = np.array(Y0, dtype=complex).reshape(zeta.shape + (5,))
        logs = np.zeros(zeta.shape, complex)
        direction = 1.0 if x_end > x_start else -1.0
        span = abs(x_end - x_start)
        stops = sorted({float(xo) for xo in x_out if min(x_start, x_end) <= xo <= max(x_start, x_end)},
                       key=lambda xo: direction * xo)
        stops = [xo for xo in stops if xo != x_start] + [x_end]
        samples = {}
        if x_start in [float(xo) for xo in x_out]:
            samples[float(x_start)] = (Y.copy(), logs.copy())
        # initial step from the stiffest scale
        c0 = self._parts(np.array([x_start]))[3]
        scale = np.max((np.abs(zeta) + np.sqrt(c0.c0sq[0]) + 1.0) / (c0.u[0] * c0.eta[0] * h))
        dt = min(0.05 / scale, span)
        x = float(x_start)
        nstep = nrej = nrenorm = 0
        target_i = 0
        K = np.empty((7,) + Y.shape, complex)
        have_k0 = False
        while target_i < len(stops):
            target = stops[target_i]
            rem = abs(target - x)
            if rem <= 1e-14 * max(1.0, abs(x)):
                x = target
                samples[target] = (Y.copy(), logs.copy())
                target_i += 1
                continue
            last = dt >= rem
            step = rem if last else dt
            xs = x + direction * step * _C
            M1, M2, F1, c = self._parts(xs)
            if not have_k0:
                K[0] = self._rhs(M1, M2, F1, c, 0, zeta, h, Y, gauge)
            for i in range(1, 7):
                Yi = Y + (direction * step) * sum(a * K[j] for j, a in enumerate(_A[i]) if a != 0.0)
                K[i] = self._rhs(M1, M2, F1, c, i, zeta, h, Yi, gauge)
            Ynew = Y + (direction * step) * np.tensordot(_B5, K, axes=(0, 0))
            Err = (direction * step) * np.tensordot(_E, K, axes=(0, 0))
            sc = self.atol + self.rtol * np.maximum(np.linalg.norm(Y, axis=-1), np.linalg.norm(Ynew, axis=-1))
            err = np.linalg.norm(Err, axis=-1) / sc
            emax = float(np.max(err)) if err.size else 0.0
            if not np.isfinite(emax):
                emax = 1e10
            nstep += 1
            if nstep > self.max_steps:
                raise EvansError("step limit exceeded")
            if emax <= 1.0:
                x = target if last else x + direction * step
                Y = Ynew
                K[0] = K[6]
                have_k0 = True
                nrm = np.linalg.norm(Y, axis=-1)
                bad = (nrm < 1e-3) | (nrm > 1e3)
                if np.any(bad):
                    nrenorm += int(np.sum(bad))
                    f = np.where(bad, nrm, 1.0)
                    Y = Y / f[:, None]
                    K[0] = K[0] / f[:, None]
                    logs = logs + np.log(f)
                fac = 5.0 if emax == 0 else min(5.0, 0.9 * emax ** -0.2)
                if last:
                    samples[target] = (Y.copy(), logs.copy())
                    target_i += 1
                    dt = max(dt, step) * fac if not last else dt
                else:
                    dt = step * fac
            else:
                nrej += 1
                have_k0 = have_k0  # K[0] still valid at unchanged x
                dt = step * max(0.2, 0.9 * emax ** -0.2)
                if dt < 1e-14 * max(1.0, span):
                    raise EvansError("step size underflow")
        stats = {"steps": nstep, "rejected": nrej, "renormalizations": nrenorm}
        return Y, logs, samples, stats

    def initial_vector(self, zeta, h):
        mu, e, res = limiting_mu1_vector(self.rep, zeta, h, c_inf=self.c_inf)
        return e, res

    def decaying(self, zeta, h, x_out=()):
        """theta~(0) for each (zeta, h), normalized, plus bookkeeping."""
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        if np.any(zeta.real < 0):
            raise EvansError("Re zeta must be non-negative")
        h = np.broadcast_to(np.asarray(h, dtype=float), zeta.shape)
        if np.any(h <= 0):
            raise EvansError("h must be positive")
        e, res = self.initial_vector(zeta, h)
        Y, logs, samples, stats = self.integrate(zeta, h, e, self.X_max, 0.0, x_out=x_out)
        nrm = np.linalg.norm(Y, axis=-1)
        Y = Y / nrm[:, None]
        logs = logs + np.log(nrm)
        stats["init_residual"] = float(np.max(res))
        return Y, logs, samples, stats

    def T1_at_0(self, zeta):
        return L.spectral_data(self.c_0, np.atleast_1d(zeta)).T[..., :, 0]

    def turning_proximity(self, zeta):
        """min over x of |s(x, zeta)|.

        c0^2 eta sweeps the real interval [w_lo, w_hi], so the minimum is the
        distance from -zeta^2 to that interval (square-rooted).
        """
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        w_inf, w_0 = self.rep.c0_sqrt_eta_range()
        lo, hi = sorted((w_inf**2, w_0**2))
        t = -(zeta * zeta)
        d = np.abs(t - np.clip(t.real, lo, hi))
        return np.sqrt(d)

    def evaluate(self, zeta, h):
        """EvansResult list for arrays of (zeta, h)."""
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        h = np.broadcast_to(np.asarray(h, dtype=float), zeta.shape)
        Y, logs, _, stats = self.decaying(zeta, h)
        T1 = self.T1_at_0(zeta)
        res = type_theta1_residual(Y, T1)
        V = stability_V(self.jd, Y, zeta, h)
        l1 = L1(self.jd, zeta)
        prox = self.turning_proximity(zeta)
        out = []
        for i in range(zeta.size):
            diag = dict(stats)
            if prox[i] < 1e-3:
                diag["warning"] = "turning point proximity: min|s| = %.2e" % prox[i]
            out.append(EvansResult(zeta=complex(zeta[i]), h=float(h[i]), theta0=Y[i],
                                   log_scale=complex(logs[i]), V=complex(V[i]), L1=complex(l1[i]),
                                   theta1_residual=float(res[i]), diagnostics=diag))
        return out


def decaying_solution(rep: ProfileRep, zeta, h, X_max=None, rtol=1e-10, x_out=()):
    solver = EvansSolver(rep, X_max=X_max, rtol=rtol)
    return solver.decaying(zeta, h, x_out=x_out)


def evans(rep: ProfileRep, zeta, h, X_max=None, rtol=1e-10) -> EvansResult:
    return EvansSolver(rep, X_max=X_max, rtol=rtol).evaluate(zeta, h)[0]

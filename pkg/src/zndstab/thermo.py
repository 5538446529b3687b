"""Ideal polytropic reacting gas with one-step Arrhenius kinetics.

State variables are specific volume ``v``, entropy ``S`` and reactant mass
fraction ``lam``.  All functions broadcast over numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np


class ThermoDomainError(ValueError):
    """Raised for non-physical thermodynamic states (v <= 0, lambda outside [0,1])."""


@dataclass(frozen=True)
class GasModel:
    gamma: float = 1.2
    q_release: float = 1.0
    E_act: float = 2.45
    k_rate: float = 6.0
    R_gas: float = 1.0
    S_ref: float = 0.0
    T_ref: float = 1.0
    v_ref: float = 1.0
    c_v: float = field(init=False)

    def __post_init__(self):
        if not self.gamma > 1:
            raise ThermoDomainError("gamma must exceed 1")
        if not self.k_rate > 0:
            raise ThermoDomainError("k_rate must be positive")
        if self.q_release < 0:
            raise ThermoDomainError("q_release must be non-negative")
        if self.T_ref <= 0 or self.v_ref <= 0:
            raise ThermoDomainError("reference state must be positive")
        object.__setattr__(self, "c_v", self.R_gas / (self.gamma - 1.0))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("c_v")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GasModel":
        d = {k: v for k, v in d.items() if k != "c_v"}
        return cls(**d)


@dataclass(frozen=True)
class ThermoState:
    v: float
    S: float
    lam: float

    def __post_init__(self):
        _check(self.v, self.lam)


def _check(v, lam=None):
    if np.any(np.asarray(v) <= 0):
        raise ThermoDomainError("specific volume must be positive")
    if lam is not None:
        lam = np.asarray(lam)
        if np.any(lam < 0) or np.any(lam > 1):
            raise ThermoDomainError("lambda must lie in [0, 1]")


def temperature(g: GasModel, v, S):
    """T = T_ref (v_ref/v)^(gamma-1) exp((S-S_ref)/c_v)."""
    _check(v)
    return g.T_ref * (g.v_ref / v) ** (g.gamma - 1.0) * np.exp((S - g.S_ref) / g.c_v)


def entropy(g: GasModel, v, T):
    """Inverse of :func:`temperature` in S."""
    _check(v)
    return g.S_ref + g.c_v * np.log(T / g.T_ref) + g.R_gas * np.log(v / g.v_ref)


def pressure(g: GasModel, v, S, lam=0.0):
    """Return (p, p_v, p_S, p_lambda)."""
    T = temperature(g, v, S)
    p = g.R_gas * T / v
    p_v = -g.gamma * p / v
    p_S = p / g.c_v
    return p, p_v, p_S, np.zeros_like(p)


def sound_speed_sq(g: GasModel, v, S, lam=0.0):
    """c0^2 = -v^2 p_v = gamma p v."""
    p = pressure(g, v, S)[0]
    return g.gamma * p * v


def rate(g: GasModel, v, S, lam):
    """Arrhenius rate r = -k lam exp(-E/RT) and partials (r, r_v, r_S, r_lambda)."""
    _check(v, lam)
    T = temperature(g, v, S)
    ex = np.exp(-g.E_act / (g.R_gas * T))
    r = -g.k_rate * lam * ex
    r_lam = -g.k_rate * ex
    dlogr_dT = g.E_act / (g.R_gas * T * T)
    T_v = -(g.gamma - 1.0) * T / v
    T_S = T / g.c_v
    return r, r * dlogr_dT * T_v, r * dlogr_dT * T_S, r_lam


def entropy_source(g: GasModel, v, S, lam):
    """Phi = -r q / T and partials (Phi, Phi_v, Phi_S, Phi_lambda).

    The free-energy jump is taken constant and equal to the heat release.
    """
    T = temperature(g, v, S)
    r, r_v, r_S, r_lam = rate(g, v, S, lam)
    q = g.q_release
    T_v = -(g.gamma - 1.0) * T / v
    T_S = T / g.c_v
    phi = -r * q / T
    phi_v = -q * (r_v / T - r * T_v / T**2)
    phi_S = -q * (r_S / T - r * T_S / T**2)
    phi_lam = -q * r_lam / T
    return phi, phi_v, phi_S, phi_lam


def internal_energy(g: GasModel, v, S, lam=0.0):
    """Thermal plus chemical energy e = c_v T + q lam."""
    return g.c_v * temperature(g, v, S) + g.q_release * lam

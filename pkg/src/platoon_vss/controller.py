"""Distributed adaptive backstepping controller.

Three-step design: a proportional virtual velocity law, an H-inverse coupled
virtual acceleration law with a disturbance estimate, and the actual control
law.  Two estimator ODEs track the lumped mismatched and input-channel
disturbances; a regularized sign map replaces the exact unit-vector map near
the origin.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .dynamics import VehicleParams, _drift
from .errors import ValidationError
from .topology import Topology

DEFAULT_SGN_DEADZONE = 1e-9


@dataclass(frozen=True)
class ControllerConfig:
    """Diagonal gain vectors and adaptive scalars.

    k2 must elementwise dominate k1 so the second backstepping gain
    K2 - K1 is positive definite.
    """

    k1: np.ndarray
    k2: np.ndarray
    k3: np.ndarray
    eps1: float = 100.0
    eps2: float = 50.0
    kappa1: float = 0.5
    kappa2: float = 0.5
    sgn_deadzone: float = DEFAULT_SGN_DEADZONE
    adaptive_enabled: bool = True

    def __post_init__(self):
        for name in ("k1", "k2", "k3"):
            vec = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if np.any(vec <= 0):
                raise ValidationError(f"gain {name} must be strictly positive")
            object.__setattr__(self, name, vec)
        if self.k1.shape != self.k2.shape or self.k2.shape != self.k3.shape:
            raise ValidationError("k1, k2, k3 must share one length")
        if np.any(self.k2 <= self.k1):
            raise ValidationError("k2 must exceed k1 elementwise (K2 - K1 > 0)")
        for name in ("eps1", "eps2", "kappa1", "kappa2"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"adaptive scalar {name} must be > 0")
        if self.sgn_deadzone < 0:
            raise ValidationError("sgn_deadzone must be >= 0")

    @classmethod
    def from_scalars(cls, k1, k2, k3, n, **kwargs) -> "ControllerConfig":
        ones = np.ones(n)
        return cls(k1=k1 * ones, k2=k2 * ones, k3=k3 * ones, **kwargs)

    @property
    def n(self) -> int:
        return self.k1.size


@dataclass
class AdaptiveState:
    """Estimator states for the lumped disturbances; zero-initialized."""

    dv_hat: np.ndarray
    da_hat: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "AdaptiveState":
        return cls(dv_hat=np.zeros(n), da_hat=np.zeros(n))


@njit(cache=True)
def _signed_direction(w, deadzone):
    out = np.zeros_like(w)
    norm = np.sqrt(np.sum(w * w))
    if norm > deadzone:
        out[:] = w / norm
    return out


def signed_direction(w, deadzone: float = DEFAULT_SGN_DEADZONE) -> np.ndarray:
    """Unit vector w/|w| (Euclidean), zero inside the deadzone radius."""
    return _signed_direction(np.asarray(w, dtype=float), float(deadzone))


def virtual_ev_star(e1, cfg: ControllerConfig) -> np.ndarray:
    """First virtual law: desired velocity error -K1 e1."""
    return -cfg.k1 * np.asarray(e1, dtype=float)


def virtual_ea_star(e2, dv_hat, cfg: ControllerConfig, topo: Topology) -> np.ndarray:
    """Second virtual law: H^-1 (-K2 e2 - dv_hat)."""
    h_inv = topo.require_h_inverse()
    return h_inv @ (-cfg.k2 * np.asarray(e2, dtype=float) - np.asarray(dv_hat, dtype=float))


def adaptive_dv_rate(dv_hat, e2, cfg: ControllerConfig) -> np.ndarray:
    """Estimator ODE for the mismatched-disturbance estimate."""
    if not cfg.adaptive_enabled:
        return np.zeros_like(np.asarray(dv_hat, dtype=float))
    sgn = signed_direction(e2, cfg.sgn_deadzone)
    return -cfg.eps1 * cfg.kappa1 * np.asarray(dv_hat, dtype=float) + cfg.eps1 * sgn


def adaptive_da_rate(da_hat, h_e3, cfg: ControllerConfig, topo: Topology) -> np.ndarray:
    """Estimator ODE for the input-channel disturbance estimate."""
    if not cfg.adaptive_enabled:
        return np.zeros_like(np.asarray(da_hat, dtype=float))
    sgn = signed_direction(h_e3, cfg.sgn_deadzone)
    return -cfg.eps2 * cfg.kappa2 * np.asarray(da_hat, dtype=float) + cfg.eps2 * (topo.h.T @ sgn)


@njit(cache=True)
def _control_u(v, a, e3, dv_hat, da_hat, a0_dot, h, h_inv, k3, m, tau, a_f, rho, c_d, c_r):
    f = _drift(v, a, m, tau, a_f, rho, c_d, c_r)
    inner = -f + a0_dot + h_inv @ (k3 * (h @ e3)) + h_inv @ dv_hat + da_hat
    return (m * tau) * inner


def control_law(
    e2,
    e3,
    dv_hat,
    da_hat,
    v,
    a,
    a0_dot: float,
    cfg: ControllerConfig,
    topo: Topology,
    params: VehicleParams,
) -> np.ndarray:
    """Actual control law.

    u = G^-1 (-F(v, a) + a0_dot 1 + H^-1 K3 H e3 + H^-1 dv_hat + da_hat),
    with G = diag(1 / (m tau)) so G^-1 is the elementwise product m tau.
    Estimates are frozen at zero when the adaptive laws are disabled.
    """
    h_inv = topo.require_h_inverse()
    dv_hat = np.asarray(dv_hat, dtype=float)
    da_hat = np.asarray(da_hat, dtype=float)
    if not cfg.adaptive_enabled:
        dv_hat = np.zeros_like(dv_hat)
        da_hat = np.zeros_like(da_hat)
    return _control_u(
        np.asarray(v, dtype=float),
        np.asarray(a, dtype=float),
        np.asarray(e3, dtype=float),
        dv_hat,
        da_hat,
        float(a0_dot),
        topo.h,
        h_inv,
        cfg.k3,
        params.m,
        params.tau,
        params.a_f,
        params.rho,
        params.c_d,
        params.c_r,
    )


@dataclass(frozen=True)
class GainConditionReport:
    cond_a: bool
    cond_b: bool
    margin_a: float
    margin_b: float

    @property
    def both_hold(self) -> bool:
        return self.cond_a and self.cond_b


def check_gain_conditions(cfg: ControllerConfig) -> GainConditionReport:
    """Decay-rate selection conditions of the certificate.

    cond_a: lambda_min(K2 - K1) <= eps1 kappa1 - 1
    cond_b: lambda_min(K3)      <= eps2 kappa2 - 1
    Margins are rhs - lhs; equality counts as holding.
    """
    lhs_a = float(np.min(cfg.k2 - cfg.k1))
    rhs_a = cfg.eps1 * cfg.kappa1 - 1.0
    lhs_b = float(np.min(cfg.k3))
    rhs_b = cfg.eps2 * cfg.kappa2 - 1.0
    return GainConditionReport(
        cond_a=lhs_a <= rhs_a,
        cond_b=lhs_b <= rhs_b,
        margin_a=rhs_a - lhs_a,
        margin_b=rhs_b - lhs_b,
    )

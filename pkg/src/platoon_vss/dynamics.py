"""Vehicle longitudinal dynamics, leader profile, disturbances and errors.

The follower model is a third-order chain (position, velocity, acceleration)
with a first-order engine lag, aerodynamic drag and rolling resistance.  A
mismatched disturbance d_v enters the velocity equation and an input-channel
disturbance d_a enters the acceleration equation.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    DimensionMismatchError,
    MissingBoundsError,
    NonFiniteError,
    OutOfHorizonError,
    ValidationError,
)
from .topology import Topology

HORIZON_CLAMP = 1e-9  # tolerance for t slightly outside the profile span

DISTURBANCE_KINDS = {"zero": 0, "constant": 1, "sinusoid": 2}


# --------------------------------------------------------------------------
# parameter and state containers


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of one follower; all strictly positive."""

    m: float = 1500.0
    tau: float = 0.2
    a_f: float = 2.2
    rho: float = 0.78
    c_d: float = 0.35
    c_r: float = 0.067

    def __post_init__(self):
        for name in ("m", "tau", "a_f", "rho", "c_d", "c_r"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"vehicle parameter {name} must be > 0")


@dataclass
class LeaderState:
    x0: float
    v0: float
    a0: float


@dataclass
class PlatoonState:
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        if not (self.x.shape == self.v.shape == self.a.shape):
            raise DimensionMismatchError("x, v, a must share one shape")


@dataclass(frozen=True)
class SpacingPolicy:
    """Desired gap policy; offsets[i] = (i+1) * (delta_d + vehicle_length)."""

    delta_d: float = 3.0
    vehicle_length: float = 2.5

    def __post_init__(self):
        if self.delta_d <= 0 or self.vehicle_length <= 0:
            raise ValidationError("delta_d and vehicle_length must be > 0")

    def offsets(self, n: int) -> np.ndarray:
        return (self.delta_d + self.vehicle_length) * np.arange(1, n + 1, dtype=float)


# --------------------------------------------------------------------------
# follower drift / gain


@njit(cache=True)
def _drift(v, a, m, tau, a_f, rho, c_d, c_r):
    q = a_f * rho * c_d
    return -(a + q * v * v / (2.0 * m) + c_r) / tau - q * v * a / m


def drift_f(v, a, params: VehicleParams):
    """Nonlinear acceleration drift f(v, a) [m/s^3]; accepts scalars or arrays."""
    return _drift(
        np.asarray(v, dtype=float),
        np.asarray(a, dtype=float),
        params.m,
        params.tau,
        params.a_f,
        params.rho,
        params.c_d,
        params.c_r,
    )


def gain_g(params: VehicleParams) -> float:
    """Input gain g = 1 / (m * tau)."""
    return 1.0 / (params.m * params.tau)


# --------------------------------------------------------------------------
# leader velocity profile


@njit(cache=True)
def _profile_eval(t, ts, vs):
    # segment lookup by binary scan; t is pre-clamped into [ts[0], ts[-1]]
    i = np.searchsorted(ts, t, side="right") - 1
    if i < 0:
        i = 0
    if i > ts.size - 2:
        i = ts.size - 2
    slope = (vs[i + 1] - vs[i]) / (ts[i + 1] - ts[i])
    return vs[i] + slope * (t - ts[i]), slope


@dataclass(frozen=True)
class LeaderProfile:
    """Piecewise-linear velocity profile; a0 is the active segment slope."""

    times: np.ndarray
    velocities: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        ts = np.asarray(self.times, dtype=float)
        vs = np.asarray(self.velocities, dtype=float)
        if ts.ndim != 1 or ts.shape != vs.shape or ts.size < 2:
            raise ValidationError("profile needs matching (t, v) breakpoint vectors")
        if not np.all(np.diff(ts) > 0):
            raise ValidationError("profile breakpoint times must strictly increase")
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "velocities", vs)

    @classmethod
    def paper(cls) -> "LeaderProfile":
        # 15 m/s, ramp to 25, hold, ramp down to 20, hold (30 s horizon)
        return cls(
            times=np.array([0.0, 5.0, 10.0, 15.0, 20.0, 30.0]),
            velocities=np.array([15.0, 15.0, 25.0, 25.0, 20.0, 20.0]),
            name="paper",
        )

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t: float):
        if t < self.times[0] - HORIZON_CLAMP or t > self.times[-1] + HORIZON_CLAMP:
            raise OutOfHorizonError(
                f"t={t} outside profile span [{self.times[0]}, {self.times[-1]}]"
            )
        t = min(max(t, self.times[0]), self.times[-1])
        return _profile_eval(t, self.times, self.velocities)


def leader_profile(t: float):
    """Paper velocity profile shortcut: (v0, a0) at time t in [0, 30]."""
    return LeaderProfile.paper()(t)


# --------------------------------------------------------------------------
# disturbances


@njit(cache=True)
def _disturbance_eval(t, kind, amp_v, amp_a, omega, phase_v, phase_a):
    n = amp_v.size
    d_v = np.zeros(n)
    d_a = np.zeros(n)
    if kind == 1:
        d_v[:] = amp_v
        d_a[:] = amp_a
    elif kind == 2:
        for i in range(n):
            d_v[i] = amp_v[i] * math.sin(omega * t + phase_v[i])
            d_a[i] = amp_a[i] * math.sin(omega * t + phase_a[i])
    return d_v, d_a


@dataclass(frozen=True)
class DisturbanceModel:
    """Per-vehicle disturbance generator plus declared lumped bounds.

    The lumped bounds cover the Euclidean norm of the stacked signals and
    their time derivatives.  When omitted they default to the sqrt(N)
    stacking of the per-vehicle amplitudes; when given they must dominate
    the analytic supremum of the generated signals.
    """

    kind: str = "sinusoid"
    n: int = 4
    amp_v: float = 20.0
    amp_a: float = 5.0
    omega: float = 1.0
    phase_v: float = 0.0
    phase_a: float = 0.0
    delta_v: float | None = None
    delta_a: float | None = None
    bar_delta_v: float | None = None
    bar_delta_a: float | None = None

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValidationError(f"unknown disturbance kind {self.kind!r}")
        if self.n < 1:
            raise ValidationError("disturbance model needs n >= 1")
        sup_v, sup_a, dsup_v, dsup_a = self._analytic_sups()
        for attr, default in (
            ("delta_v", sup_v),
            ("delta_a", sup_a),
            ("bar_delta_v", dsup_v),
            ("bar_delta_a", dsup_a),
        ):
            val = getattr(self, attr)
            if val is None:
                object.__setattr__(self, attr, default)
            elif val < default - 1e-12:
                raise ValidationError(
                    f"declared bound {attr}={val} below analytic supremum {default}"
                )

    def _analytic_sups(self):
        root_n = math.sqrt(self.n)
        if self.kind == "zero":
            return 0.0, 0.0, 0.0, 0.0
        if self.kind == "constant":
            return (
                root_n * abs(self.amp_v),
                root_n * abs(self.amp_a),
                0.0,
                0.0,
            )
        return (
            root_n * abs(self.amp_v),
            root_n * abs(self.amp_a),
            root_n * abs(self.amp_v) * abs(self.omega),
            root_n * abs(self.amp_a) * abs(self.omega),
        )

    def bounds(self):
        """(delta_v, delta_a, bar_delta_v, bar_delta_a); all must be set."""
        vals = (self.delta_v, self.delta_a, self.bar_delta_v, self.bar_delta_a)
        if any(v is None for v in vals):
            raise MissingBoundsError("disturbance model is missing lumped bounds")
        return vals

    def _kernel_args(self):
        code = DISTURBANCE_KINDS[self.kind]
        amp_v = np.full(self.n, float(self.amp_v))
        amp_a = np.full(self.n, float(self.amp_a))
        phase_v = np.full(self.n, float(self.phase_v))
        phase_a = np.full(self.n, float(self.phase_a))
        return code, amp_v, amp_a, float(self.omega), phase_v, phase_a


def disturbance_at(model: DisturbanceModel, t: float):
    """Per-vehicle disturbance vectors (d_v, d_a) at time t."""
    return _disturbance_eval(float(t), *model._kernel_args())


# --------------------------------------------------------------------------
# synchronization errors and plant derivatives


def sync_errors(
    platoon: PlatoonState,
    leader: LeaderState,
    topo: Topology,
    spacing: SpacingPolicy,
):
    """Graph-coupled tracking errors (e_x, e_v, e_a).

    e_x and e_v are the pinning + neighbor consensus errors; with L 1 = 0
    they reduce to H applied to the leader-relative deviations.  e_a is the
    leader-relative acceleration deviation a0 - a (not topology-filtered).
    """
    if platoon.x.size != topo.n:
        raise DimensionMismatchError(
            f"platoon of size {platoon.x.size} does not match topology n={topo.n}"
        )
    d = spacing.offsets(topo.n)
    e_x = topo.h @ (leader.x0 - platoon.x - d)
    e_v = topo.h @ (leader.v0 - platoon.v)
    e_a = leader.a0 - platoon.a
    return e_x, e_v, e_a


def plant_derivatives(
    platoon: PlatoonState,
    u: np.ndarray,
    d_v: np.ndarray,
    d_a: np.ndarray,
    params: VehicleParams,
) -> PlatoonState:
    """Open-loop derivatives (x_dot, v_dot, a_dot) of the follower states."""
    u = np.asarray(u, dtype=float)
    d_v = np.asarray(d_v, dtype=float)
    d_a = np.asarray(d_a, dtype=float)
    n = platoon.x.size
    if not (u.size == d_v.size == d_a.size == n):
        raise DimensionMismatchError("u, d_v, d_a must match the platoon size")
    stacked = np.concatenate([platoon.x, platoon.v, platoon.a, u, d_v, d_a])
    if not np.isfinite(stacked).all():
        raise NonFiniteError("non-finite value in plant inputs")
    x_dot = platoon.v.copy()
    v_dot = platoon.a + d_v
    a_dot = drift_f(platoon.v, platoon.a, params) + gain_g(params) * u + d_a
    return PlatoonState(x=x_dot, v=v_dot, a=a_dot)


def filtered_disturbances(topo: Topology, d_v: np.ndarray, d_a: np.ndarray):
    """Lumped stacked disturbances (D_v, D_a) of the error dynamics.

    D_v[i] = -P_i d_vi + sum_j A_ij (d_vj - d_vi) = -(H d_v)[i]; D_a = -d_a.
    """
    return -(topo.h @ np.asarray(d_v, dtype=float)), -np.asarray(d_a, dtype=float)

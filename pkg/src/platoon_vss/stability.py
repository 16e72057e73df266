"""Vector-Lyapunov certificate for the closed-loop platoon.

Assembles the 3x3 comparison matrix and input vector from the controller
gains and disturbance bounds, checks the linear small-gain condition
(Metzler + Hurwitz), integrates the comparison system alongside the plant,
and asserts the componentwise domination V(t) <= z(t).
"""

import math
from dataclasses import dataclass

import numpy as np

from .controller import ControllerConfig, GainConditionReport, check_gain_conditions
from .dynamics import DisturbanceModel
from .errors import GridMismatchError, NonSquareError
from .topology import Topology

COMPARISON_TOL_ABS = 1e-3
COMPARISON_TOL_REL = 1e-2


# --------------------------------------------------------------------------
# certificate assembly


def assemble_gamma(cfg: ControllerConfig) -> np.ndarray:
    """Comparison matrix of the three-step Lyapunov chain.

    Rows: [-lmin(K1), 1, 0], [lmax(K1^2), -lmin(K2-K1), 1],
    [0, lmax(K2), -lmin(K3)].  Gains are diagonal so the extremal
    eigenvalues reduce to min/max over the gain entries.
    """
    lmin_k1 = float(np.min(cfg.k1))
    lmax_k1_sq = float(np.max(cfg.k1**2))
    lmin_k2_k1 = float(np.min(cfg.k2 - cfg.k1))
    lmax_k2 = float(np.max(cfg.k2))
    lmin_k3 = float(np.min(cfg.k3))
    return np.array(
        [
            [-lmin_k1, 1.0, 0.0],
            [lmax_k1_sq, -lmin_k2_k1, 1.0],
            [0.0, lmax_k2, -lmin_k3],
        ]
    )


def assemble_b(dist: DisturbanceModel, cfg: ControllerConfig, delta_star: float) -> np.ndarray:
    """Comparison input vector from the lumped disturbance bounds.

    b = [0, kappa1 Dv^2 / 2 + bar_Dv^2 / (2 eps1),
            kappa2 Da^2 / 2 + bar_Da^2 / (2 eps2) + delta_star]
    """
    if delta_star < 0:
        raise ValueError("delta_star must be >= 0")
    delta_v, delta_a, bar_delta_v, bar_delta_a = dist.bounds()
    b1 = 0.5 * cfg.kappa1 * delta_v**2 + bar_delta_v**2 / (2.0 * cfg.eps1)
    b2 = 0.5 * cfg.kappa2 * delta_a**2 + bar_delta_a**2 / (2.0 * cfg.eps2) + delta_star
    return np.array([0.0, b1, b2])


def is_metzler(gamma) -> bool:
    """True iff every off-diagonal entry is nonnegative."""
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise NonSquareError(f"expected a square matrix, got {g.shape}")
    off = g - np.diag(np.diag(g))
    return bool(np.all(off >= 0))


def _routh_hurwitz_3x3(gamma: np.ndarray) -> bool:
    # char. poly of a 3x3: s^3 + a2 s^2 + a1 s + a0
    a2 = -np.trace(gamma)
    a1 = 0.5 * (np.trace(gamma) ** 2 - np.trace(gamma @ gamma))
    a0 = -np.linalg.det(gamma)
    return a2 > 0 and a0 > 0 and a2 * a1 > a0


def is_hurwitz(gamma) -> bool:
    """True iff all eigenvalues have strictly negative real part.

    For 3x3 inputs the eigenvalue test is cross-checked against the
    Routh-Hurwitz criterion; disagreement raises, since it would mean a
    numerically borderline matrix.
    """
    g = np.asarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise NonSquareError(f"expected a square matrix, got {g.shape}")
    by_eig = bool(np.all(np.linalg.eigvals(g).real < 0))
    if g.shape == (3, 3):
        by_routh = _routh_hurwitz_3x3(g)
        if by_routh != by_eig:
            raise ArithmeticError(
                "eigenvalue and Routh-Hurwitz verdicts disagree; matrix is borderline"
            )
    return by_eig


def small_gain_verdict(gamma) -> str:
    """Linear small-gain check: 'certified' iff Metzler and Hurwitz.

    A non-Metzler matrix fails even when Hurwitz, because the comparison
    principle's monotonicity premise is lost.
    """
    if not is_metzler(gamma):
        return "failed(not_metzler)"
    if not is_hurwitz(gamma):
        return "failed(not_hurwitz)"
    return "certified"


@dataclass
class VslfCertificate:
    """Assembled certificate plus the outcomes of all structural checks."""

    gamma: np.ndarray
    b: np.ndarray
    metzler: bool
    hurwitz: bool
    gain_conditions: GainConditionReport
    delta_star_prior: float
    delta_star_estimate: float = 0.0
    b_posthoc: np.ndarray | None = None
    asymmetric_topology: bool = False
    comparison_holds: bool | None = None
    comparison_holds_posthoc: bool | None = None
    verdict: str = "certified"

    @property
    def prior_sufficient(self) -> bool:
        return self.delta_star_estimate <= self.delta_star_prior

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def report_lines(self):
        lines = []
        for i, row in enumerate(self.gamma):
            lines.append(
                f"gamma_row_{i}: {float(row[0])!r} {float(row[1])!r} {float(row[2])!r}"
            )
        lines.append(
            f"b: {float(self.b[0])!r} {float(self.b[1])!r} {float(self.b[2])!r}"
        )
        lines.append(f"metzler: {self.metzler}")
        lines.append(f"hurwitz: {self.hurwitz}")
        lines.append(f"gain_condition_a: {self.gain_conditions.cond_a}")
        lines.append(f"gain_condition_b: {self.gain_conditions.cond_b}")
        lines.append(f"gain_margin_a: {self.gain_conditions.margin_a!r}")
        lines.append(f"gain_margin_b: {self.gain_conditions.margin_b!r}")
        lines.append(f"delta_star_prior: {self.delta_star_prior!r}")
        lines.append(f"delta_star_estimate: {self.delta_star_estimate!r}")
        if self.b_posthoc is not None:
            bp = [float(v) for v in self.b_posthoc]
            lines.append(f"b_posthoc: {bp[0]!r} {bp[1]!r} {bp[2]!r}")
        lines.append(f"asymmetric_topology: {self.asymmetric_topology}")
        if self.comparison_holds is not None:
            lines.append(f"comparison_holds_apriori: {self.comparison_holds}")
            lines.append(f"prior_sufficient: {self.prior_sufficient}")
        if self.comparison_holds_posthoc is not None:
            lines.append(f"comparison_holds_posthoc: {self.comparison_holds_posthoc}")
        lines.append(f"verdict: {self.verdict}")
        return lines


def build_certificate(
    cfg: ControllerConfig,
    dist: DisturbanceModel,
    delta_star_prior: float,
    topo: Topology | None = None,
) -> VslfCertificate:
    """A-priori certificate: structural checks only, no simulation."""
    gamma = assemble_gamma(cfg)
    b = assemble_b(dist, cfg, delta_star_prior)
    metzler = is_metzler(gamma)
    hurwitz = is_hurwitz(gamma)
    gains = check_gain_conditions(cfg)
    asym = bool(topo is not None and not topo.is_symmetric)
    if not metzler:
        verdict = "failed(not_metzler)"
    elif not hurwitz:
        verdict = "failed(not_hurwitz)"
    elif not gains.both_hold:
        verdict = "failed(gain_conditions)"
    else:
        verdict = "certified"
    return VslfCertificate(
        gamma=gamma,
        b=b,
        metzler=metzler,
        hurwitz=hurwitz,
        gain_conditions=gains,
        delta_star_prior=delta_star_prior,
        asymmetric_topology=asym,
        verdict=verdict,
    )


# --------------------------------------------------------------------------
# VSLF evaluation and comparison-system integration


@dataclass
class VslfSample:
    t: float
    v1: float
    v2: float
    v3: float
    z: np.ndarray


def vslf_eval(e1, e2, e3, dv_tilde, da_tilde, cfg: ControllerConfig, topo: Topology):
    """VSLF components (V1, V2, V3) with estimation errors included."""
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    e3 = np.asarray(e3, dtype=float)
    v1 = float(np.linalg.norm(e1))
    v2 = float(np.linalg.norm(e2) + np.sum(np.square(dv_tilde)) / (2.0 * cfg.eps1))
    v3 = float(np.linalg.norm(topo.h @ e3) + np.sum(np.square(da_tilde)) / (2.0 * cfg.eps2))
    return v1, v2, v3


def step_comparison(z, gamma, b, dt: float) -> np.ndarray:
    """One RK4 step of z_dot = Gamma z + b, clamped to the positive orthant."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    z = np.asarray(z, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    b = np.asarray(b, dtype=float)
    k1 = gamma @ z + b
    k2 = gamma @ (z + 0.5 * dt * k1) + b
    k3 = gamma @ (z + 0.5 * dt * k2) + b
    k4 = gamma @ (z + dt * k3) + b
    z_next = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return np.maximum(z_next, 0.0)


@dataclass
class ComparisonReport:
    holds: bool
    worst_violation: float
    time_of_worst: float


def verify_comparison_principle(
    vslf: np.ndarray,
    z: np.ndarray,
    times: np.ndarray,
    tol_abs: float = COMPARISON_TOL_ABS,
    tol_rel: float = COMPARISON_TOL_REL,
) -> ComparisonReport:
    """Check V_k(t) <= z_k(t) (1 + tol_rel) + tol_abs on a shared grid.

    `vslf` and `z` are (n_samples, 3) arrays logged on `times`; z must have
    been initialized to V at the first sample.
    """
    vslf = np.asarray(vslf, dtype=float)
    z = np.asarray(z, dtype=float)
    times = np.asarray(times, dtype=float)
    if vslf.shape != z.shape or vslf.shape[0] != times.size:
        raise GridMismatchError(
            f"shapes disagree: V {vslf.shape}, z {z.shape}, t {times.shape}"
        )
    violation = vslf - (z * (1.0 + tol_rel) + tol_abs)
    worst_idx = int(np.argmax(np.max(violation, axis=1)))
    worst = float(np.max(violation))
    return ComparisonReport(
        holds=worst <= 0.0,
        worst_violation=worst,
        time_of_worst=float(times[worst_idx]),
    )


# --------------------------------------------------------------------------
# empirical string-stability sweep


@dataclass
class SweepRow:
    n: int
    sup_error: float
    normalized_sup_error: float
    certified: bool


def _sweep_one(template, n) -> SweepRow:
    from .sim import run_scenario  # deferred to avoid a cycle

    scenario = template.resized(n)
    log, _metrics, cert = run_scenario(scenario)
    stacked = np.hstack([log.e_x, log.e_v, log.e_a])
    sup = float(np.max(np.linalg.norm(stacked, axis=1)))
    return SweepRow(
        n=int(n),
        sup_error=sup,
        normalized_sup_error=sup / math.sqrt(n),
        certified=cert.certified,
    )


def string_stability_sweep(template, n_list) -> list:
    """Run the closed loop at several platoon sizes.

    For each N the scenario keeps per-vehicle initial errors and disturbance
    amplitudes fixed, and records the sup over time of the Euclidean norm of
    the stacked error (raw and divided by sqrt(N)).  PLATOON_VSS_THREADS
    caps the number of concurrent runs (default 1).
    """
    import os

    workers = int(os.environ.get("PLATOON_VSS_THREADS", "1"))
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda n: _sweep_one(template, n), n_list))
    return [_sweep_one(template, n) for n in n_list]

"""Scenario bundles, the reference preset, and INI-style file parsing."""

import configparser
import io
from dataclasses import dataclass, replace

import numpy as np

from .controller import ControllerConfig
from .dynamics import (
    DISTURBANCE_KINDS,
    DisturbanceModel,
    LeaderProfile,
    SpacingPolicy,
    VehicleParams,
)
from .errors import ConfigInvalidError, ScenarioParseError, ValidationError
from .sim import SimConfig
from .topology import TOPOLOGY_PRESETS, Topology, preset_topology

# measured residual sup on the reference run is ~5.1e3; the prior leaves margin
DEFAULT_DELTA_STAR_PRIOR = 6000.0

_KNOWN_KEYS = {
    "scenario": {"preset", "delta_star_prior"},
    "topology": {"preset", "n", "adjacency", "pinning"},
    "vehicle": {"m", "tau", "a_f", "rho", "c_d", "c_r"},
    "spacing": {"delta_d", "vehicle_length"},
    "leader": {"profile", "breakpoints", "x0"},
    "disturbance": {
        "kind", "amp_v", "amp_a", "omega", "phase_v", "phase_a",
        "delta_v", "delta_a", "bar_delta_v", "bar_delta_a",
    },
    "controller": {
        "k1", "k2", "k3", "eps1", "eps2", "kappa1", "kappa2",
        "sgn_deadzone", "adaptive_enabled",
    },
    "sim": {"dt", "horizon", "log_stride", "seed"},
    "init": {"x", "v", "a"},
}


@dataclass
class Scenario:
    """Full configuration bundle for one closed-loop run."""

    topology: Topology
    vehicle: VehicleParams
    spacing: SpacingPolicy
    leader: LeaderProfile
    leader_x0: float
    disturbance: DisturbanceModel
    controller: ControllerConfig
    sim: SimConfig
    x_init: np.ndarray
    v_init: np.ndarray
    a_init: np.ndarray
    delta_star_prior: float = DEFAULT_DELTA_STAR_PRIOR
    topology_preset: str | None = None

    def __post_init__(self):
        self.x_init = np.asarray(self.x_init, dtype=float)
        self.v_init = np.asarray(self.v_init, dtype=float)
        self.a_init = np.asarray(self.a_init, dtype=float)

    def validate(self):
        n = self.topology.n
        if self.controller.n != n:
            raise ConfigInvalidError(
                f"controller gains sized {self.controller.n}, topology n={n}"
            )
        if self.disturbance.n != n:
            raise ConfigInvalidError("disturbance model size does not match topology")
        for name in ("x_init", "v_init", "a_init"):
            if getattr(self, name).size != n:
                raise ConfigInvalidError(f"{name} must have length {n}")
        if not self.topology.has_spanning_tree():
            raise ConfigInvalidError("topology has no spanning tree from the leader")
        self.topology.require_h_inverse()
        if self.sim.horizon > self.leader.t_end + 1e-9:
            raise ConfigInvalidError(
                f"horizon {self.sim.horizon} exceeds leader profile span "
                f"{self.leader.t_end}"
            )
        if self.delta_star_prior < 0:
            raise ConfigInvalidError("delta_star_prior must be >= 0")

    def with_controller(self, controller: ControllerConfig) -> "Scenario":
        return replace(self, controller=controller)

    def resized(self, n: int, gap_error: float = 1.0) -> "Scenario":
        """Same scenario at a different platoon size.

        Requires a preset topology and uniform gains; every vehicle starts
        `gap_error` metres behind its formation slot with zero velocity and
        acceleration, so per-vehicle initial errors are size-independent.
        """
        if self.topology_preset is None:
            raise ConfigInvalidError("resizing needs a preset topology")
        for k in (self.controller.k1, self.controller.k2, self.controller.k3):
            if not np.all(k == k[0]):
                raise ConfigInvalidError("resizing needs uniform (scalar) gains")
        topo = preset_topology(self.topology_preset, n)
        controller = replace(
            self.controller,
            k1=np.full(n, self.controller.k1[0]),
            k2=np.full(n, self.controller.k2[0]),
            k3=np.full(n, self.controller.k3[0]),
        )
        # bounds rescale with sqrt(n); let them re-default for the new size
        disturbance = replace(
            self.disturbance, n=n,
            delta_v=None, delta_a=None, bar_delta_v=None, bar_delta_a=None,
        )
        x_init = self.leader_x0 - self.spacing.offsets(n) - gap_error
        return replace(
            self,
            topology=topo,
            controller=controller,
            disturbance=disturbance,
            x_init=x_init,
            v_init=np.zeros(n),
            a_init=np.zeros(n),
        )


def paper_iv(n: int = 4) -> Scenario:
    """Reference scenario.

    For n = 4 the initial positions are the staggered [15, 10, 5, 0] start;
    other sizes start every vehicle 1 m behind its formation slot.
    """
    topo = preset_topology("bidirectional-leader", n)
    spacing = SpacingPolicy(delta_d=3.0, vehicle_length=2.5)
    leader_x0 = 20.0
    if n == 4:
        x_init = np.array([15.0, 10.0, 5.0, 0.0])
    else:
        x_init = leader_x0 - spacing.offsets(n) - 1.0
    return Scenario(
        topology=topo,
        topology_preset="bidirectional-leader",
        vehicle=VehicleParams(),
        spacing=spacing,
        leader=LeaderProfile.paper(),
        leader_x0=leader_x0,
        disturbance=DisturbanceModel(kind="sinusoid", n=n, amp_v=20.0, amp_a=5.0, omega=1.0),
        controller=ControllerConfig.from_scalars(7.0, 21.0, 24.0, n),
        sim=SimConfig(),
        x_init=x_init,
        v_init=np.zeros(n),
        a_init=np.zeros(n),
    )


def scenarios_equal(a: Scenario, b: Scenario) -> bool:
    """Field-by-field equality (numpy-aware)."""
    checks = [
        np.array_equal(a.topology.adjacency, b.topology.adjacency),
        np.array_equal(a.topology.pinning, b.topology.pinning),
        a.vehicle == b.vehicle,
        a.spacing == b.spacing,
        np.array_equal(a.leader.times, b.leader.times),
        np.array_equal(a.leader.velocities, b.leader.velocities),
        a.leader_x0 == b.leader_x0,
        a.disturbance == b.disturbance,
        np.array_equal(a.controller.k1, b.controller.k1),
        np.array_equal(a.controller.k2, b.controller.k2),
        np.array_equal(a.controller.k3, b.controller.k3),
        (a.controller.eps1, a.controller.eps2, a.controller.kappa1, a.controller.kappa2)
        == (b.controller.eps1, b.controller.eps2, b.controller.kappa1, b.controller.kappa2),
        a.controller.sgn_deadzone == b.controller.sgn_deadzone,
        a.controller.adaptive_enabled == b.controller.adaptive_enabled,
        a.sim == b.sim,
        np.array_equal(a.x_init, b.x_init),
        np.array_equal(a.v_init, b.v_init),
        np.array_equal(a.a_init, b.a_init),
        a.delta_star_prior == b.delta_star_prior,
    ]
    return all(checks)


# --------------------------------------------------------------------------
# parsing


def _parse_vector(text: str) -> np.ndarray:
    return np.array([float(tok) for tok in text.replace(",", " ").split()])


def _parse_matrix(text: str) -> np.ndarray:
    rows = [r for r in (row.strip() for row in text.split(";")) if r]
    return np.array([_parse_vector(r) for r in rows])


def _parse_bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValidationError(f"key {key}: expected a boolean, got {text!r}")


def _float(cp, section, key, default):
    if cp.has_option(section, key):
        try:
            return float(cp.get(section, key))
        except ValueError as exc:
            raise ValidationError(f"key {section}.{key}: {exc}") from exc
    return default


def parse_scenario(path_or_text, is_text: bool = False) -> Scenario:
    """Parse a scenario file; every key is optional with reference defaults."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        if is_text:
            cp.read_file(io.StringIO(path_or_text))
        else:
            with open(path_or_text) as fh:
                cp.read_file(fh)
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioParseError(str(exc), line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ScenarioParseError(str(exc), line=line) from exc

    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise ValidationError(f"unknown section [{section}]")
        for key in cp.options(section):
            if key not in _KNOWN_KEYS[section]:
                raise ValidationError(f"unknown key {section}.{key}")

    if cp.has_option("scenario", "preset"):
        preset = cp.get("scenario", "preset")
        if preset != "paper-iv":
            raise ValidationError(f"unknown scenario preset {preset!r}")

    # topology first: it fixes n for everything downstream
    topo_preset = "bidirectional-leader"
    topo = None
    n = 4
    if cp.has_section("topology"):
        if cp.has_option("topology", "adjacency"):
            adjacency = _parse_matrix(cp.get("topology", "adjacency"))
            n = adjacency.shape[0]
            pinning = (
                _parse_vector(cp.get("topology", "pinning"))
                if cp.has_option("topology", "pinning")
                else np.ones(n)
            )
            topo = Topology.from_adjacency(adjacency, pinning)
            topo_preset = None
        else:
            topo_preset = cp.get("topology", "preset", fallback=topo_preset)
            if topo_preset not in TOPOLOGY_PRESETS:
                raise ValidationError(f"unknown topology preset {topo_preset!r}")
            n = int(_float(cp, "topology", "n", 4))
    base = paper_iv(n)
    if topo is None:
        topo = preset_topology(topo_preset, n) if topo_preset != "bidirectional-leader" else base.topology

    vehicle = VehicleParams(
        m=_float(cp, "vehicle", "m", base.vehicle.m),
        tau=_float(cp, "vehicle", "tau", base.vehicle.tau),
        a_f=_float(cp, "vehicle", "a_f", base.vehicle.a_f),
        rho=_float(cp, "vehicle", "rho", base.vehicle.rho),
        c_d=_float(cp, "vehicle", "c_d", base.vehicle.c_d),
        c_r=_float(cp, "vehicle", "c_r", base.vehicle.c_r),
    )
    spacing = SpacingPolicy(
        delta_d=_float(cp, "spacing", "delta_d", base.spacing.delta_d),
        vehicle_length=_float(cp, "spacing", "vehicle_length", base.spacing.vehicle_length),
    )

    leader = base.leader
    if cp.has_option("leader", "breakpoints"):
        pts = _parse_matrix(cp.get("leader", "breakpoints"))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError("leader.breakpoints must be rows of 't v'")
        leader = LeaderProfile(times=pts[:, 0], velocities=pts[:, 1], name="custom")
    elif cp.has_option("leader", "profile"):
        name = cp.get("leader", "profile")
        if name != "paper":
            raise ValidationError(f"unknown leader profile {name!r}")
    leader_x0 = _float(cp, "leader", "x0", base.leader_x0)

    kind = cp.get("disturbance", "kind", fallback=base.disturbance.kind)
    if kind not in DISTURBANCE_KINDS:
        raise ValidationError(f"unknown disturbance kind {kind!r}")
    opt_bounds = {}
    for key in ("delta_v", "delta_a", "bar_delta_v", "bar_delta_a"):
        if cp.has_option("disturbance", key):
            opt_bounds[key] = float(cp.get("disturbance", key))
    disturbance = DisturbanceModel(
        kind=kind,
        n=n,
        amp_v=_float(cp, "disturbance", "amp_v", base.disturbance.amp_v),
        amp_a=_float(cp, "disturbance", "amp_a", base.disturbance.amp_a),
        omega=_float(cp, "disturbance", "omega", base.disturbance.omega),
        phase_v=_float(cp, "disturbance", "phase_v", base.disturbance.phase_v),
        phase_a=_float(cp, "disturbance", "phase_a", base.disturbance.phase_a),
        **opt_bounds,
    )

    def gain(key, default_vec):
        if cp.has_option("controller", key):
            vec = _parse_vector(cp.get("controller", key))
            if vec.size == 1:
                return np.full(n, vec[0])
            if vec.size != n:
                raise ValidationError(f"controller.{key} must be scalar or length {n}")
            return vec
        return default_vec

    controller = ControllerConfig(
        k1=gain("k1", base.controller.k1),
        k2=gain("k2", base.controller.k2),
        k3=gain("k3", base.controller.k3),
        eps1=_float(cp, "controller", "eps1", base.controller.eps1),
        eps2=_float(cp, "controller", "eps2", base.controller.eps2),
        kappa1=_float(cp, "controller", "kappa1", base.controller.kappa1),
        kappa2=_float(cp, "controller", "kappa2", base.controller.kappa2),
        sgn_deadzone=_float(cp, "controller", "sgn_deadzone", base.controller.sgn_deadzone),
        adaptive_enabled=(
            _parse_bool(cp.get("controller", "adaptive_enabled"), "controller.adaptive_enabled")
            if cp.has_option("controller", "adaptive_enabled")
            else base.controller.adaptive_enabled
        ),
    )

    sim = SimConfig(
        dt=_float(cp, "sim", "dt", base.sim.dt),
        horizon=_float(cp, "sim", "horizon", base.sim.horizon),
        log_stride=int(_float(cp, "sim", "log_stride", base.sim.log_stride)),
        seed=int(_float(cp, "sim", "seed", base.sim.seed)),
    )

    def init_vec(key, default_vec):
        if cp.has_option("init", key):
            vec = _parse_vector(cp.get("init", key))
            if vec.size != n:
                raise ValidationError(f"init.{key} must have length {n}")
            return vec
        return default_vec

    return Scenario(
        topology=topo,
        topology_preset=topo_preset,
        vehicle=vehicle,
        spacing=spacing,
        leader=leader,
        leader_x0=leader_x0,
        disturbance=disturbance,
        controller=controller,
        sim=sim,
        x_init=init_vec("x", base.x_init),
        v_init=init_vec("v", base.v_init),
        a_init=init_vec("a", base.a_init),
        delta_star_prior=_float(cp, "scenario", "delta_star_prior", base.delta_star_prior),
    )


def _fmt_vector(vec) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(vec).ravel())


def _fmt_matrix(mat) -> str:
    return "; ".join(_fmt_vector(row) for row in np.asarray(mat))


def emit_scenario(s: Scenario) -> str:
    """Serialize a scenario; parse_scenario(emit_scenario(s)) reproduces s."""
    lines = []
    lines.append("[scenario]")
    lines.append(f"delta_star_prior = {s.delta_star_prior!r}")
    lines.append("")
    lines.append("[topology]")
    if s.topology_preset is not None:
        lines.append(f"preset = {s.topology_preset}")
        lines.append(f"n = {s.topology.n}")
    else:
        lines.append(f"adjacency = {_fmt_matrix(s.topology.adjacency)}")
        lines.append(f"pinning = {_fmt_vector(s.topology.pinning)}")
    lines.append("")
    lines.append("[vehicle]")
    for key in ("m", "tau", "a_f", "rho", "c_d", "c_r"):
        lines.append(f"{key} = {getattr(s.vehicle, key)!r}")
    lines.append("")
    lines.append("[spacing]")
    lines.append(f"delta_d = {s.spacing.delta_d!r}")
    lines.append(f"vehicle_length = {s.spacing.vehicle_length!r}")
    lines.append("")
    lines.append("[leader]")
    if s.leader.name == "paper":
        lines.append("profile = paper")
    else:
        pts = np.column_stack([s.leader.times, s.leader.velocities])
        lines.append(f"breakpoints = {_fmt_matrix(pts)}")
    lines.append(f"x0 = {s.leader_x0!r}")
    lines.append("")
    lines.append("[disturbance]")
    lines.append(f"kind = {s.disturbance.kind}")
    for key in ("amp_v", "amp_a", "omega", "phase_v", "phase_a",
                "delta_v", "delta_a", "bar_delta_v", "bar_delta_a"):
        lines.append(f"{key} = {getattr(s.disturbance, key)!r}")
    lines.append("")
    lines.append("[controller]")
    lines.append(f"k1 = {_fmt_vector(s.controller.k1)}")
    lines.append(f"k2 = {_fmt_vector(s.controller.k2)}")
    lines.append(f"k3 = {_fmt_vector(s.controller.k3)}")
    for key in ("eps1", "eps2", "kappa1", "kappa2", "sgn_deadzone"):
        lines.append(f"{key} = {getattr(s.controller, key)!r}")
    lines.append(f"adaptive_enabled = {str(s.controller.adaptive_enabled).lower()}")
    lines.append("")
    lines.append("[sim]")
    lines.append(f"dt = {s.sim.dt!r}")
    lines.append(f"horizon = {s.sim.horizon!r}")
    lines.append(f"log_stride = {s.sim.log_stride}")
    lines.append(f"seed = {s.sim.seed}")
    lines.append("")
    lines.append("[init]")
    lines.append(f"x = {_fmt_vector(s.x_init)}")
    lines.append(f"v = {_fmt_vector(s.v_init)}")
    lines.append(f"a = {_fmt_vector(s.a_init)}")
    lines.append("")
    return "\n".join(lines)

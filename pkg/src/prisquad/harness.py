"""Fixed-timestep simulation engine: scenario loading, actuator models,
contact and stability checking, mission execution, trace and summary output.

One simulation instance is strictly single-threaded and deterministic: the
same scenario and seed always produce byte-identical traces.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import sensors as sensormod
from .gait import (
    GaitConfig,
    GaitExecutor,
    GaitPhase,
    ObstacleSighting,
    SensorSummary,
)
from .kinematics import (
    DhLegParams,
    body_frame_feet,
    rigid_pose_from_pins,
    world_feet,
)
from .model import (
    PAIR_AC,
    PAIR_BD,
    BodyPose,
    Box,
    Ramp,
    RobotGeometry,
    Rope,
    ValidationError,
    WorldModel,
    standing_state,
    wrap_angle,
)
from .control import PidGains
from .trajectory import preset

# contact must register before the end-of-travel switch can freeze a
# descending leg 0.05 cm short of the ground
CONTACT_EPS_CM = 0.1
DEFAULT_FRICTION_MU = 0.42  # static grip of the rubber foot pads


class ScenarioError(ValueError):
    """A scenario document violates the schema."""


# --- stability ----------------------------------------------------------------


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull (counter-clockwise, no repeated endpoint) via monotone chain."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) <= 2:
        return np.asarray(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1])


def signed_distance_to_hull(point: tuple[float, float], hull: np.ndarray) -> float:
    """Signed distance to a convex polygon: positive inside, negative outside."""
    px, pz = point
    n = len(hull)
    if n == 0:
        return -math.inf
    if n == 1:
        return -math.hypot(px - hull[0][0], pz - hull[0][1])
    inside = True
    min_edge = math.inf
    for i in range(n):
        ax, az = hull[i]
        bx, bz = hull[(i + 1) % n] if n > 2 else hull[1 - i]
        ex, ez = bx - ax, bz - az
        # left-of test against CCW edges
        cross = ex * (pz - az) - ez * (px - ax)
        if n > 2 and cross < 0:
            inside = False
        seg_len2 = ex * ex + ez * ez
        if seg_len2 > 0:
            t = max(0.0, min(1.0, ((px - ax) * ex + (pz - az) * ez) / seg_len2))
            dist = math.hypot(px - (ax + t * ex), pz - (az + t * ez))
        else:
            dist = math.hypot(px - ax, pz - az)
        min_edge = min(min_edge, dist)
    return min_edge if inside and n > 2 else -min_edge


def foot_contact_corners(
    center: tuple[float, float], heading: float, dims: tuple[float, float]
) -> np.ndarray:
    """World corners of one foot's contact rectangle (length along heading)."""
    half_l, half_w = dims[0] / 2.0, dims[1] / 2.0
    c, s = math.cos(heading), math.sin(heading)
    corners = []
    for dx, dz in ((half_l, half_w), (half_l, -half_w), (-half_l, -half_w), (-half_l, half_w)):
        corners.append((center[0] + c * dx - s * dz, center[1] + s * dx + c * dz))
    return np.asarray(corners)


def check_stability(
    foot_xz: np.ndarray,
    stance: tuple[int, ...],
    com_xz: tuple[float, float],
    contact_dims: tuple[float, float],
    foot_headings: tuple[float, float, float, float] | None = None,
) -> tuple[bool, float]:
    """Quasi-static stability of the body over the grounded feet.

    The margin is the signed distance from the body centre's ground
    projection to the convex hull of the stance feet's contact rectangles;
    the pose is stable when the margin is non-negative.  At walking speeds
    the zero-moment point coincides with this projection.
    """
    if len(stance) < 2:
        return False, -math.inf
    corners = []
    for leg in stance:
        heading = 0.0 if foot_headings is None else foot_headings[leg]
        corners.append(foot_contact_corners(tuple(foot_xz[leg]), heading, contact_dims))
    hull = convex_hull(np.vstack(corners))
    margin = signed_distance_to_hull(com_xz, hull)
    return margin >= 0.0, margin


# --- scenario schema ------------------------------------------------------------


@dataclass
class ActuatorModel:
    """Rate-limited velocity actuators with an optional first-order response."""

    slide_max_speed: float = 17.0
    vert_max_speed: float = 10.0
    steer_max_speed: float = 0.6
    time_constant_s: float = 0.0

    def validate(self) -> None:
        if min(self.slide_max_speed, self.vert_max_speed, self.steer_max_speed) <= 0:
            raise ScenarioError("actuator speed caps must be > 0")
        if self.time_constant_s < 0:
            raise ScenarioError("actuator time constant must be >= 0")


@dataclass
class SensorSetup:
    imu_noise_deg: float = 0.0
    ultrasonic_mounts: tuple = (
        sensormod.UltrasonicMount(offset_x=16.5, offset_z=10.0, height=8.0),
        sensormod.UltrasonicMount(offset_x=16.5, offset_z=-10.0, height=8.0),
    )
    lidar: sensormod.LidarConfig = field(default_factory=sensormod.LidarConfig)
    lidar_enabled: bool = True


@dataclass
class Scenario:
    geometry: RobotGeometry = field(default_factory=RobotGeometry)
    leg_params: DhLegParams = field(default_factory=DhLegParams)
    world: WorldModel = field(default_factory=WorldModel)
    gait: GaitConfig = field(default_factory=GaitConfig)
    sensors: SensorSetup = field(default_factory=SensorSetup)
    actuators: ActuatorModel = field(default_factory=ActuatorModel)
    mission: list[dict] = field(default_factory=list)
    dt: float = 0.01
    seed: int = 0
    friction_mu: float = DEFAULT_FRICTION_MU
    max_sim_time_s: float = 300.0
    trace_path: str | None = None
    summary_path: str | None = None


_GAIN_KEYS = {"kp", "ki", "kd", "output_limit", "integral_limit"}


def _check_keys(section: dict, allowed: set[str], path: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} at {path}")


def _gains_from(doc: dict, path: str, base: PidGains) -> PidGains:
    _check_keys(doc, _GAIN_KEYS, path)
    merged = {
        "kp": base.kp,
        "ki": base.ki,
        "kd": base.kd,
        "output_limit": base.output_limit,
        "integral_limit": base.integral_limit,
    }
    merged.update(doc)
    return PidGains(**merged)


def _parse_world(doc: dict, path: str) -> WorldModel:
    _check_keys(doc, {"obstacles"}, path)
    world = WorldModel()
    for i, obs in enumerate(doc.get("obstacles", [])):
        opath = f"{path}.obstacles[{i}]"
        kind = obs.get("type")
        if kind == "box":
            _check_keys(obs, {"type", "x_cm", "z_cm", "width_cm", "depth_cm", "height_cm"}, opath)
            world.obstacles.append(
                Box(obs["x_cm"], obs.get("z_cm", 0.0), obs["width_cm"], obs["depth_cm"], obs["height_cm"])
            )
        elif kind == "rope":
            _check_keys(obs, {"type", "x_cm", "z_cm", "span_cm", "height_cm"}, opath)
            world.obstacles.append(
                Rope(obs["x_cm"], obs.get("z_cm", 0.0), obs["span_cm"], obs["height_cm"])
            )
        elif kind == "ramp":
            _check_keys(obs, {"type", "x_start_cm", "incline_deg", "length_cm"}, opath)
            world.obstacles.append(Ramp(obs["x_start_cm"], obs["incline_deg"], obs["length_cm"]))
        else:
            raise ScenarioError(f"unknown obstacle type {kind!r} at {opath}")
    world.validate()
    return world


def _parse_mission(items: list, path: str) -> list[dict]:
    if not items:
        raise ScenarioError(f"mission must not be empty at {path}")
    mission = []
    for i, item in enumerate(items):
        ipath = f"{path}[{i}]"
        kind = item.get("type")
        if kind == "walk":
            _check_keys(
                item,
                {"type", "distance_cm", "trajectory", "adaptive", "stride_L_cm", "stride_H_cm"},
                ipath,
            )
            if item["distance_cm"] <= 0:
                raise ScenarioError(f"walk distance must be > 0 at {ipath}")
            mission.append(
                {
                    "type": "walk",
                    "distance_cm": float(item["distance_cm"]),
                    "trajectory": item.get("trajectory", "triangular"),
                    "adaptive": bool(item.get("adaptive", True)),
                    "stride_L_cm": item.get("stride_L_cm"),
                    "stride_H_cm": item.get("stride_H_cm"),
                }
            )
        elif kind == "turn":
            _check_keys(item, {"type", "angle_deg"}, ipath)
            mission.append({"type": "turn", "angle_deg": float(item["angle_deg"])})
        elif kind == "auto_navigate":
            _check_keys(item, {"type", "goal_xz_cm", "tolerance_cm"}, ipath)
            goal = item["goal_xz_cm"]
            mission.append(
                {
                    "type": "auto_navigate",
                    "goal_xz_cm": [float(goal[0]), float(goal[1])],
                    "tolerance_cm": float(item.get("tolerance_cm", 5.0)),
                }
            )
        else:
            raise ScenarioError(f"unknown mission command {kind!r} at {ipath}")
    return mission


def load_scenario(document: dict | str | Path) -> Scenario:
    """Validate a scenario document (dict, JSON text or file path).

    Unknown keys are rejected with their JSON path so that experiment files
    stay reproducible across versions.
    """
    if isinstance(document, (str, Path)):
        p = Path(document)
        if p.exists():
            document = json.loads(p.read_text())
        else:
            document = json.loads(str(document))
    if not isinstance(document, dict):
        raise ScenarioError("scenario document must be a JSON object")

    _check_keys(
        document,
        {
            "schema_version",
            "geometry",
            "world",
            "controllers",
            "sensors",
            "actuators",
            "mission",
            "dt",
            "seed",
            "friction_mu",
            "output",
        },
        "$",
    )
    if document.get("schema_version") != 1:
        raise ScenarioError("schema_version must be 1")

    scenario = Scenario()

    geo_doc = document.get("geometry", {})
    _check_keys(
        geo_doc,
        {"pulley_radius_cm", "foot_contact_cm", "dh_k1_cm", "dh_k2_cm", "dh_k3_cm"},
        "$.geometry",
    )
    if "pulley_radius_cm" in geo_doc:
        scenario.geometry = replace(scenario.geometry, pulley_radius=float(geo_doc["pulley_radius_cm"]))
    if "foot_contact_cm" in geo_doc:
        fc = geo_doc["foot_contact_cm"]
        scenario.geometry = replace(scenario.geometry, foot_contact=(float(fc[0]), float(fc[1])))
    scenario.geometry.validate()
    scenario.leg_params = DhLegParams(
        k1=float(geo_doc.get("dh_k1_cm", scenario.leg_params.k1)),
        k2=float(geo_doc.get("dh_k2_cm", scenario.leg_params.k2)),
        k3=float(geo_doc.get("dh_k3_cm", scenario.leg_params.k3)),
    )

    if "world" in document:
        scenario.world = _parse_world(document["world"], "$.world")

    ctl_doc = document.get("controllers", {})
    _check_keys(
        ctl_doc,
        {
            "lookahead_cm",
            "pd_position",
            "pid_velocity",
            "yaw_pi",
            "speed_scale",
            "trigger_range_cm",
            "tilt_threshold_deg",
            "switch_hysteresis_ticks",
        },
        "$.controllers",
    )
    gait = scenario.gait
    if "lookahead_cm" in ctl_doc:
        gait.lookahead_cm = float(ctl_doc["lookahead_cm"])
        if gait.lookahead_cm <= 0:
            raise ScenarioError("lookahead_cm must be > 0 at $.controllers")
    if "pd_position" in ctl_doc:
        gait.pd_position = _gains_from(ctl_doc["pd_position"], "$.controllers.pd_position", gait.pd_position)
    if "pid_velocity" in ctl_doc:
        gait.pid_velocity = _gains_from(ctl_doc["pid_velocity"], "$.controllers.pid_velocity", gait.pid_velocity)
    if "yaw_pi" in ctl_doc:
        gait.yaw_pi = _gains_from(ctl_doc["yaw_pi"], "$.controllers.yaw_pi", gait.yaw_pi)
    for key, attr in (
        ("speed_scale", "speed_scale"),
        ("trigger_range_cm", "trigger_range_cm"),
        ("tilt_threshold_deg", "tilt_threshold_deg"),
        ("switch_hysteresis_ticks", "switch_hysteresis_ticks"),
    ):
        if key in ctl_doc:
            setattr(gait, attr, type(getattr(gait, attr))(ctl_doc[key]))

    sen_doc = document.get("sensors", {})
    _check_keys(sen_doc, {"imu_noise_deg", "lidar", "lidar_enabled", "ultrasonic_height_cm"}, "$.sensors")
    if "imu_noise_deg" in sen_doc:
        scenario.sensors.imu_noise_deg = float(sen_doc["imu_noise_deg"])
    if "ultrasonic_height_cm" in sen_doc:
        h = float(sen_doc["ultrasonic_height_cm"])
        scenario.sensors.ultrasonic_mounts = tuple(
            replace(m, height=h) for m in scenario.sensors.ultrasonic_mounts
        )
    if "lidar_enabled" in sen_doc:
        scenario.sensors.lidar_enabled = bool(sen_doc["lidar_enabled"])
    if "lidar" in sen_doc:
        lid = sen_doc["lidar"]
        _check_keys(
            lid,
            {"angular_resolution_deg", "sector_deg", "sweep_period_s", "max_range_cm", "mount_height_cm"},
            "$.sensors.lidar",
        )
        scenario.sensors.lidar = sensormod.LidarConfig(
            angular_resolution_deg=float(lid.get("angular_resolution_deg", 0.15)),
            sector_deg=tuple(lid.get("sector_deg", (-90.0, 90.0))),
            sweep_period_s=float(lid.get("sweep_period_s", 0.5)),
            max_range_cm=float(lid.get("max_range_cm", 400.0)),
            mount_height=float(lid.get("mount_height_cm", 35.0)),
        )

    act_doc = document.get("actuators", {})
    _check_keys(
        act_doc,
        {"slide_max_speed_cm_s", "vert_max_speed_cm_s", "steer_max_speed_rad_s", "time_constant_s"},
        "$.actuators",
    )
    scenario.actuators = ActuatorModel(
        slide_max_speed=float(act_doc.get("slide_max_speed_cm_s", 17.0)),
        vert_max_speed=float(act_doc.get("vert_max_speed_cm_s", 10.0)),
        steer_max_speed=float(act_doc.get("steer_max_speed_rad_s", 0.6)),
        time_constant_s=float(act_doc.get("time_constant_s", 0.0)),
    )
    scenario.actuators.validate()
    gait.slide_speed_cap = scenario.actuators.slide_max_speed
    gait.vert_speed_cap = scenario.actuators.vert_max_speed
    gait.steer_speed_cap = scenario.actuators.steer_max_speed

    if "mission" not in document:
        raise ScenarioError("scenario requires a mission at $.mission")
    scenario.mission = _parse_mission(document["mission"], "$.mission")

    scenario.dt = float(document.get("dt", 0.01))
    if not 0.0 < scenario.dt <= 0.1:
        raise ScenarioError("dt must be in (0, 0.1] at $.dt")
    scenario.seed = int(document.get("seed", 0))
    scenario.friction_mu = float(document.get("friction_mu", DEFAULT_FRICTION_MU))
    out_doc = document.get("output", {})
    _check_keys(out_doc, {"trace_jsonl", "summary_json"}, "$.output")
    scenario.trace_path = out_doc.get("trace_jsonl")
    scenario.summary_path = out_doc.get("summary_json")
    return scenario


# --- simulation engine -----------------------------------------------------------


class SimEngine:
    """Advances the world one fixed timestep at a time."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.geom = scenario.geometry
        self.legs = scenario.leg_params
        self.world = scenario.world
        self.dt = scenario.dt
        self.rng = np.random.default_rng(scenario.seed)
        self.executor = GaitExecutor(self.geom, scenario.gait)
        self.joints = standing_state(self.geom)
        self.pose = BodyPose()
        self.state = self.executor.new_state()
        self.t = 0.0
        self.tick_index = 0
        self.trace: list[dict] = []
        self.halt: dict | None = None
        self.anchor_world: np.ndarray | None = None
        self.anchor_pair = PAIR_AC
        self._axis_velocity = {name: 0.0 for name in sensormod.AXIS_NAMES}
        self._lidar_every = max(1, round(scenario.sensors.lidar.sweep_period_s / self.dt))
        self._sweep_index = 0
        self._pin_anchors(self.state.pinned_pair)

    # -- terrain and feet ---------------------------------------------------------

    def _pin_anchors(self, pair: tuple[int, int]) -> None:
        feet = world_feet(self.pose, self.joints, self.legs, self.geom)
        self.anchor_pair = pair
        self.anchor_world = feet.xz[list(pair)].copy()

    def _support_plane(self) -> tuple[float, float]:
        """(body centre height, pitch slope) over the pinned stance feet.

        The body rides parallel to the local walkable slope under its stance
        feet (flat over block steps, inclined on ramps); its height is the
        least-squares fit of that line through the stance contacts, each at
        terrain + k3 - d_vert.
        """
        pair = self.anchor_pair
        feet = world_feet(self.pose, self.joints, self.legs, self.geom)
        fwd = self.pose.forward()
        us, ps, grads = [], [], []
        for leg in pair:
            px, pz = feet.xz[leg]
            u = (px - self.pose.x) * fwd[0] + (pz - self.pose.z) * fwd[1]
            terrain = self.world.terrain_height(px, pz)
            us.append(u)
            ps.append(terrain + self.legs.k3 - self.joints.d_vert[leg])
            grads.append(self.world.terrain_gradient_x(px, pz) * fwd[0])
        slope = sum(grads) / len(grads)
        height = sum(p - slope * u for p, u in zip(ps, us)) / len(ps)
        return height, slope

    def foot_world(self) -> tuple[np.ndarray, np.ndarray]:
        """World planar positions and heights of all four feet.

        Pinned stance feet sit exactly on the terrain; the free feet hang
        from the body plane by their extension.
        """
        feet = world_feet(self.pose, self.joints, self.legs, self.geom)
        height, slope = self._support_plane()
        fwd = self.pose.forward()
        ys = np.empty(4)
        for leg in range(4):
            px, pz = feet.xz[leg]
            if leg in self.anchor_pair:
                ys[leg] = self.world.terrain_height(px, pz)
            else:
                u = (px - self.pose.x) * fwd[0] + (pz - self.pose.z) * fwd[1]
                ys[leg] = height + slope * u - self.legs.k3 + self.joints.d_vert[leg]
        return feet.xz, ys

    def _contacts(self, foot_xz: np.ndarray, foot_y: np.ndarray) -> tuple[bool, ...]:
        flags = []
        for leg in range(4):
            terrain = self.world.terrain_height(foot_xz[leg][0], foot_xz[leg][1])
            flags.append(foot_y[leg] <= terrain + CONTACT_EPS_CM)
        return tuple(flags)

    # -- perception -----------------------------------------------------------------

    def _nearest_obstacle(self, foot_xz: np.ndarray) -> ObstacleSighting | None:
        """Idealized classification of the nearest block or rope ahead.

        An obstacle stays sighted while the robot straddles it (any foot over
        a box footprint, or a rope between the feet), so the gait keeps its
        climbing trajectory until the whole robot is past.
        """
        c, s = math.cos(self.pose.heading_phi), math.sin(self.pose.heading_phi)
        best: tuple[float, str, float] | None = None
        for box in self.world.boxes():
            if box.height <= 1.0:
                continue
            straddling = any(
                abs(foot_xz[leg][0] - box.x) <= box.depth / 2.0 + 1.0
                and abs(foot_xz[leg][1] - box.z) <= box.width / 2.0 + 1.0
                for leg in range(4)
            )
            if straddling:
                if best is None or 1.0 < best[0]:
                    best = (1.0, "block", box.height)
                continue
            for mount in self.sc.sensors.ultrasonic_mounts:
                ox = self.pose.x + c * mount.offset_x - s * mount.offset_z
                oz = self.pose.z + s * mount.offset_x + c * mount.offset_z
                t = sensormod._ray_box_distance(ox, oz, c, s, box)
                if t is not None and t > 0.0 and (best is None or t < best[0]):
                    best = (t, "block", box.height)
        for rope in self.world.ropes():
            d_along = (rope.x - self.pose.x) * c + (rope.z - self.pose.z) * s
            if d_along < -45.0:
                continue
            rng = max(d_along - 16.5, 0.5)
            if best is None or rng < best[0]:
                best = (rng, "rope", rope.height)
        if best is None:
            return None
        return ObstacleSighting(kind=best[1], height=best[2], range_cm=best[0])

    def _sensor_frame(self, with_lidar: bool) -> sensormod.SensorFrame:
        sc = self.sc
        counts = sensormod.read_encoders(self.joints, self.geom)
        yaw, pitch = sensormod.read_imu(self.pose, sc.sensors.imu_noise_deg, self.rng)
        ranges = tuple(
            sensormod.read_ultrasonic(self.pose, self.world, m) for m in sc.sensors.ultrasonic_mounts
        )
        low, high = sensormod.read_limit_switches(self.joints, self.geom)
        lidar = None
        if with_lidar and sc.sensors.lidar_enabled:
            lidar = sensormod.lidar_scan(self.pose, self.world, sc.sensors.lidar, self._sweep_index)
            self._sweep_index += 1
        return sensormod.SensorFrame(
            encoder_counts=counts,
            imu_yaw=yaw,
            imu_pitch=pitch,
            ultrasonic_cm=ranges,
            limit_low=low,
            limit_high=high,
            lidar=lidar,
        )

    # -- stepping -------------------------------------------------------------------

    def _apply_actuators(self, cmd) -> None:
        act = self.sc.actuators
        desired = {
            "slide_lower": max(-act.slide_max_speed, min(act.slide_max_speed, cmd.slide_lower)),
            "slide_upper": max(-act.slide_max_speed, min(act.slide_max_speed, cmd.slide_upper)),
            "vert_a": max(-act.vert_max_speed, min(act.vert_max_speed, cmd.vert[0])),
            "vert_b": max(-act.vert_max_speed, min(act.vert_max_speed, cmd.vert[1])),
            "vert_c": max(-act.vert_max_speed, min(act.vert_max_speed, cmd.vert[2])),
            "vert_d": max(-act.vert_max_speed, min(act.vert_max_speed, cmd.vert[3])),
            "steer": max(-act.steer_max_speed, min(act.steer_max_speed, cmd.steer)),
        }
        if act.time_constant_s > 0.0:
            alpha = self.dt / (act.time_constant_s + self.dt)
            for k, v in desired.items():
                self._axis_velocity[k] += alpha * (v - self._axis_velocity[k])
        else:
            self._axis_velocity.update(desired)
        v = self._axis_velocity
        j = self.joints
        j.slide_lower = min(max(j.slide_lower + v["slide_lower"] * self.dt, 0.0), self.geom.slide_travel_max)
        j.slide_upper = min(max(j.slide_upper + v["slide_upper"] * self.dt, 0.0), self.geom.slide_travel_max)
        for i, name in enumerate(("vert_a", "vert_b", "vert_c", "vert_d")):
            j.d_vert[i] = min(max(j.d_vert[i] + v[name] * self.dt, 0.0), self.geom.vertical_travel_max)
        j.steer_alpha = min(
            max(j.steer_alpha + v["steer"] * self.dt, -self.geom.steer_travel_max),
            self.geom.steer_travel_max,
        )

    def _resolve_pose(self) -> None:
        """Planar pose from the pinned stance feet, then pitch from terrain."""
        local = body_frame_feet(self.joints, self.legs, self.geom)
        pose = rigid_pose_from_pins(
            self.anchor_world, local.xz[list(self.anchor_pair)], self.pose.pitch
        )
        self.pose = pose
        _, slope = self._support_plane()
        self.pose.pitch = math.atan(slope)

    def _snap_landing_feet(self, swing_pair) -> None:
        """Pin a descending foot exactly onto the terrain it just reached."""
        foot_xz, foot_y = self.foot_world()
        height, slope = self._support_plane()
        fwd = self.pose.forward()
        for leg in swing_pair:
            terrain = self.world.terrain_height(foot_xz[leg][0], foot_xz[leg][1])
            if foot_y[leg] < terrain:
                u = (foot_xz[leg][0] - self.pose.x) * fwd[0] + (foot_xz[leg][1] - self.pose.z) * fwd[1]
                self.joints.d_vert[leg] = min(
                    max(terrain - (height + slope * u) + self.legs.k3, 0.0),
                    self.geom.vertical_travel_max,
                )

    def _record_halt(self, reason: str) -> None:
        if self.halt is None:
            self.halt = {"t": self.t, "reason": reason}
            self.state.phase = GaitPhase.HALT
            self.state.halt_reason = reason

    def step(self) -> dict:
        """Advance one tick: sense, decide, actuate, resolve, check, record."""
        foot_xz, foot_y = self.foot_world()
        with_lidar = self.tick_index % self._lidar_every == 0
        frame = self._sensor_frame(with_lidar)
        contacts = self._contacts(foot_xz, foot_y)
        sighting = self._nearest_obstacle(foot_xz)
        front_range = None
        ranges = [r for r in frame.ultrasonic_cm if r is not None]
        if ranges:
            front_range = min(ranges)
        elif sighting is not None:
            front_range = sighting.range_cm
        summary = SensorSummary(
            front_range=front_range,
            body_pitch=frame.imu_pitch,
            yaw=frame.imu_yaw,
            obstacle=sighting,
            foot_contact=contacts,
            limit_low=frame.limit_low,
            limit_high=frame.limit_high,
        )

        prev_pinned = self.state.pinned_pair
        cmd, self.state = self.executor.gait_tick(self.state, summary, self.joints, self.dt)
        if self.state.pinned_pair != prev_pinned:
            self._pin_anchors(self.state.pinned_pair)

        self._apply_actuators(cmd)
        self._resolve_pose()
        swing = [leg for leg in range(4) if leg not in self.state.pinned_pair]
        self._snap_landing_feet(swing)

        foot_xz, foot_y = self.foot_world()
        contacts = self._contacts(foot_xz, foot_y)
        grounded = tuple(leg for leg in range(4) if contacts[leg])
        stance_for_margin = grounded if len(grounded) >= 2 else self.state.pinned_pair
        lower_heading = wrap_angle(self.pose.heading_phi - self.joints.steer_alpha)
        headings = (
            lower_heading,
            self.pose.heading_phi,
            lower_heading,
            self.pose.heading_phi,
        )
        stable, margin = check_stability(
            foot_xz,
            stance_for_margin,
            (self.pose.x, self.pose.z),
            self.geom.foot_contact,
            headings,
        )
        if not stable:
            self._record_halt("instability")
        if abs(math.tan(self.pose.pitch)) > self.sc.friction_mu:
            self._record_halt("slip")

        events = list(self.state.events)
        self.state.events.clear()
        for ev in events:
            ev["t"] = round(self.t, 9)

        stance_label = "ALL" if len(grounded) == 4 else (
            "AC" if set(grounded) == set(PAIR_AC) else "BD" if set(grounded) == set(PAIR_BD) else "PARTIAL"
        )
        record = {
            "t": round(self.t, 9),
            "x": self.pose.x,
            "z": self.pose.z,
            "heading": self.pose.heading_phi,
            "pitch": self.pose.pitch,
            "joints": {
                "slide_lower": self.joints.slide_lower,
                "slide_upper": self.joints.slide_upper,
                "vert": list(self.joints.d_vert),
                "steer": self.joints.steer_alpha,
            },
            "feet": [
                [foot_xz[i][0], foot_y[i], foot_xz[i][1]] for i in range(4)
            ],
            "stance": stance_label,
            "trajectory": self.state.active_spec.kind.value,
            "phase": self.state.phase.value,
            "step_index": self.state.step_index,
            "tracking_errors": [
                list(self.state.last_errors[i]) if i in self.state.last_errors else None
                for i in range(4)
            ],
            "margin": margin,
            "sensors": {
                "yaw": frame.imu_yaw,
                "pitch": frame.imu_pitch,
                "ultrasonic": [
                    None if r is None else r for r in frame.ultrasonic_cm
                ],
                "limits": sum(1 << i for i, f in enumerate(frame.limit_low + frame.limit_high) if f),
                "lidar_beams": 0 if frame.lidar is None else len(frame.lidar),
            },
            "events": events,
        }
        self.trace.append(record)
        self.t += self.dt
        self.tick_index += 1
        return record

    # -- mission --------------------------------------------------------------------

    def run_mission(self) -> dict:
        commands_out = []
        ok = True
        for command in self.sc.mission:
            result = self._run_command(command)
            commands_out.append(result)
            if not result["success"]:
                ok = False
                break
        return {"mission_success": ok and self.halt is None, "commands": commands_out}

    def _run_until_idle(self) -> None:
        max_ticks = int(self.sc.max_sim_time_s / self.dt)
        while self.state.phase is not GaitPhase.IDLE:
            if self.state.phase is GaitPhase.HALT:
                if self.halt is None:
                    self._record_halt(self.state.halt_reason or "halt")
                    self.step()
                return
            if self.tick_index >= max_ticks:
                self._record_halt("timeout")
                return
            self.step()

    def _run_command(self, command: dict) -> dict:
        if command["type"] == "walk":
            start = (self.pose.x, self.pose.z)
            spec = preset(
                command["trajectory"],
                stride_L=command.get("stride_L_cm"),
                stride_H=command.get("stride_H_cm"),
            )
            self.executor.config.adaptive = command["adaptive"]
            self.state.active_spec = spec
            self.executor.start_walk(self.state, command["distance_cm"], spec)
            self.step()
            self._run_until_idle()
            travelled = math.hypot(self.pose.x - start[0], self.pose.z - start[1])
            success = self.halt is None and abs(travelled - command["distance_cm"]) <= 1.0
            return {
                "type": "walk",
                "requested_cm": command["distance_cm"],
                "travelled_cm": travelled,
                "success": success,
            }
        if command["type"] == "turn":
            theta = math.radians(command["angle_deg"])
            target = wrap_angle(self.pose.heading_phi + theta)
            # angles beyond the steering travel take several in-place turns;
            # the actually-turned amount is measured per segment so a segment
            # parked on the end switch gets corrected by the next one
            limit = self.geom.steer_travel_max
            turned_total = 0.0
            for _ in range(6):
                remaining = theta - turned_total
                if abs(remaining) <= math.radians(0.25) or self.halt is not None:
                    break
                segment = max(-limit, min(limit, remaining))
                heading_before = self.pose.heading_phi
                self.executor.start_turn(self.state, segment)
                self.step()
                self._run_until_idle()
                turned_total += wrap_angle(self.pose.heading_phi - heading_before)
            error_deg = math.degrees(wrap_angle(target - self.pose.heading_phi))
            success = self.halt is None and abs(error_deg) <= 1.0
            return {
                "type": "turn",
                "requested_deg": command["angle_deg"],
                "heading_error_deg": error_deg,
                "success": success,
            }
        if command["type"] == "auto_navigate":
            goal = command["goal_xz_cm"]
            tol = command["tolerance_cm"]
            for _ in range(5):
                dx, dz = goal[0] - self.pose.x, goal[1] - self.pose.z
                dist = math.hypot(dx, dz)
                if dist <= tol:
                    break
                bearing = math.atan2(dz, dx)
                dh = wrap_angle(bearing - self.pose.heading_phi)
                if abs(dh) > math.radians(1.0):
                    result = self._run_command({"type": "turn", "angle_deg": math.degrees(dh)})
                    if not result["success"]:
                        return {"type": "auto_navigate", "success": False, "goal_xz_cm": goal}
                result = self._run_command(
                    {"type": "walk", "distance_cm": dist, "trajectory": "triangular", "adaptive": True}
                )
                if not result["success"]:
                    return {"type": "auto_navigate", "success": False, "goal_xz_cm": goal}
            dist = math.hypot(goal[0] - self.pose.x, goal[1] - self.pose.z)
            return {"type": "auto_navigate", "success": dist <= tol, "goal_xz_cm": goal,
                    "distance_to_goal_cm": dist}
        raise ScenarioError(f"unknown mission command {command['type']!r}")


def run_simulation(scenario: Scenario) -> tuple[list[dict], dict]:
    """Execute a scenario's mission and return (trace, summary).

    When the scenario names output paths the trace and summary are also
    written there.
    """
    engine = SimEngine(scenario)
    mission_result = engine.run_mission()
    summary = summarize(engine.trace)
    summary.update(mission_result)
    summary["halt"] = engine.halt
    summary["seed"] = scenario.seed
    summary["dt"] = scenario.dt
    if scenario.trace_path:
        emit_trace(engine.trace, scenario.trace_path)
    if scenario.summary_path:
        Path(scenario.summary_path).write_text(json.dumps(summary, indent=2) + "\n")
    return engine.trace, summary


# --- outputs ---------------------------------------------------------------------


def summarize(trace: list[dict]) -> dict:
    """Aggregate a trace: distance, speed, heading, events, stability."""
    if not trace:
        return {
            "ticks": 0,
            "duration_s": 0.0,
            "distance_cm": 0.0,
            "avg_speed_cm_s": 0.0,
            "final_heading_deg": 0.0,
            "stability_violations": 0,
            "min_margin_cm": math.inf,
            "switch_events": [],
            "halts": [],
        }
    first, last = trace[0], trace[-1]
    duration = last["t"] - first["t"] + (trace[1]["t"] - trace[0]["t"] if len(trace) > 1 else 0.0)
    distance = math.hypot(last["x"] - first["x"], last["z"] - first["z"])
    switches = []
    halts = []
    violations = 0
    min_margin = math.inf
    for rec in trace:
        if rec["margin"] < 0:
            violations += 1
        min_margin = min(min_margin, rec["margin"])
        for ev in rec.get("events", []):
            if ev["type"] == "trajectory_switch":
                switches.append(ev)
            elif ev["type"] == "halt":
                halts.append(ev)
    return {
        "ticks": len(trace),
        "duration_s": duration,
        "distance_cm": distance,
        "avg_speed_cm_s": distance / duration if duration > 0 else 0.0,
        "final_heading_deg": math.degrees(last["heading"]),
        "stability_violations": violations,
        "min_margin_cm": min_margin,
        "switch_events": switches,
        "halts": halts,
    }


def emit_trace(trace: list[dict], path: str | Path) -> None:
    """Write a trace as JSON Lines, one tick per line."""
    p = Path(path)
    try:
        with p.open("w") as fh:
            for record in trace:
                fh.write(json.dumps(record, separators=(",", ":")))
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {p}: {exc}") from exc


def load_trace(path: str | Path) -> list[dict]:
    p = Path(path)
    try:
        return [json.loads(line) for line in p.read_text().splitlines() if line.strip()]
    except OSError as exc:
        raise OSError(f"cannot read trace from {p}: {exc}") from exc


PAIR_FRONT_LEG = {"AC": 0, "BD": 1}


def trace2svg(trace: list[dict], path: str | Path) -> None:
    """Plot swing-foot paths (world x vs height) with reference curves overlaid."""
    if not trace:
        raise ValidationError("cannot plot an empty trace")
    strides: list[dict] = []
    current: dict | None = None
    for rec in trace:
        for ev in rec.get("events", []):
            if ev["type"] == "step_start":
                current = {
                    "pair": ev["pair"],
                    "span": ev["span_cm"],
                    "trajectory": ev["trajectory"],
                    "tilt": ev.get("tilt_rad", 0.0),
                    "points": [],
                }
                strides.append(current)
            elif ev["type"] == "step_complete":
                current = None
        if current is not None:
            leg = PAIR_FRONT_LEG[current["pair"]]
            fx, fy, _fz = rec["feet"][leg]
            current["points"].append((fx, fy))

    xs = [p[0] for s in strides for p in s["points"]] or [0.0]
    ys = [p[1] for s in strides for p in s["points"]] or [0.0]
    x_lo, x_hi = min(xs) - 2, max(xs) + 2
    y_lo, y_hi = min(0.0, min(ys)) - 2, max(ys) + 4
    scale = 6.0
    width = (x_hi - x_lo) * scale
    height = (y_hi - y_lo) * scale

    def sx(x: float) -> float:
        return (x - x_lo) * scale

    def sy(y: float) -> float:
        return height - (y - y_lo) * scale

    def poly(points, color, dash="") -> str:
        coords = " ".join(f"{sx(px):.2f},{sy(py):.2f}" for px, py in points)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        return (
            f'<polyline points="{coords}" fill="none" stroke="{color}"'
            f' stroke-width="1.2"{dash_attr}/>'
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.2f} {height:.2f}">',
        f'<line x1="0" y1="{sy(0):.2f}" x2="{width:.2f}" y2="{sy(0):.2f}" stroke="#888" stroke-width="0.8"/>',
    ]
    from .trajectory import make_trajectory as _mk
    from .model import TrajectorySpec as _Spec, TrajectoryKind as _Kind

    for stride in strides:
        pts = stride["points"]
        if len(pts) < 2:
            continue
        x0, y0 = pts[0]
        spec = _Spec(
            kind=_Kind(stride["trajectory"]),
            stride_L=stride["span"],
            stride_H=_reference_height(stride["trajectory"]),
            period_s=1.0,
            tilt=stride["tilt"],
        )
        try:
            curve = _mk(spec)
            ref = [(x0 + px, y0 + py) for px, py in curve.swing_points]
            parts.append(poly(ref, "#c44", dash="3,3"))
        except ValidationError:
            pass
        parts.append(poly(pts, "#26c"))
    parts.append("</svg>")
    p = Path(path)
    try:
        p.write_text("\n".join(parts) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write SVG to {p}: {exc}") from exc


def _reference_height(kind: str) -> float:
    return 13.0 if kind == "rect1" else 5.0

"""YAML scenario files: parsing with key/line diagnostics, and serialization.

Every physical quantity carries its unit in the key name (``_m``, ``_db``,
``_dbm``, ``_rad`` ...).  Omitted keys take the case-study defaults.
"""

from __future__ import annotations

import math
import re
from importlib import resources
from typing import Any, Optional

import yaml

from .channel import ArrayConfig, FadingParams, PathLossParams, RcsModel
from .geometry import AngleSector, GeometryError, Obstacle, Point, Trajectory
from .handover import HandoverPolicy, PolicyMode
from .linkbudget import (
    AccessPoint,
    CommAssignment,
    CommLink,
    RadioParams,
    Scene,
    SensingConfiguration,
    UserEquipment,
)
from .simengine import Scenario

BUILTIN = ("scenario1", "scenario2")


class ScenarioParseError(ValueError):
    def __init__(self, key: str, line: Optional[int], message: str):
        self.key, self.line = key, line
        where = f" (line {line})" if line else ""
        super().__init__(f"{key}{where}: {message}")


class _Section(dict):
    """Mapping that remembers the source line of each key."""

    def __init__(self):
        super().__init__()
        self.lines: dict = {}


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _Section()
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        out[key] = loader.construct_object(value_node, deep=True)
        out.lines[key] = key_node.start_mark.line + 1
    return out


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
# YAML 1.1 needs a dot in exponent floats; also accept the 1.2 form ``24e9``
_LineLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?[0-9][0-9_]*(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


class _Reader:
    """Typed access to one mapping section, rejecting unknown keys."""

    def __init__(self, data, path: str, line: Optional[int] = None):
        if not isinstance(data, dict):
            raise ScenarioParseError(path or "<root>", line, "expected a mapping")
        self.data, self.path, self.line = data, path, line
        self.lines = getattr(data, "lines", {})
        self.used: set = set()

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def error(self, key, message):
        return ScenarioParseError(self._key(key), self.lines.get(key, self.line), message)

    def has(self, key):
        return key in self.data

    def raw(self, key, default=None):
        self.used.add(key)
        return self.data.get(key, default)

    def number(self, key, default=None, *, positive=False, non_negative=False, integer=False):
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            if default is None:
                raise self.error(key, "missing required value")
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(key, f"expected a number, got {value!r}")
        if integer:
            if isinstance(value, float) and not value.is_integer():
                raise self.error(key, f"expected an integer, got {value!r}")
            value = int(value)
        else:
            value = float(value)
            if math.isnan(value):
                raise self.error(key, "NaN is not allowed")
        if positive and not value > 0:
            raise self.error(key, f"must be positive, got {value!r}")
        if non_negative and value < 0:
            raise self.error(key, f"must be non-negative, got {value!r}")
        return value

    def optional_number(self, key):
        self.used.add(key)
        if self.data.get(key) is None:
            return None
        return self.number(key)

    def flag(self, key, default):
        self.used.add(key)
        value = self.data.get(key, default)
        if not isinstance(value, bool):
            raise self.error(key, f"expected true/false, got {value!r}")
        return value

    def point(self, key):
        self.used.add(key)
        value = self.data.get(key)
        if not (isinstance(value, (list, tuple)) and len(value) == 2):
            raise self.error(key, f"expected [x, y] in meters, got {value!r}")
        try:
            return Point(float(value[0]), float(value[1]))
        except (TypeError, ValueError, GeometryError) as exc:
            raise self.error(key, str(exc)) from None

    def section(self, key):
        self.used.add(key)
        value = self.data.get(key)
        if value is None:
            value = _Section()
        return _Reader(value, self._key(key), self.lines.get(key, self.line))

    def items(self, key):
        self.used.add(key)
        value = self.data.get(key) or []
        if not isinstance(value, list):
            raise self.error(key, "expected a list")
        line = self.lines.get(key, self.line)
        return [(f"{self._key(key)}[{i}]", item, line) for i, item in enumerate(value)]

    def finish(self):
        unknown = [k for k in self.data if k not in self.used]
        if unknown:
            raise self.error(unknown[0], "unknown key")


def _angle(reader: _Reader, stem: str, default: float) -> float:
    if reader.has(f"{stem}_rad") and reader.has(f"{stem}_deg"):
        raise reader.error(f"{stem}_deg", f"give either {stem}_rad or {stem}_deg")
    if reader.has(f"{stem}_deg"):
        return math.radians(reader.number(f"{stem}_deg"))
    return reader.number(f"{stem}_rad", default)


def _sectors(reader: _Reader) -> tuple[AngleSector, ...]:
    out = []
    for suffix, conv in (("rad", float), ("deg", math.radians)):
        for path, item, line in reader.items(f"exclusion_sectors_{suffix}"):
            if not (isinstance(item, list) and len(item) == 2):
                raise ScenarioParseError(path, line, "expected [start, end]")
            out.append(AngleSector(conv(item[0]), conv(item[1])))
    return tuple(out)


def _cfg(reader: _Reader, key: str) -> Optional[SensingConfiguration]:
    value = reader.raw(key)
    if value is None:
        return None
    try:
        return SensingConfiguration.from_label(str(value))
    except ValueError as exc:
        raise reader.error(key, str(exc)) from None


def _build(data) -> Scenario:
    root = _Reader(data, "")

    radio_r = root.section("radio")
    radio = RadioParams(
        tx_power_dbm=radio_r.number("tx_power_dbm", 40.0),
        noise_power_dbm=radio_r.number("noise_power_dbm", -60.0),
        si_power_dbm=radio_r.number("si_power_dbm", -45.0),
        carrier_hz=radio_r.number("carrier_hz", 24e9, positive=True),
    )
    radio_r.finish()

    pl_r = root.section("pathloss")
    exps = {}
    for k in ("exponent_los", "exponent_nlos"):
        exps[k] = pl_r.number(k, 2.1 if k == "exponent_los" else 3.1)
        if exps[k] < 1:
            raise pl_r.error(k, "path-loss exponent must be >= 1")
    pathloss = PathLossParams(
        exponent_los=exps["exponent_los"],
        exponent_nlos=exps["exponent_nlos"],
        ref_distance=pl_r.number("ref_distance_m", 1.0, positive=True),
        ref_attenuation_db=pl_r.number("ref_attenuation_db", 21.0),
        blockage_loss_db=pl_r.number("blockage_loss_db", 0.0, non_negative=True),
    )
    pl_r.finish()

    fad_r = root.section("fading")
    fading = FadingParams(
        rician_k_db=fad_r.number("rician_k_db", -5.0),
        enabled=fad_r.flag("enabled", True),
    )
    fad_r.finish()

    rcs_r = root.section("rcs")
    rcs = RcsModel(
        mean_rcs_dbsm=rcs_r.number("mean_rcs_dbsm", 0.0),
        fluctuating=rcs_r.flag("fluctuating", True),
    )
    rcs_r.finish()

    arr_r = root.section("array")
    default_n = arr_r.number("n_elements", 64, positive=True, integer=True)
    default_spacing = arr_r.number("element_spacing_wavelengths", 0.5, positive=True)
    arr_r.finish()

    aps = []
    for path, item, line in root.items("aps"):
        r = _Reader(item, path, line)
        n = r.number("n_elements", default_n, positive=True, integer=True)
        aps.append(
            AccessPoint(
                id=r.number("id", integer=True),
                position=r.point("position_m"),
                array=ArrayConfig(n, r.number("element_spacing_wavelengths", default_spacing, positive=True)),
                boresight=_angle(r, "boresight", math.pi / 2),
                max_range_m=r.number("max_range_m", math.inf, positive=True),
                exclusion_sectors=_sectors(r),
            )
        )
        r.finish()
    if not aps:
        raise ScenarioParseError("aps", root.lines.get("aps"), "at least one AP is required")

    ues = []
    for path, item, line in root.items("ues"):
        r = _Reader(item, path, line)
        ues.append(UserEquipment(r.number("id", integer=True), r.point("position_m")))
        r.finish()

    links = []
    for path, item, line in root.items("comm"):
        r = _Reader(item, path, line)
        links.append(
            CommLink(r.number("ap", integer=True), r.number("ue", integer=True), r.flag("downlink", True))
        )
        r.finish()

    obstacles = []
    for path, item, line in root.items("obstacles"):
        r = _Reader(item, path, line)
        try:
            obstacles.append(Obstacle(r.point("start_m"), r.point("end_m")))
        except GeometryError as exc:
            raise ScenarioParseError(path, line, str(exc)) from None
        r.finish()

    tr_r = root.section("trajectory")
    waypoints = []
    for path, item, line in tr_r.items("waypoints_m"):
        if not (isinstance(item, list) and len(item) == 2):
            raise ScenarioParseError(path, line, "expected [x, y] in meters")
        waypoints.append(Point(float(item[0]), float(item[1])))
    snapshots = tr_r.number("snapshots", 120, integer=True)
    if snapshots < 2:
        raise tr_r.error("snapshots", f"need at least 2 snapshots, got {snapshots}")
    try:
        trajectory = Trajectory(tuple(waypoints), snapshots)
    except GeometryError as exc:
        raise tr_r.error("waypoints_m", str(exc)) from None
    tr_r.finish()

    pol_r = root.section("policy")
    mode_raw = pol_r.raw("mode", "snrmax")
    try:
        mode = PolicyMode(str(mode_raw).lower())
    except ValueError:
        raise pol_r.error("mode", f"expected snrmax or qos, got {mode_raw!r}") from None
    try:
        policy = HandoverPolicy(
            mode=mode,
            enabled=pol_r.flag("enabled", True),
            qos_threshold_db=pol_r.number("qos_threshold_db", 15.0),
            hysteresis_db=pol_r.number("hysteresis_db", 0.0, non_negative=True),
            soft=pol_r.flag("soft", False),
            soft_window=pol_r.number("soft_window_snapshots", 3, positive=True, integer=True),
            soft_exit_threshold_db=pol_r.optional_number("soft_exit_threshold_db"),
            sensing_threshold_db=pol_r.optional_number("sensing_threshold_db"),
            switch_latency=pol_r.number("switch_latency_snapshots", 1, non_negative=True, integer=True),
            broadcast_requests=pol_r.flag("broadcast_requests", False),
            assisting_info=pol_r.flag("assisting_info", True),
            initial_cfg=_cfg(pol_r, "initial_cfg"),
        )
    except ValueError as exc:
        raise ScenarioParseError("policy", root.lines.get("policy"), str(exc)) from None
    pol_r.finish()

    sig_r = root.section("signaling")
    bus_latency = sig_r.number("bus_latency_snapshots", 0, non_negative=True, integer=True)
    drop_p = sig_r.number("drop_probability", 0.0, non_negative=True)
    if drop_p > 1:
        raise sig_r.error("drop_probability", "must be within [0, 1]")
    sig_r.finish()

    mc_r = root.section("montecarlo")
    region = mc_r.raw("ue_region_m")
    if region is not None:
        if not (isinstance(region, list) and len(region) == 4):
            raise mc_r.error("ue_region_m", "expected [x_min, x_max, y_min, y_max]")
        region = tuple(float(v) for v in region)
    ue_count = mc_r.number("ue_count", 2, non_negative=True, integer=True)
    mc_r.finish()

    name = str(root.raw("name", "scenario"))
    seed = root.number("seed", 0, non_negative=True, integer=True)
    root.finish()

    try:
        scene = Scene(
            aps=tuple(aps), ues=tuple(ues), obstacles=tuple(obstacles),
            radio=radio, pathloss=pathloss, fading=fading, rcs=rcs,
        )
        comm = CommAssignment(tuple(links))
        scenario = Scenario(
            scene=scene, trajectory=trajectory, comm=comm, policy=policy, seed=seed,
            name=name, bus_latency=bus_latency, drop_probability=drop_p,
            ue_region=region, ue_drop_count=ue_count,
        )
        scenario.validate()
    except (ValueError, KeyError) as exc:
        raise ScenarioParseError("<scenario>", None, str(exc)) from None
    return scenario


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text."""
    try:
        data = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioParseError("<yaml>", mark.line + 1 if mark else None, str(exc)) from None
    if data is None:
        data = _Section()
    return _build(data)


def load_scenario(path_or_name: str) -> Scenario:
    """Load a scenario file, or a shipped one by name (``scenario1``/``scenario2``)."""
    if path_or_name in BUILTIN:
        text = resources.files("isac_handover").joinpath(f"data/{path_or_name}.yaml").read_text()
        return parse_scenario(text)
    with open(path_or_name, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    scene, pol = s.scene, s.policy

    def pt(p: Point):
        return [p.x, p.y]

    return {
        "name": s.name,
        "seed": s.seed,
        "radio": {
            "tx_power_dbm": scene.radio.tx_power_dbm,
            "noise_power_dbm": scene.radio.noise_power_dbm,
            "si_power_dbm": scene.radio.si_power_dbm,
            "carrier_hz": scene.radio.carrier_hz,
        },
        "pathloss": {
            "exponent_los": scene.pathloss.exponent_los,
            "exponent_nlos": scene.pathloss.exponent_nlos,
            "ref_distance_m": scene.pathloss.ref_distance,
            "ref_attenuation_db": scene.pathloss.ref_attenuation_db,
            "blockage_loss_db": scene.pathloss.blockage_loss_db,
        },
        "fading": {"rician_k_db": scene.fading.rician_k_db, "enabled": scene.fading.enabled},
        "rcs": {"mean_rcs_dbsm": scene.rcs.mean_rcs_dbsm, "fluctuating": scene.rcs.fluctuating},
        "aps": [
            {
                "id": ap.id,
                "position_m": pt(ap.position),
                "n_elements": ap.array.n_elements,
                "element_spacing_wavelengths": ap.array.element_spacing,
                "boresight_rad": ap.boresight,
                "max_range_m": ap.max_range_m,
                "exclusion_sectors_rad": [[sec.start, sec.end] for sec in ap.exclusion_sectors],
            }
            for ap in scene.aps
        ],
        "ues": [{"id": u.id, "position_m": pt(u.position)} for u in scene.ues],
        "comm": [{"ap": l.ap_id, "ue": l.ue_id, "downlink": l.downlink} for l in s.comm.links],
        "obstacles": [{"start_m": pt(o.start), "end_m": pt(o.end)} for o in scene.obstacles],
        "trajectory": {
            "snapshots": s.trajectory.snapshot_count,
            "waypoints_m": [pt(p) for p in s.trajectory.waypoints],
        },
        "policy": {
            "mode": pol.mode.value,
            "enabled": pol.enabled,
            "qos_threshold_db": pol.qos_threshold_db,
            "hysteresis_db": pol.hysteresis_db,
            "soft": pol.soft,
            "soft_window_snapshots": pol.soft_window,
            "soft_exit_threshold_db": pol.soft_exit_threshold_db,
            "sensing_threshold_db": pol.sensing_threshold_db,
            "switch_latency_snapshots": pol.switch_latency,
            "broadcast_requests": pol.broadcast_requests,
            "assisting_info": pol.assisting_info,
            "initial_cfg": pol.initial_cfg.label if pol.initial_cfg else None,
        },
        "signaling": {
            "bus_latency_snapshots": s.bus_latency,
            "drop_probability": s.drop_probability,
        },
        "montecarlo": {
            "ue_region_m": list(s.ue_region) if s.ue_region else None,
            "ue_count": s.ue_drop_count,
        },
    }


def serialize_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False)

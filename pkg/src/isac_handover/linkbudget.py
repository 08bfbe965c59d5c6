"""Per-snapshot link budgets for sensing echoes and downlink communication.

All powers are in dBm and all ratios in dB unless a name says ``_mw``.  Zero
linear power is floored at ``FLOOR_DBM`` so every quantity stays finite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .channel import (
    ArrayConfig,
    FadingParams,
    PathLossParams,
    RcsModel,
    Rng,
    beam_gain,
    draw_rcs,
    draw_small_scale,
    los_phase,
    path_loss_db,
)
from .geometry import AngleSector, LosState, Obstacle, Point, bearing, los_state, wrap_angle

FLOOR_DBM = -400.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0.0:
        return FLOOR_DBM
    return max(10.0 * math.log10(value), FLOOR_DBM)


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = 40.0
    noise_power_dbm: float = -60.0
    si_power_dbm: float = -45.0
    carrier_hz: float = 24e9

    def __post_init__(self):
        for name in ("tx_power_dbm", "noise_power_dbm", "si_power_dbm", "carrier_hz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.tx_power_dbm <= self.noise_power_dbm:
            raise ValueError("tx_power_dbm must exceed noise_power_dbm")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")


@dataclass(frozen=True)
class AccessPoint:
    """A sensing/communication node with a ULA facing ``boresight`` (global bearing)."""

    id: int
    position: Point
    array: ArrayConfig = ArrayConfig()
    boresight: float = math.pi / 2
    max_range_m: float = math.inf
    exclusion_sectors: tuple[AngleSector, ...] = ()

    def local_angle(self, target: Point) -> float:
        return wrap_angle(bearing(self.position, target) - self.boresight)


@dataclass(frozen=True)
class UserEquipment:
    id: int
    position: Point


@dataclass(frozen=True, order=True)
class SensingConfiguration:
    """Mono-static when ``tx == rx``, bi-static otherwise."""

    tx: int
    rx: int

    @classmethod
    def mono(cls, ap_id: int) -> SensingConfiguration:
        return cls(ap_id, ap_id)

    @classmethod
    def bi(cls, tx_ap_id: int, rx_ap_id: int) -> SensingConfiguration:
        if tx_ap_id == rx_ap_id:
            raise ValueError("bi-static sensing needs distinct tx and rx APs")
        return cls(tx_ap_id, rx_ap_id)

    @property
    def is_mono(self) -> bool:
        return self.tx == self.rx

    @property
    def ap_ids(self) -> frozenset[int]:
        return frozenset((self.tx, self.rx))

    @property
    def label(self) -> str:
        if self.is_mono:
            return f"MS{self.tx}"
        return f"BS{self.tx}{self.rx}" if self.tx < 10 and self.rx < 10 else f"BS{self.tx}-{self.rx}"

    def tie_key(self) -> tuple[int, int, int]:
        """Ordering used to break exact metric ties: mono first, then lowest ids."""
        return (0 if self.is_mono else 1, self.tx, self.rx)

    @classmethod
    def from_label(cls, label: str) -> SensingConfiguration:
        label = label.strip().upper()
        if label.startswith("MS"):
            return cls.mono(int(label[2:]))
        if label.startswith("BS"):
            body = label[2:]
            if "-" in body:
                tx, rx = body.split("-")
            elif len(body) == 2:
                tx, rx = body[0], body[1]
            else:
                raise ValueError(f"ambiguous bi-static label {label!r}; use BS<tx>-<rx>")
            return cls.bi(int(tx), int(rx))
        raise ValueError(f"unknown configuration label {label!r}")

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class CommLink:
    ap_id: int
    ue_id: int
    downlink: bool = True


@dataclass(frozen=True)
class CommAssignment:
    links: tuple[CommLink, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        ues = [l.ue_id for l in self.links]
        aps = [l.ap_id for l in self.links]
        if len(set(ues)) != len(ues):
            raise ValueError("each UE must be served by exactly one AP")
        if len(set(aps)) != len(aps):
            raise ValueError("an AP can serve at most one UE")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> CommAssignment:
        return cls(tuple(CommLink(ap, ue) for ap, ue in pairs))

    @property
    def serving_aps(self) -> frozenset[int]:
        return frozenset(l.ap_id for l in self.links)

    @property
    def ue_ids(self) -> tuple[int, ...]:
        return tuple(l.ue_id for l in self.links)

    def serving_ap(self, ue_id: int) -> int:
        for link in self.links:
            if link.ue_id == ue_id:
                return link.ap_id
        raise KeyError(f"UE {ue_id} is not served")

    def link_of_ap(self, ap_id: int) -> Optional[CommLink]:
        for link in self.links:
            if link.ap_id == ap_id:
                return link
        return None

    def without_ue(self, ue_id: int) -> CommAssignment:
        return CommAssignment(tuple(l for l in self.links if l.ue_id != ue_id))


NO_COMM = CommAssignment()


@dataclass(frozen=True)
class Scene:
    """Static radio world a snapshot is evaluated in."""

    aps: tuple[AccessPoint, ...]
    ues: tuple[UserEquipment, ...] = ()
    obstacles: tuple[Obstacle, ...] = ()
    radio: RadioParams = RadioParams()
    pathloss: PathLossParams = PathLossParams()
    fading: FadingParams = FadingParams()
    rcs: RcsModel = RcsModel()

    def __post_init__(self):
        for name in ("aps", "ues", "obstacles"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        ap_ids = [a.id for a in self.aps]
        ue_ids = [u.id for u in self.ues]
        if len(set(ap_ids)) != len(ap_ids):
            raise ValueError("AP ids must be unique")
        if len(set(ue_ids)) != len(ue_ids):
            raise ValueError("UE ids must be unique")
        object.__setattr__(self, "_ap_index", {a.id: a for a in self.aps})
        object.__setattr__(self, "_ue_index", {u.id: u for u in self.ues})

    def ap(self, ap_id: int) -> AccessPoint:
        try:
            return self._ap_index[ap_id]
        except KeyError:
            raise KeyError(f"unknown AP {ap_id}") from None

    def ue(self, ue_id: int) -> UserEquipment:
        try:
            return self._ue_index[ue_id]
        except KeyError:
            raise KeyError(f"unknown UE {ue_id}") from None

    @property
    def ap_ids(self) -> tuple[int, ...]:
        return tuple(a.id for a in self.aps)


# --- small-scale draws ------------------------------------------------------------


def _ap_obj(ap_id):
    return ("ap-obj", ap_id)


def _ap_ap(a, b):
    return ("ap-ap", min(a, b), max(a, b))


def _ap_ue(ap_id, ue_id):
    return ("ap-ue", ap_id, ue_id)


def _obj_ue(ue_id):
    return ("obj-ue", ue_id)


@dataclass(frozen=True)
class ChannelDraws:
    """Random channel state of one snapshot: RCS draw and per-link coefficients.

    Missing links read as ``h = 1``.  Links are reciprocal, so a mono-static echo
    sees the same coefficient twice.
    """

    rcs: float
    coeffs: Mapping[tuple, complex] = field(default_factory=dict)
    deterministic: bool = False

    def h(self, key) -> complex:
        return self.coeffs.get(key, 1.0 + 0.0j)

    @classmethod
    def mean(cls, scene: Scene) -> ChannelDraws:
        return cls(rcs=scene.rcs.mean_linear, deterministic=True)


def draw_snapshot(scene: Scene, object_pos: Point, rng: Rng) -> ChannelDraws:
    """Draw every link of the snapshot in a fixed order (replayable from the Rng)."""
    if not scene.fading.enabled and not scene.rcs.fluctuating:
        return ChannelDraws.mean(scene)
    rcs = draw_rcs(scene.rcs, rng)
    coeffs: dict[tuple, complex] = {}
    if scene.fading.enabled:
        carrier = scene.radio.carrier_hz

        def draw(key, a: Point, b: Point):
            state = los_state(a, b, scene.obstacles)
            coeffs[key] = draw_small_scale(
                scene.fading, state, rng, los_phase(a.distance_to(b), carrier)
            )

        aps = sorted(scene.aps, key=lambda a: a.id)
        ues = sorted(scene.ues, key=lambda u: u.id)
        for ap in aps:
            if ap.position != object_pos:
                draw(_ap_obj(ap.id), ap.position, object_pos)
        for a, b in itertools.combinations(aps, 2):
            draw(_ap_ap(a.id, b.id), a.position, b.position)
        for ap in aps:
            for ue in ues:
                draw(_ap_ue(ap.id, ue.id), ap.position, ue.position)
        for ue in ues:
            if ue.position != object_pos:
                draw(_obj_ue(ue.id), object_pos, ue.position)
    return ChannelDraws(rcs=rcs, coeffs=coeffs)


# --- arrays -----------------------------------------------------------------------


@dataclass(frozen=True)
class ArraySplit:
    tx_elements: int
    rx_elements: int
    rx_full_duplex: bool


def _half(n: int) -> int:
    if n % 2:
        raise ValueError(f"cannot split an odd element count ({n}) in half")
    return n // 2


def effective_arrays(
    cfg: SensingConfiguration,
    base: ArrayConfig,
    comm: CommAssignment = NO_COMM,
    rx_base: Optional[ArrayConfig] = None,
) -> ArraySplit:
    """Element counts used for the sensing Tx and Rx beams of ``cfg``.

    A mono-static AP splits its array between transmit and receive halves.  A
    bi-static endpoint that also serves a UE gives half its array to the downlink;
    on the receive side this makes the AP full-duplex.
    """
    rx_base = rx_base or base
    serving = comm.serving_aps
    if cfg.is_mono:
        if cfg.tx in serving:
            raise ValueError(f"AP {cfg.tx} serves a UE and cannot also sense mono-statically")
        half = _half(base.n_elements)
        return ArraySplit(half, half, True)
    tx = _half(base.n_elements) if cfg.tx in serving else base.n_elements
    if cfg.rx in serving:
        return ArraySplit(tx, _half(rx_base.n_elements), True)
    return ArraySplit(tx, rx_base.n_elements, False)


def scene_arrays(cfg: SensingConfiguration, scene: Scene, comm: CommAssignment) -> ArraySplit:
    return effective_arrays(cfg, scene.ap(cfg.tx).array, comm, scene.ap(cfg.rx).array)


def comm_elements(ap: AccessPoint, cfg: Optional[SensingConfiguration]) -> int:
    """Downlink element count of a serving AP; halved while it holds a sensing role."""
    if cfg is not None and ap.id in cfg.ap_ids:
        return _half(ap.array.n_elements)
    return ap.array.n_elements


# --- hops -------------------------------------------------------------------------


@dataclass
class _Hop:
    loss_db: float
    state: LosState
    clamped: bool


def _hop(a: Point, b: Point, scene: Scene) -> _Hop:
    d = a.distance_to(b)
    state = los_state(a, b, scene.obstacles)
    return _Hop(path_loss_db(d, state, scene.pathloss), state, d < scene.pathloss.ref_distance)


def _gain_db(gain: float) -> float:
    if gain <= 0.0:
        return FLOOR_DBM
    return 10.0 * math.log10(gain)


def _h_db(h: complex) -> float:
    mag = abs(h)
    if mag == 0.0:
        return FLOOR_DBM
    return 20.0 * math.log10(mag)


# --- sensing ----------------------------------------------------------------------


@dataclass(frozen=True)
class SensingBudget:
    cfg: SensingConfiguration
    echo_dbm: float
    noise_mw: float
    si_mw: float
    c2s_mw: Mapping[int, float]
    warnings: tuple[str, ...] = ()

    @property
    def denominator_mw(self) -> float:
        return self.noise_mw + self.si_mw + sum(self.c2s_mw.values())

    @property
    def sinr_db(self) -> float:
        return self.echo_dbm - 10.0 * math.log10(self.denominator_mw)


def sensing_echo_power_dbm(
    cfg: SensingConfiguration,
    object_pos: Point,
    scene: Scene,
    comm: CommAssignment = NO_COMM,
    draws: Optional[ChannelDraws] = None,
    tx_steer: Optional[float] = None,
    rx_steer: Optional[float] = None,
    _warnings: Optional[list] = None,
) -> float:
    """Received echo power of the object for configuration ``cfg``.

    Beams point at the object unless ``tx_steer``/``rx_steer`` (local array angles)
    override them.
    """
    draws = draws if draws is not None else ChannelDraws.mean(scene)
    tx_ap, rx_ap = scene.ap(cfg.tx), scene.ap(cfg.rx)
    if object_pos == tx_ap.position or object_pos == rx_ap.position:
        raise ValueError(f"object collocated with a sensing AP in {cfg.label}")
    split = scene_arrays(cfg, scene, comm)

    tx_local = tx_ap.local_angle(object_pos)
    rx_local = rx_ap.local_angle(object_pos)
    g_tx = beam_gain(
        tx_ap.array.with_elements(split.tx_elements),
        tx_local if tx_steer is None else tx_steer,
        tx_local,
    )
    g_rx = beam_gain(
        rx_ap.array.with_elements(split.rx_elements),
        rx_local if rx_steer is None else rx_steer,
        rx_local,
    )
    if g_tx * g_rx <= 0.0:
        return FLOOR_DBM

    hop_tx = _hop(tx_ap.position, object_pos, scene)
    if cfg.is_mono:
        hop_rx = hop_tx
        h = draws.h(_ap_obj(cfg.tx)) ** 2
    else:
        hop_rx = _hop(object_pos, rx_ap.position, scene)
        h = draws.h(_ap_obj(cfg.tx)) * draws.h(_ap_obj(cfg.rx))
    if _warnings is not None and (hop_tx.clamped or hop_rx.clamped):
        _warnings.append(f"{cfg.label}: object closer than reference distance; path loss clamped")

    echo = (
        scene.radio.tx_power_dbm
        + 10.0 * math.log10(g_tx * g_rx)
        - (hop_tx.loss_db + hop_rx.loss_db)
        + _lin_db(draws.rcs)
        + _h_db(h)
    )
    return max(echo, FLOOR_DBM)


def _lin_db(x: float) -> float:
    return FLOOR_DBM if x <= 0.0 else 10.0 * math.log10(x)


def c2s_interference_dbm(
    comm_ap_id: int,
    cfg: SensingConfiguration,
    object_pos: Point,
    scene: Scene,
    comm: CommAssignment,
    draws: Optional[ChannelDraws] = None,
) -> float:
    """Downlink of ``comm_ap_id`` leaking into the sensing receiver of ``cfg``.

    Direct AP-to-AP path only; the Tx beam is steered at the served UE and the
    sensing Rx beam at the object.
    """
    draws = draws if draws is not None else ChannelDraws.mean(scene)
    if comm_ap_id == cfg.rx:
        raise ValueError("C2S needs distinct communicating and sensing-receive APs")
    link = comm.link_of_ap(comm_ap_id)
    if link is None:
        raise KeyError(f"AP {comm_ap_id} serves no UE")
    comm_ap, rx_ap = scene.ap(comm_ap_id), scene.ap(cfg.rx)
    ue = scene.ue(link.ue_id)
    split = scene_arrays(cfg, scene, comm)

    g_tx = beam_gain(
        comm_ap.array.with_elements(comm_elements(comm_ap, cfg)),
        comm_ap.local_angle(ue.position),
        comm_ap.local_angle(rx_ap.position),
    )
    g_rx = beam_gain(
        rx_ap.array.with_elements(split.rx_elements),
        rx_ap.local_angle(object_pos),
        rx_ap.local_angle(comm_ap.position),
    )
    hop = _hop(comm_ap.position, rx_ap.position, scene)
    return max(
        scene.radio.tx_power_dbm
        + _gain_db(g_tx)
        + _gain_db(g_rx)
        - hop.loss_db
        + _h_db(draws.h(_ap_ap(comm_ap_id, cfg.rx))),
        FLOOR_DBM,
    )


def sensing_budget(
    cfg: SensingConfiguration,
    object_pos: Point,
    scene: Scene,
    comm: CommAssignment = NO_COMM,
    draws: Optional[ChannelDraws] = None,
) -> SensingBudget:
    draws = draws if draws is not None else ChannelDraws.mean(scene)
    warnings: list[str] = []
    echo = sensing_echo_power_dbm(cfg, object_pos, scene, comm, draws, _warnings=warnings)
    split = scene_arrays(cfg, scene, comm)
    si = db_to_linear(scene.radio.si_power_dbm) if split.rx_full_duplex else 0.0
    c2s = {}
    for link in comm.links:
        if link.downlink and link.ap_id != cfg.rx:
            c2s[link.ap_id] = db_to_linear(
                c2s_interference_dbm(link.ap_id, cfg, object_pos, scene, comm, draws)
            )
    return SensingBudget(
        cfg=cfg,
        echo_dbm=echo,
        noise_mw=db_to_linear(scene.radio.noise_power_dbm),
        si_mw=si,
        c2s_mw=c2s,
        warnings=tuple(warnings),
    )


def sensing_sinr_db(
    cfg: SensingConfiguration,
    object_pos: Point,
    scene: Scene,
    comm: CommAssignment = NO_COMM,
    draws: Optional[ChannelDraws] = None,
) -> float:
    return sensing_budget(cfg, object_pos, scene, comm, draws).sinr_db


def decision_metric_db(
    cfg: SensingConfiguration,
    object_pos: Point,
    scene: Scene,
    comm: CommAssignment = NO_COMM,
) -> float:
    """Fading-free, mean-RCS sensing SINR used for every handover comparison."""
    return sensing_sinr_db(cfg, object_pos, scene, comm, ChannelDraws.mean(scene))


# --- communication ----------------------------------------------------------------


@dataclass(frozen=True)
class CommBudget:
    ue_id: int
    signal_dbm: float
    noise_mw: float
    s2c_direct_mw: float
    s2c_reflected_mw: float

    @property
    def denominator_mw(self) -> float:
        return self.noise_mw + self.s2c_direct_mw + self.s2c_reflected_mw

    @property
    def sinr_db(self) -> float:
        return self.signal_dbm - 10.0 * math.log10(self.denominator_mw)


def comm_budget(
    ue_id: int,
    comm: CommAssignment,
    cfg: Optional[SensingConfiguration],
    object_pos: Point,
    scene: Scene,
    draws: Optional[ChannelDraws] = None,
) -> CommBudget:
    """Downlink SINR terms of one UE; other downlinks never interfere with it."""
    draws = draws if draws is not None else ChannelDraws.mean(scene)
    ap = scene.ap(comm.serving_ap(ue_id))
    ue = scene.ue(ue_id)
    p_tx = scene.radio.tx_power_dbm

    n_comm = comm_elements(ap, cfg)
    hop = _hop(ap.position, ue.position, scene)
    signal = p_tx + 10.0 * math.log10(n_comm) - hop.loss_db + _h_db(draws.h(_ap_ue(ap.id, ue_id)))

    direct = reflected = 0.0
    if cfg is not None:
        tx_ap = scene.ap(cfg.tx)
        split = scene_arrays(cfg, scene, comm)
        tx_array = tx_ap.array.with_elements(split.tx_elements)
        steer = tx_ap.local_angle(object_pos)
        g_leak = beam_gain(tx_array, steer, tx_ap.local_angle(ue.position))
        leak_hop = _hop(tx_ap.position, ue.position, scene)
        direct = db_to_linear(
            p_tx + _gain_db(g_leak) - leak_hop.loss_db + _h_db(draws.h(_ap_ue(tx_ap.id, ue_id)))
        )
        if object_pos != ue.position:
            hop1 = _hop(tx_ap.position, object_pos, scene)
            hop2 = _hop(object_pos, ue.position, scene)
            h = draws.h(_ap_obj(tx_ap.id)) * draws.h(_obj_ue(ue_id))
            reflected = db_to_linear(
                p_tx
                + 10.0 * math.log10(split.tx_elements)
                - (hop1.loss_db + hop2.loss_db)
                + _lin_db(draws.rcs)
                + _h_db(h)
            )
    return CommBudget(
        ue_id=ue_id,
        signal_dbm=signal,
        noise_mw=db_to_linear(scene.radio.noise_power_dbm),
        s2c_direct_mw=direct,
        s2c_reflected_mw=reflected,
    )


def comm_sinr_db(
    ue_id: int,
    comm: CommAssignment,
    cfg: Optional[SensingConfiguration],
    object_pos: Point,
    scene: Scene,
    draws: Optional[ChannelDraws] = None,
) -> float:
    return comm_budget(ue_id, comm, cfg, object_pos, scene, draws).sinr_db


# --- snapshot report --------------------------------------------------------------


@dataclass(frozen=True)
class CandidateMetrics:
    decision_metric_db: float
    realized_sinr_db: float
    predicted_comm_sinr_db: Mapping[int, float]


@dataclass(frozen=True)
class SnapshotReport:
    snapshot: int
    object_pos: Point
    active_cfg: Optional[SensingConfiguration]
    candidates: Mapping[SensingConfiguration, CandidateMetrics]
    comm_sinr_db: Mapping[int, float]
    si_dbm: float = FLOOR_DBM
    c2s_dbm: float = FLOOR_DBM
    s2c_dbm: Mapping[int, float] = field(default_factory=dict)
    denominator_mw: float = 0.0
    realized_sensing_sinr_db: float = FLOOR_DBM
    warnings: tuple[str, ...] = ()
    draws: Optional[ChannelDraws] = field(default=None, repr=False, compare=False)

    def metric(self, cfg: SensingConfiguration) -> float:
        return self.candidates[cfg].decision_metric_db

    def best(self) -> SensingConfiguration:
        return max(self.candidates, key=lambda c: (self.metric(c), _neg_key(c)))


def _neg_key(cfg: SensingConfiguration) -> tuple[int, ...]:
    return tuple(-k for k in cfg.tie_key())


def all_configurations(ap_ids: Sequence[int]) -> list[SensingConfiguration]:
    ids = sorted(ap_ids)
    return [SensingConfiguration.mono(a) for a in ids] + [
        SensingConfiguration.bi(t, r) for t, r in itertools.permutations(ids, 2)
    ]


def snapshot_report(
    scene: Scene,
    snapshot_idx: int,
    object_pos: Point,
    active_cfg: Optional[SensingConfiguration],
    comm: CommAssignment = NO_COMM,
    rng: Optional[Rng] = None,
    candidates: Optional[Sequence[SensingConfiguration]] = None,
    draws: Optional[ChannelDraws] = None,
    include_comm: bool = True,
) -> SnapshotReport:
    """Evaluate every candidate's metrics plus the realized budget of ``active_cfg``.

    Draws come from ``draws`` if given, else from ``rng``, else the mean channel.
    ``include_comm=False`` skips all downlink SINRs (sensing-only consumers).
    """
    if candidates is None:
        candidates = all_configurations(scene.ap_ids)
    if draws is None:
        draws = draw_snapshot(scene, object_pos, rng) if rng is not None else ChannelDraws.mean(scene)
    mean = ChannelDraws.mean(scene)

    metrics: dict[SensingConfiguration, CandidateMetrics] = {}
    warnings: list[str] = []
    for cfg in candidates:
        b_mean = sensing_budget(cfg, object_pos, scene, comm, mean)
        warnings.extend(b_mean.warnings)
        realized = b_mean.sinr_db if draws.deterministic else sensing_sinr_db(
            cfg, object_pos, scene, comm, draws
        )
        predicted = {
            ue: comm_sinr_db(ue, comm, cfg, object_pos, scene, mean)
            for ue in (comm.ue_ids if include_comm else ())
        }
        metrics[cfg] = CandidateMetrics(b_mean.sinr_db, realized, predicted)

    comm_real: dict[int, float] = {}
    s2c: dict[int, float] = {}
    for ue in comm.ue_ids if include_comm else ():
        cb = comm_budget(ue, comm, active_cfg, object_pos, scene, draws)
        comm_real[ue] = cb.sinr_db
        s2c[ue] = linear_to_db(cb.s2c_direct_mw + cb.s2c_reflected_mw)

    si_dbm = c2s_dbm = FLOOR_DBM
    denominator = 0.0
    realized_active = FLOOR_DBM
    if active_cfg is not None:
        budget = sensing_budget(active_cfg, object_pos, scene, comm, draws)
        si_dbm = linear_to_db(budget.si_mw)
        c2s_dbm = linear_to_db(sum(budget.c2s_mw.values()))
        denominator = budget.denominator_mw
        realized_active = budget.sinr_db

    return SnapshotReport(
        snapshot=snapshot_idx,
        object_pos=object_pos,
        active_cfg=active_cfg,
        candidates=metrics,
        comm_sinr_db=comm_real,
        si_dbm=si_dbm,
        c2s_dbm=c2s_dbm,
        s2c_dbm=s2c,
        denominator_mw=denominator,
        realized_sensing_sinr_db=realized_active,
        warnings=tuple(dict.fromkeys(warnings)),
        draws=draws,
    )

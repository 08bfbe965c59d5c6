"""Snapshot loop, random UE drops and the Monte Carlo harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .channel import Rng, beam_gain, path_loss_db
from .geometry import Point, Trajectory, los_state, sample_trajectory
from .handover import (
    ControllerState,
    HandoverEvent,
    HandoverPolicy,
    PolicyMode,
    SoftOverlap,
    Stable,
    activate_due,
    combine_soft,
    coverage_trigger,
    enumerate_configs,
    initial_state,
    resolve_acks,
    select_config,
    step,
)
from .linkbudget import (
    FLOOR_DBM,
    CandidateMetrics,
    ChannelDraws,
    CommAssignment,
    CommLink,
    NO_COMM,
    Scene,
    SensingConfiguration,
    SnapshotReport,
    UserEquipment,
    _gain_db,
    comm_elements,
    db_to_linear,
    decision_metric_db,
    draw_snapshot,
    scene_arrays,
    sensing_echo_power_dbm,
    sensing_sinr_db,
    snapshot_report,
)
from .signaling import ControlBus, HandoverAck, Message, SensingNode


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """Complete world description for one simulation run."""

    scene: Scene
    trajectory: Trajectory
    comm: CommAssignment = NO_COMM
    policy: HandoverPolicy = HandoverPolicy()
    seed: int = 0
    name: str = "scenario"
    bus_latency: int = 0
    drop_probability: float = 0.0
    ue_region: Optional[tuple[float, float, float, float]] = None  # x_min, x_max, y_min, y_max
    ue_drop_count: int = 2

    @property
    def aps(self):
        return self.scene.aps

    @property
    def ues(self):
        return self.scene.ues

    def validate(self) -> None:
        if not self.scene.aps:
            raise ScenarioError("scenario needs at least one AP")
        ap_ids = set(self.scene.ap_ids)
        ue_ids = {u.id for u in self.scene.ues}
        for link in self.comm.links:
            if link.ap_id not in ap_ids:
                raise ScenarioError(f"comm link references unknown AP {link.ap_id}")
            if link.ue_id not in ue_ids:
                raise ScenarioError(f"comm link references unknown UE {link.ue_id}")
        cfg = self.policy.initial_cfg
        if cfg is not None and not cfg.ap_ids <= ap_ids:
            raise ScenarioError(f"initial configuration {cfg.label} references unknown APs")
        for ap in self.scene.aps:
            if ap.array.n_elements % 2:
                raise ScenarioError(f"AP {ap.id} needs an even element count to split its array")
        if self.bus_latency < 0:
            raise ScenarioError("bus_latency must be non-negative")
        if self.ue_region is not None:
            x0, x1, y0, y1 = self.ue_region
            if not (x0 < x1 and y0 < y1):
                raise ScenarioError("ue_region must be a non-empty rectangle")

    def default_ue_region(self, margin: float = 60.0) -> tuple[float, float, float, float]:
        if self.ue_region is not None:
            return self.ue_region
        xs = [a.position.x for a in self.scene.aps]
        ys = [a.position.y for a in self.scene.aps]
        return (min(xs) - margin, max(xs) + margin, min(ys) - margin, max(ys) + margin)


@dataclass(frozen=True)
class TraceRow:
    snapshot: int
    object_pos: Point
    active_cfg: SensingConfiguration
    sensing_cfgs: tuple[SensingConfiguration, ...]
    decision_metric_db: dict
    active_metric_db: float
    realized_sensing_sinr_db: float
    comm_sinr_db: dict
    events: tuple[HandoverEvent, ...]
    report: SnapshotReport = field(repr=False, compare=False)


@dataclass
class TraceLog:
    scenario: Scenario
    rows: list[TraceRow]
    events: list[HandoverEvent]
    messages: list[Message]
    delivered: list[Message]

    def __len__(self):
        return len(self.rows)

    @property
    def config_sequence(self) -> list[SensingConfiguration]:
        seq = [self.rows[0].active_cfg] if self.rows else []
        seq += [e.to_cfg for e in self.events]
        return seq


def _initial_cfg(scenario: Scenario, report: SnapshotReport) -> SensingConfiguration:
    if scenario.policy.initial_cfg is not None:
        return scenario.policy.initial_cfg
    return select_config(list(report.candidates), report, scenario.policy, scenario.comm)


def _realized(cfg, report: SnapshotReport, scene, comm) -> float:
    if cfg in report.candidates:
        return report.candidates[cfg].realized_sinr_db
    return sensing_sinr_db(cfg, report.object_pos, scene, comm, report.draws)


def _metric(cfg, report: SnapshotReport, scene, comm) -> float:
    if cfg in report.candidates:
        return report.candidates[cfg].decision_metric_db
    return decision_metric_db(cfg, report.object_pos, scene, comm)


def run(scenario: Scenario) -> TraceLog:
    """Simulate the scenario snapshot by snapshot; deterministic given the seed."""
    scenario.validate()
    scene, comm, policy = scenario.scene, scenario.comm, scenario.policy
    positions = sample_trajectory(scenario.trajectory)
    channel_rng = Rng(scenario.seed, 0)
    bus = ControlBus(
        nodes=scene.ap_ids,
        latency=scenario.bus_latency,
        drop_probability=scenario.drop_probability,
        rng=Rng(scenario.seed, 1) if scenario.drop_probability else None,
    )
    nodes = {ap_id: SensingNode(ap_id) for ap_id in scene.ap_ids}

    state: Optional[ControllerState] = None
    acks: dict = {}
    ack_key = None
    rows: list[TraceRow] = []

    for t, pos in enumerate(positions):
        candidates = enumerate_configs(scene, comm, policy, pos)
        draws = draw_snapshot(scene, pos, channel_rng)
        active = state.active_cfg if state else None
        report = snapshot_report(scene, t, pos, active, comm, candidates=candidates, draws=draws)
        if state is None:
            state = initial_state(_initial_cfg(scenario, report))
            report = snapshot_report(
                scene, t, pos, state.active_cfg, comm, candidates=candidates, draws=draws
            )

        n_events = len(state.history)
        state, outgoing = step(state, report, policy, scene, t, comm)
        for msg in outgoing:
            bus.send(msg)

        while True:
            if state.pending is not None and ack_key != state.pending.decided_at:
                ack_key, acks = state.pending.decided_at, {}
            due = bus.deliver_due(t)
            for msg in due:
                for reply in nodes[msg.to].handle(msg, scene, report):
                    bus.send(reply)
                if (
                    isinstance(msg.payload, HandoverAck)
                    and state.pending is not None
                    and msg.to == state.pending.sender
                ):
                    acks[msg.sender] = msg.payload
            state = resolve_acks(state, policy, acks, t)
            if not due:
                break
        state = activate_due(state, t, policy)

        if state.active_cfg != report.active_cfg:
            report = snapshot_report(
                scene, t, pos, state.active_cfg, comm, candidates=candidates, draws=draws
            )
        sensing = state.sensing_cfgs
        realized = _realized(state.active_cfg, report, scene, comm)
        if isinstance(state.phase, SoftOverlap):
            realized = combine_soft(_realized(state.phase.source, report, scene, comm), realized)
        rows.append(
            TraceRow(
                snapshot=t,
                object_pos=pos,
                active_cfg=state.active_cfg,
                sensing_cfgs=sensing,
                decision_metric_db={c: m.decision_metric_db for c, m in report.candidates.items()},
                active_metric_db=_metric(state.active_cfg, report, scene, comm),
                realized_sensing_sinr_db=realized,
                comm_sinr_db=dict(report.comm_sinr_db),
                events=tuple(state.history[n_events:]),
                report=report,
            )
        )

    # flush anything still in flight so every sent message is delivered once
    t_end = len(positions) - 1 + scenario.bus_latency
    if bus.in_flight:
        bus.deliver_due(t_end)
    return TraceLog(scenario, rows, list(state.history), list(bus.sent), list(bus.delivered))


# --- Monte Carlo ----------------------------------------------------------------------


def drop_random_ues(
    region: tuple[float, float, float, float],
    n: int,
    scene: Scene,
    rng: Rng,
    max_retries: int = 100,
) -> tuple[list[UserEquipment], CommAssignment]:
    """Drop ``n`` UEs uniformly in ``region`` and attach each to its strongest free AP.

    UEs are attached in id order; a UE whose best AP is taken goes to its next best.
    """
    if n > len(scene.aps) - 1:
        raise ValueError("need at least one AP left free for sensing")
    x0, x1, y0, y1 = region
    for _ in range(max_retries):
        ues = [UserEquipment(i + 1, Point(rng.uniform(x0, x1), rng.uniform(y0, y1))) for i in range(n)]
        if any(u.position.distance_to(a.position) < scene.pathloss.ref_distance
               for u in ues for a in scene.aps):
            continue
        taken: set[int] = set()
        links = []
        for ue in ues:
            ranked = sorted(
                (a for a in scene.aps if a.id not in taken),
                key=lambda a: (-_rx_power(a, ue.position, scene), a.id),
            )
            links.append(CommLink(ranked[0].id, ue.id))
            taken.add(ranked[0].id)
        return ues, CommAssignment(tuple(links))
    raise RuntimeError("could not drop UEs within the retry budget")


def _rx_power(ap, pos: Point, scene: Scene) -> float:
    state = los_state(ap.position, pos, scene.obstacles)
    return (
        scene.radio.tx_power_dbm
        + 10 * math.log10(ap.array.n_elements)
        - path_loss_db(ap.position.distance_to(pos), state, scene.pathloss)
    )


@dataclass(frozen=True)
class ThresholdResult:
    threshold_db: float
    success_enabled: float
    success_disabled: float
    avg_handovers: float
    stderr_enabled: float
    stderr_disabled: float
    trajectory_success_enabled: float
    trajectory_success_disabled: float


@dataclass(frozen=True)
class MonteCarloSummary:
    iterations: int
    results: tuple[ThresholdResult, ...]
    seed: int

    def at(self, threshold_db: float) -> ThresholdResult:
        for r in self.results:
            if r.threshold_db == threshold_db:
                return r
        raise KeyError(threshold_db)


def _quiet(state: ControllerState, report: SnapshotReport, policy: HandoverPolicy, covered) -> bool:
    """True when a threshold-gated step would provably change nothing but the track."""
    if state.pending is not None or not isinstance(state.phase, Stable):
        return False
    if policy.mode is not PolicyMode.SNR_MAX or policy.sensing_threshold_db is None:
        return False
    metrics = report.candidates.get(state.active_cfg)
    return (
        metrics is not None
        and metrics.decision_metric_db >= policy.sensing_threshold_db
        and state.active_cfg.ap_ids <= covered
    )


def _follow(
    reports: Sequence[SnapshotReport],
    policy: HandoverPolicy,
    scene: Scene,
    comm: CommAssignment,
    initial: SensingConfiguration,
    covered: Optional[Sequence[frozenset]] = None,
) -> tuple[list[float], int]:
    """Run the controller over precomputed reports; handover requests are granted.

    ``covered[t]`` lists the APs without a coverage event at snapshot ``t``; when
    given, snapshots on which the controller is idle skip the full step.
    """
    state = initial_state(initial)
    realized = []
    for t, report in enumerate(reports):
        if covered is not None and _quiet(state, report, policy, covered[t]):
            realized.append(_realized(state.active_cfg, report, scene, comm))
            continue
        state, _ = step(state, report, policy, scene, t, comm)
        if state.pending is not None and not state.pending.committed:
            # blockage-free drops: every addressed node covers the object
            acks = {a: HandoverAck(True) for a in state.pending.awaiting}
            state = resolve_acks(state, policy, acks, t)
        state = activate_due(state, t, policy)
        value = _realized(state.active_cfg, report, scene, comm)
        if isinstance(state.phase, SoftOverlap):
            value = combine_soft(_realized(state.phase.source, report, scene, comm), value)
        realized.append(value)
    return realized, len(state.history)


def _stderr(per_iteration: Sequence[float]) -> float:
    n = len(per_iteration)
    if n < 2:
        return 0.0
    mean = sum(per_iteration) / n
    var = sum((v - mean) ** 2 for v in per_iteration) / (n - 1)
    return math.sqrt(var / n)


@dataclass(frozen=True)
class _SensingTerms:
    echo_dbm: np.ndarray
    si_mw: float
    # interfering AP id -> (sensing Rx gain toward it per snapshot [dB], AP-AP loss [dB])
    interferers: dict


class MetricCache:
    """Fading-free sensing metrics along a fixed trajectory.

    Everything except the downlink beam directions is independent of where the UEs
    sit, so those parts are computed once per (configuration, serving set) and a
    new UE drop only costs a few scalar beam gains per configuration.
    """

    def __init__(self, scene: Scene, positions: Sequence[Point]):
        self.scene = scene
        self.positions = list(positions)
        self._terms: dict = {}
        self._candidates: dict = {}

    @staticmethod
    def _links_key(comm: CommAssignment):
        return frozenset((l.ap_id, l.downlink) for l in comm.links)

    def _build(self, cfg: SensingConfiguration, scene: Scene, comm: CommAssignment) -> _SensingTerms:
        mean = ChannelDraws.mean(scene)
        echo = np.array(
            [sensing_echo_power_dbm(cfg, p, scene, comm, mean) for p in self.positions]
        )
        split = scene_arrays(cfg, scene, comm)
        si = db_to_linear(scene.radio.si_power_dbm) if split.rx_full_duplex else 0.0
        rx_ap = scene.ap(cfg.rx)
        rx_array = rx_ap.array.with_elements(split.rx_elements)
        interferers = {}
        for link in comm.links:
            if not link.downlink or link.ap_id == cfg.rx:
                continue
            src = scene.ap(link.ap_id)
            toward = rx_ap.local_angle(src.position)
            gains = np.array(
                [_gain_db(beam_gain(rx_array, rx_ap.local_angle(p), toward)) for p in self.positions]
            )
            loss = path_loss_db(
                src.position.distance_to(rx_ap.position),
                los_state(src.position, rx_ap.position, scene.obstacles),
                scene.pathloss,
            )
            interferers[link.ap_id] = (gains, loss)
        return _SensingTerms(echo, si, interferers)

    def metric(self, cfg: SensingConfiguration, scene: Scene, comm: CommAssignment) -> np.ndarray:
        key = (cfg, self._links_key(comm))
        terms = self._terms.get(key)
        if terms is None:
            terms = self._terms[key] = self._build(cfg, scene, comm)
        radio = scene.radio
        denominator = np.full(len(self.positions), db_to_linear(radio.noise_power_dbm) + terms.si_mw)
        rx_ap = scene.ap(cfg.rx)
        for ap_id, (rx_gain_db, loss_db) in terms.interferers.items():
            src = scene.ap(ap_id)
            ue = scene.ue(comm.link_of_ap(ap_id).ue_id)
            g_tx = beam_gain(
                src.array.with_elements(comm_elements(src, cfg)),
                src.local_angle(ue.position),
                src.local_angle(rx_ap.position),
            )
            c2s_dbm = np.maximum(radio.tx_power_dbm + _gain_db(g_tx) + rx_gain_db - loss_db, FLOOR_DBM)
            denominator = denominator + 10.0 ** (c2s_dbm / 10.0)
        return terms.echo_dbm - 10.0 * np.log10(denominator)

    def candidates(self, scene: Scene, comm: CommAssignment, policy: HandoverPolicy):
        key = comm.serving_aps
        out = self._candidates.get(key)
        if out is None:
            out = self._candidates[key] = [
                enumerate_configs(scene, comm, policy, p) for p in self.positions
            ]
        return out


def _coverage(scene: Scene, positions: Sequence[Point]) -> list[frozenset]:
    return [
        frozenset(a for a in scene.ap_ids if coverage_trigger(scene, a, p, t) is None)
        for t, p in enumerate(positions)
    ]


def _fast_reports(
    cache: MetricCache, scene: Scene, comm: CommAssignment, policy: HandoverPolicy
) -> list[SnapshotReport]:
    per_snapshot = cache.candidates(scene, comm, policy)
    configs = sorted({c for cands in per_snapshot for c in cands}, key=lambda c: c.tie_key())
    series = {c: cache.metric(c, scene, comm).tolist() for c in configs}
    reports = []
    for t, (pos, cands) in enumerate(zip(cache.positions, per_snapshot)):
        metrics = {}
        for c in cands:
            v = series[c][t]
            metrics[c] = CandidateMetrics(v, v, {})
        reports.append(SnapshotReport(t, pos, None, metrics, {}))
    return reports


def run_monte_carlo(
    template: Scenario,
    iterations: int,
    thresholds: Sequence[float],
    seed: Optional[int] = None,
) -> MonteCarloSummary:
    """Success probability with and without sensing handover under random UE drops.

    Each iteration draws its own UE positions and channel from stream
    ``(seed, iteration)``.  The enabled run starts mono-static on the free AP and
    hands over only once the active sensing metric drops below the threshold.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    template.validate()
    seed = template.seed if seed is None else seed
    positions = sample_trajectory(template.trajectory)
    region = template.default_ue_region()
    base_scene = template.scene
    n_snap = len(positions)

    deterministic = not base_scene.fading.enabled and not base_scene.rcs.fluctuating
    cache = MetricCache(base_scene, positions)
    covered = _coverage(base_scene, positions)

    ok_en = {x: [] for x in thresholds}
    ok_dis = {x: [] for x in thresholds}
    handovers = {x: [] for x in thresholds}

    for i in range(iterations):
        rng = Rng(seed, i)
        ues, comm = drop_random_ues(region, template.ue_drop_count, base_scene, rng)
        scene = replace(base_scene, ues=tuple(ues))
        free = sorted(set(scene.ap_ids) - comm.serving_aps)
        fixed = SensingConfiguration.mono(free[0])
        if deterministic:
            reports = _fast_reports(cache, scene, comm, template.policy)
        else:
            reports = []
            for t, pos in enumerate(positions):
                candidates = enumerate_configs(scene, comm, template.policy, pos)
                draws = draw_snapshot(scene, pos, rng)
                reports.append(
                    snapshot_report(
                        scene, t, pos, None, comm, candidates=candidates, draws=draws,
                        include_comm=False,
                    )
                )
        disabled = [_realized(fixed, r, scene, comm) for r in reports]
        for x in thresholds:
            policy = replace(
                template.policy, mode=PolicyMode.SNR_MAX, enabled=True,
                sensing_threshold_db=x, initial_cfg=fixed,
            )
            enabled, n_ho = _follow(reports, policy, scene, comm, fixed, covered)
            ok_en[x].append(sum(v >= x for v in enabled) / n_snap)
            ok_dis[x].append(sum(v >= x for v in disabled) / n_snap)
            handovers[x].append(n_ho)

    results = []
    for x in thresholds:
        results.append(
            ThresholdResult(
                threshold_db=x,
                success_enabled=sum(ok_en[x]) / iterations,
                success_disabled=sum(ok_dis[x]) / iterations,
                avg_handovers=sum(handovers[x]) / iterations,
                stderr_enabled=_stderr(ok_en[x]),
                stderr_disabled=_stderr(ok_dis[x]),
                trajectory_success_enabled=sum(v == 1.0 for v in ok_en[x]) / iterations,
                trajectory_success_disabled=sum(v == 1.0 for v in ok_dis[x]) / iterations,
            )
        )
    return MonteCarloSummary(iterations, tuple(results), seed)

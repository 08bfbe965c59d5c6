"""Sensing-handover controller: triggers, target selection, hard/soft switching."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Union

from .geometry import LosState, Point, los_state, bearing
from .linkbudget import (
    CommAssignment,
    NO_COMM,
    Scene,
    SensingConfiguration,
    SnapshotReport,
    all_configurations,
    linear_to_db,
    db_to_linear,
)
from .signaling import BROADCAST, AssistingInfo, HandoverRequest, Message, Terminate, role_in


class PolicyMode(Enum):
    SNR_MAX = "snrmax"
    QOS_PRIORITY = "qos"


@dataclass(frozen=True)
class HandoverPolicy:
    """Handover rules.

    ``sensing_threshold_db`` gates SNR-max switching: when set, a better
    configuration is only sought once the active metric falls below it.
    """

    mode: PolicyMode = PolicyMode.SNR_MAX
    enabled: bool = True
    qos_threshold_db: float = 15.0
    hysteresis_db: float = 0.0
    soft: bool = False
    soft_window: int = 3
    soft_exit_threshold_db: Optional[float] = None
    sensing_threshold_db: Optional[float] = None
    switch_latency: int = 1
    broadcast_requests: bool = False
    assisting_info: bool = True
    initial_cfg: Optional[SensingConfiguration] = None

    def __post_init__(self):
        if self.soft and self.soft_window < 1:
            raise ValueError("soft_window must be >= 1 for soft handover")
        if self.switch_latency < 0:
            raise ValueError("switch_latency must be non-negative")
        for name in ("qos_threshold_db", "hysteresis_db"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.hysteresis_db < 0:
            raise ValueError("hysteresis_db must be non-negative")


class TriggerCause(Enum):
    COVERAGE_EXIT = "coverage_exit"
    BETTER_CONFIGURATION = "better_configuration"
    QOS_VIOLATION = "qos_violation"
    BLOCKAGE_LOSS = "blockage_loss"
    BEAM_RESTRICTION = "beam_restriction"


_PRIORITY = {
    TriggerCause.QOS_VIOLATION: 0,
    TriggerCause.COVERAGE_EXIT: 1,
    TriggerCause.BLOCKAGE_LOSS: 1,
    TriggerCause.BEAM_RESTRICTION: 2,
    TriggerCause.BETTER_CONFIGURATION: 3,
}


@dataclass(frozen=True)
class TriggerEvent:
    cause: TriggerCause
    snapshot: int
    details: str = ""
    ue_id: Optional[int] = None

    @property
    def label(self) -> str:
        if self.cause is TriggerCause.QOS_VIOLATION:
            return f"{self.cause.value}(ue{self.ue_id})"
        return self.cause.value


@dataclass(frozen=True)
class HandoverEvent:
    snapshot: int
    from_cfg: SensingConfiguration
    to_cfg: SensingConfiguration
    trigger: TriggerEvent
    soft: bool = False

    def __post_init__(self):
        if self.from_cfg == self.to_cfg:
            raise ValueError("a handover must change the configuration")


@dataclass(frozen=True)
class Stable:
    pass


@dataclass(frozen=True)
class SoftOverlap:
    source: SensingConfiguration
    target: SensingConfiguration
    remaining: int

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("soft overlap needs distinct source and target")


@dataclass(frozen=True)
class PendingHandover:
    target: SensingConfiguration
    trigger: TriggerEvent
    decided_at: int
    sender: int
    awaiting: frozenset
    committed: bool = False
    effective_at: Optional[int] = None


@dataclass(frozen=True)
class ControllerState:
    active_cfg: SensingConfiguration
    phase: Union[Stable, SoftOverlap] = Stable()
    history: tuple[HandoverEvent, ...] = ()
    pending: Optional[PendingHandover] = None
    track: tuple[Point, ...] = ()

    @property
    def sensing_cfgs(self) -> tuple[SensingConfiguration, ...]:
        """Configurations currently sensing (two during a soft overlap)."""
        if isinstance(self.phase, SoftOverlap):
            return (self.phase.source, self.phase.target)
        return (self.active_cfg,)


def enumerate_configs(
    scene: Scene,
    comm: CommAssignment = NO_COMM,
    policy: Optional[HandoverPolicy] = None,
    object_pos: Optional[Point] = None,
) -> list[SensingConfiguration]:
    """Candidate configurations for the current snapshot.

    APs that serve a UE can only receive sensing echoes (as full-duplex nodes).
    APs whose range or beam restrictions exclude the object are dropped; loss of
    LOS only degrades a candidate's metric.
    """
    if not scene.aps:
        raise ValueError("scene has no APs")
    serving = comm.serving_aps
    eligible = set(scene.ap_ids)
    if object_pos is not None:
        eligible = {a for a in eligible if _reachable(scene, a, object_pos)}
    out = []
    for cfg in all_configurations(scene.ap_ids):
        if cfg.tx not in eligible or cfg.rx not in eligible:
            continue
        if cfg.tx in serving:
            continue
        out.append(cfg)
    return out


def _reachable(scene: Scene, ap_id: int, pos: Point) -> bool:
    ap = scene.ap(ap_id)
    if ap.position.distance_to(pos) > ap.max_range_m:
        return False
    if ap.position == pos:
        return False
    theta = bearing(ap.position, pos)
    return not any(s.contains(theta) for s in ap.exclusion_sectors)


def _best(cfgs, key) -> SensingConfiguration:
    return max(cfgs, key=lambda c: (key(c), tuple(-k for k in c.tie_key())))


def coverage_trigger(scene: Scene, ap_id: int, pos: Point, t: int) -> Optional[TriggerEvent]:
    """Range, LOS or beam-restriction event of one active endpoint, if any."""
    ap = scene.ap(ap_id)
    if ap.position.distance_to(pos) > ap.max_range_m:
        return TriggerEvent(TriggerCause.COVERAGE_EXIT, t, f"AP{ap_id} out of range")
    if los_state(ap.position, pos, scene.obstacles) is LosState.NLOS:
        return TriggerEvent(TriggerCause.COVERAGE_EXIT, t, f"AP{ap_id} lost LOS")
    if ap.position != pos and any(
        s.contains(bearing(ap.position, pos)) for s in ap.exclusion_sectors
    ):
        return TriggerEvent(TriggerCause.BEAM_RESTRICTION, t, f"AP{ap_id} restricted beam")
    return None


def evaluate_triggers(
    state: ControllerState,
    report: SnapshotReport,
    policy: HandoverPolicy,
    scene: Scene,
    comm: CommAssignment = NO_COMM,
) -> list[TriggerEvent]:
    """All triggers firing at this snapshot, highest priority first."""
    if not policy.enabled:
        return []
    t = report.snapshot
    active = state.active_cfg
    pos = report.object_pos
    events: list[TriggerEvent] = []

    for ap_id in sorted(active.ap_ids):
        event = coverage_trigger(scene, ap_id, pos, t)
        if event is not None:
            events.append(event)

    active_metric = (
        report.candidates[active].decision_metric_db if active in report.candidates else -math.inf
    )

    if policy.mode is PolicyMode.QOS_PRIORITY and active in report.candidates:
        predicted = report.candidates[active].predicted_comm_sinr_db
        for ue in sorted(predicted):
            if predicted[ue] < policy.qos_threshold_db:
                events.append(
                    TriggerEvent(
                        TriggerCause.QOS_VIOLATION, t,
                        f"UE{ue} predicted SINR {predicted[ue]:.2f} dB", ue,
                    )
                )

    if policy.mode is PolicyMode.SNR_MAX and report.candidates:
        gated = policy.sensing_threshold_db is not None
        if gated and active_metric < policy.sensing_threshold_db:
            events.append(
                TriggerEvent(
                    TriggerCause.BLOCKAGE_LOSS, t,
                    f"sensing SINR {active_metric:.2f} dB below {policy.sensing_threshold_db} dB",
                )
            )
        if not gated or active_metric < policy.sensing_threshold_db:
            best = max(c.decision_metric_db for c in report.candidates.values())
            if best > active_metric + policy.hysteresis_db:
                events.append(
                    TriggerEvent(
                        TriggerCause.BETTER_CONFIGURATION, t,
                        f"best {best:.2f} dB vs active {active_metric:.2f} dB",
                    )
                )

    events.sort(key=lambda e: _PRIORITY[e.cause])
    return events


def select_config(
    candidates: Sequence[SensingConfiguration],
    report: SnapshotReport,
    policy: HandoverPolicy,
    comm: CommAssignment = NO_COMM,
    violated_ues: Sequence[int] = (),
) -> SensingConfiguration:
    if not candidates:
        raise ValueError("no candidate configurations")
    metric = lambda c: report.candidates[c].decision_metric_db

    if policy.mode is PolicyMode.SNR_MAX:
        return _best(candidates, metric)

    if violated_ues:
        # relieve the APs serving violated UEs of every sensing role
        busy = {comm.serving_ap(ue) for ue in violated_ues}
        relieved = [c for c in candidates if not (c.ap_ids & busy)]
        if relieved:
            return _best(relieved, metric)

    def margin(c):
        predicted = report.candidates[c].predicted_comm_sinr_db
        if not predicted:
            return math.inf
        return min(predicted.values()) - policy.qos_threshold_db

    feasible = [c for c in candidates if margin(c) >= 0]
    if feasible:
        return _best(feasible, metric)
    return max(
        candidates,
        key=lambda c: (margin(c), metric(c), tuple(-k for k in c.tie_key())),
    )


def combine_soft(source_sinr_db: float, target_sinr_db: float) -> float:
    """Non-coherent power combination of two overlapping sensing results."""
    return linear_to_db(db_to_linear(source_sinr_db) + db_to_linear(target_sinr_db))


def initial_state(
    active_cfg: SensingConfiguration, first_pos: Optional[Point] = None
) -> ControllerState:
    return ControllerState(active_cfg=active_cfg, track=(first_pos,) if first_pos else ())


_TRACK_LEN = 5


def _assisting_info(
    state: ControllerState, report: SnapshotReport, scene: Scene, target: SensingConfiguration
) -> AssistingInfo:
    pos = report.object_pos
    prev = state.track[-2] if len(state.track) >= 2 else None
    velocity = (pos.x - prev.x, pos.y - prev.y) if prev else (0.0, 0.0)  # m per snapshot
    restrictions = tuple(
        (ap.id, s) for ap in scene.aps for s in ap.exclusion_sectors
    )
    return AssistingInfo(
        object_position_est=pos,
        velocity_est=velocity,
        trajectory_hint=state.track,
        available_nodes=tuple(sorted(scene.ap_ids)),
        beam_restrictions=restrictions,
    )


def step(
    state: ControllerState,
    report: SnapshotReport,
    policy: HandoverPolicy,
    scene: Scene,
    snapshot_idx: int,
    comm: CommAssignment = NO_COMM,
) -> tuple[ControllerState, list[Message]]:
    """Advance the controller by one snapshot.

    A decided handover is left pending until every addressed node acknowledges it
    (see :func:`resolve_acks`) and activated by :func:`activate_due`.
    """
    messages: list[Message] = []
    track = (state.track + (report.object_pos,))[-_TRACK_LEN:]
    state = replace(state, track=track)

    before = state.pending
    state = activate_due(state, snapshot_idx, policy)
    activated_now = before is not None and state.pending is None

    if isinstance(state.phase, SoftOverlap) and not activated_now:
        state, msgs = _advance_overlap(state, report, policy, snapshot_idx)
        messages += msgs
    if isinstance(state.phase, SoftOverlap):
        return state, messages

    if state.pending is not None or not policy.enabled:
        return state, messages

    triggers = evaluate_triggers(state, report, policy, scene, comm)
    if not triggers:
        return state, messages

    candidates = list(report.candidates)
    if not candidates:
        return state, messages
    violated = [e.ue_id for e in triggers if e.cause is TriggerCause.QOS_VIOLATION]
    target = select_config(candidates, report, policy, comm, violated)
    if target == state.active_cfg:
        return state, messages

    sender = state.active_cfg.tx
    addressees = sorted(target.ap_ids - {sender})
    pending = PendingHandover(
        target=target,
        trigger=triggers[0],
        decided_at=snapshot_idx,
        sender=sender,
        awaiting=frozenset(addressees if not policy.broadcast_requests
                           else [a for a in scene.ap_ids if a != sender]),
    )
    state = replace(state, pending=pending)
    if not addressees:
        state = commit(state, policy, snapshot_idx, acquisition_delay=0)
        return state, messages

    if policy.assisting_info:
        info = _assisting_info(state, report, scene, target)
        if policy.broadcast_requests:
            messages.append(Message(info, sender, BROADCAST, snapshot_idx))
        else:
            messages += [Message(info, sender, a, snapshot_idx) for a in addressees]
    if policy.broadcast_requests:
        messages.append(
            Message(HandoverRequest(state.active_cfg, target), sender, BROADCAST, snapshot_idx)
        )
    else:
        messages += [
            Message(
                HandoverRequest(state.active_cfg, target, role_in(target, a)),
                sender, a, snapshot_idx,
            )
            for a in addressees
        ]
    return state, messages


def commit(
    state: ControllerState, policy: HandoverPolicy, snapshot_idx: int, acquisition_delay: int = 0
) -> ControllerState:
    """Accept the pending handover and schedule its activation."""
    p = state.pending
    if p is None:
        raise ValueError("no pending handover to commit")
    effective = max(p.decided_at + policy.switch_latency, snapshot_idx) + acquisition_delay
    event = HandoverEvent(p.decided_at, state.active_cfg, p.target, p.trigger, policy.soft)
    return replace(
        state,
        pending=replace(p, committed=True, effective_at=effective),
        history=state.history + (event,),
    )


def abort(state: ControllerState) -> ControllerState:
    return replace(state, pending=None)


def resolve_acks(
    state: ControllerState,
    policy: HandoverPolicy,
    acks: dict,
    snapshot_idx: int,
) -> ControllerState:
    """Commit or abort the pending handover once every addressee has answered.

    ``acks`` maps responder id to its :class:`~isac_handover.signaling.HandoverAck`.
    """
    p = state.pending
    if p is None or p.committed:
        return state
    if not p.awaiting <= set(acks):
        return state
    needed = p.target.ap_ids - {p.sender}
    if all(acks[a].accept for a in needed):
        delay = max((acks[a].acquisition_delay for a in needed), default=0)
        return commit(state, policy, snapshot_idx, delay)
    return abort(state)


def activate_due(
    state: ControllerState, snapshot_idx: int, policy: HandoverPolicy
) -> ControllerState:
    """Switch to a committed target once its activation snapshot is reached."""
    p = state.pending
    if p is None or not p.committed or snapshot_idx < p.effective_at:
        return state
    if policy.soft:
        phase = SoftOverlap(state.active_cfg, p.target, policy.soft_window)
    else:
        phase = Stable()
    return replace(state, active_cfg=p.target, phase=phase, pending=None)


def _advance_overlap(
    state: ControllerState, report: SnapshotReport, policy: HandoverPolicy, snapshot_idx: int
) -> tuple[ControllerState, list[Message]]:
    phase = state.phase
    remaining = phase.remaining - 1
    source_metric = report.candidates.get(phase.source)
    early = policy.soft_exit_threshold_db is not None and (
        source_metric is None
        or source_metric.decision_metric_db < policy.soft_exit_threshold_db
    )
    if remaining > 0 and not early:
        return replace(state, phase=replace(phase, remaining=remaining)), []
    sender = phase.target.rx
    msgs = [
        Message(Terminate(phase.source), sender, ap, snapshot_idx)
        for ap in sorted(phase.source.ap_ids - {sender})
    ]
    return replace(state, phase=Stable()), msgs

"""Simulated inter-AP control plane for the sensing-handover dialogue."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

from .geometry import AngleSector, Point, in_sensing_coverage
from .linkbudget import Scene, SensingConfiguration, SnapshotReport

BROADCAST = "broadcast"


class Role(Enum):
    TX = "tx"
    RX = "rx"
    BOTH = "both"


def role_in(cfg: SensingConfiguration, ap_id: int) -> Optional[Role]:
    if cfg.is_mono and cfg.tx == ap_id:
        return Role.BOTH
    if cfg.tx == ap_id:
        return Role.TX
    if cfg.rx == ap_id:
        return Role.RX
    return None


@dataclass(frozen=True)
class HandoverRequest:
    source_cfg: SensingConfiguration
    target_cfg: SensingConfiguration
    proposed_role: Optional[Role] = None  # None on broadcasts; each node derives its own


@dataclass(frozen=True)
class AssistingInfo:
    object_position_est: Point
    velocity_est: tuple[float, float]
    trajectory_hint: tuple[Point, ...] = ()
    available_nodes: tuple[int, ...] = ()
    beam_restrictions: tuple[tuple[int, AngleSector], ...] = ()


@dataclass(frozen=True)
class HandoverAck:
    accept: bool
    reason: str = ""
    acquisition_delay: int = 0


@dataclass(frozen=True)
class ConfigComplete:
    new_cfg: SensingConfiguration


@dataclass(frozen=True)
class Terminate:
    cfg: SensingConfiguration


Payload = Union[HandoverRequest, AssistingInfo, HandoverAck, ConfigComplete, Terminate]


class SignalingError(ValueError):
    pass


@dataclass(frozen=True)
class Message:
    payload: Payload
    sender: int
    to: Union[int, str]
    sent_at: int

    @property
    def variant(self) -> str:
        return type(self.payload).__name__

    def addressed_to(self, node_id: int) -> bool:
        return self.to == BROADCAST or self.to == node_id


@dataclass
class ControlBus:
    """FIFO delivery of control messages with a fixed latency in snapshots."""

    nodes: tuple[int, ...]
    latency: int = 0
    drop_probability: float = 0.0
    rng: Optional[object] = None
    queue: list = field(default_factory=list)
    sent: list = field(default_factory=list)
    delivered: list = field(default_factory=list)
    dropped: int = 0
    _seq: int = 0
    _last_delivery: int = -1

    def __post_init__(self):
        self.nodes = tuple(self.nodes)
        if self.latency < 0:
            raise SignalingError("latency must be non-negative")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise SignalingError("drop_probability must be within [0, 1]")
        if self.drop_probability > 0 and self.rng is None:
            raise SignalingError("a lossy bus needs an rng")

    def send(self, msg: Message) -> ControlBus:
        if msg.sender not in self.nodes:
            raise SignalingError(f"unknown sender {msg.sender}")
        if msg.to == BROADCAST:
            copies = [
                Message(msg.payload, msg.sender, node, msg.sent_at)
                for node in self.nodes
                if node != msg.sender
            ]
        elif msg.to in self.nodes:
            copies = [msg]
        else:
            raise SignalingError(f"unknown destination {msg.to!r}")
        for copy in copies:
            self.sent.append(copy)
            if self.drop_probability and self.rng.uniform(0.0, 1.0) < self.drop_probability:
                self.dropped += 1
                continue
            self.queue.append((copy.sent_at + self.latency, self._seq, copy))
            self._seq += 1
        return self

    def deliver_due(self, snapshot: int) -> list[Message]:
        if snapshot < self._last_delivery:
            raise SignalingError("delivery clock went backwards")
        self._last_delivery = snapshot
        due = [item for item in self.queue if item[0] <= snapshot]
        self.queue = [item for item in self.queue if item[0] > snapshot]
        due.sort(key=lambda item: item[1])
        out = [item[2] for item in due]
        self.delivered.extend(out)
        return out

    @property
    def in_flight(self) -> int:
        return len(self.queue)


@dataclass
class SensingNode:
    """Per-AP handler state: the latest assisting information it received."""

    node_id: int
    assist: Optional[AssistingInfo] = None
    active_role: Optional[Role] = None

    def handle(self, msg: Message, scene: Scene, report: SnapshotReport) -> list[Message]:
        return handle(self, msg, scene, report)


def handle(node: SensingNode, msg: Message, scene: Scene, report: SnapshotReport) -> list[Message]:
    """Process one delivered message at ``node`` and return its responses."""
    if not msg.addressed_to(node.node_id):
        raise SignalingError(f"message for {msg.to!r} handled at node {node.node_id}")
    payload = msg.payload
    now = report.snapshot

    if isinstance(payload, AssistingInfo):
        node.assist = payload
        return []

    if isinstance(payload, HandoverRequest):
        ap = scene.ap(node.node_id)
        estimate = node.assist.object_position_est if node.assist else report.object_pos
        restricted = ()
        if node.assist:
            restricted = tuple(s for ap_id, s in node.assist.beam_restrictions if ap_id == ap.id)
        reply_to = msg.sender
        if not in_sensing_coverage(
            ap.position, estimate, scene.obstacles, ap.max_range_m,
            tuple(ap.exclusion_sectors) + restricted,
        ):
            reason = "no LOS" if not in_sensing_coverage(
                ap.position, estimate, scene.obstacles, float("inf")
            ) else "outside coverage"
            return [Message(HandoverAck(False, reason), node.node_id, reply_to, now)]
        delay = 0 if node.assist else 1
        node.active_role = role_in(payload.target_cfg, node.node_id)
        return [
            Message(HandoverAck(True, "accepted", delay), node.node_id, reply_to, now),
            Message(ConfigComplete(payload.target_cfg), node.node_id, reply_to, now),
        ]

    if isinstance(payload, Terminate):
        node.active_role = None
        return []

    if isinstance(payload, (HandoverAck, ConfigComplete)):
        return []

    raise SignalingError(f"malformed message payload {payload!r}")


def _json_value(value):
    if isinstance(value, SensingConfiguration):
        return value.label
    if isinstance(value, Point):
        return [value.x, value.y]
    if isinstance(value, AngleSector):
        return [value.start, value.end]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (tuple, list)):
        return [_json_value(v) for v in value]
    return value


def message_record(msg: Message) -> dict:
    payload = {k: _json_value(v) for k, v in vars(msg.payload).items()}
    return {
        "snapshot": msg.sent_at,
        "from": msg.sender,
        "to": msg.to,
        "variant": msg.variant,
        "payload": payload,
    }


def to_jsonl(messages: Sequence[Message]) -> str:
    return "".join(json.dumps(message_record(m), sort_keys=True) + "\n" for m in messages)


def ack_counts(messages: Sequence[Message]) -> Counter:
    """Acks per (requester, responder) pair, for conservation checks."""
    return Counter((m.to, m.sender) for m in messages if isinstance(m.payload, HandoverAck))

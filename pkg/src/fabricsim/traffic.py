"""Synthetic workload generation.

Every accelerator runs an independent Poisson arrival process. Each arrival
draws, in a fixed order, the gap to the next arrival, the message scope
(intra- vs inter-node), and the destination. The draw order is part of the
reproducibility contract: two runs with the same seed produce the same
message sequence regardless of how the rest of the simulation interleaves.

Offered load is defined against the accelerator link: load 1.0 means each
accelerator generates message payload at exactly the rate its link could
carry in intra-node wire format (payload plus per-packet headers).
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import Engine, SplitMix64
from .model import Message, PacketGeometry, Scope

# Named mixes: fraction of messages addressed to a remote node.
PATTERN_INTER_FRACTION = {
    "C1": 0.20,
    "C2": 0.15,
    "C3": 0.10,
    "C4": 0.05,
    "C5": 0.0,
}

PATTERN_NAMES = tuple(PATTERN_INTER_FRACTION)


@dataclass(frozen=True)
class TrafficPattern:
    """A workload mix: message size plus the probability a message is inter-node."""

    name: str
    inter_fraction: float
    message_bytes: int = 4096

    def __post_init__(self) -> None:
        if not 0.0 <= self.inter_fraction <= 1.0:
            raise ValueError(
                f"inter_fraction must be in [0, 1], got {self.inter_fraction}")
        if self.message_bytes <= 0:
            raise ValueError(f"message_bytes must be positive, got {self.message_bytes}")
        known = PATTERN_INTER_FRACTION.get(self.name)
        if known is not None and known != self.inter_fraction:
            raise ValueError(
                f"pattern {self.name} is defined with inter_fraction {known}, "
                f"got {self.inter_fraction}")

    @classmethod
    def named(cls, name: str, message_bytes: int = 4096) -> "TrafficPattern":
        if name not in PATTERN_INTER_FRACTION:
            raise ValueError(
                f"unknown pattern {name!r}; expected one of {', '.join(PATTERN_NAMES)}")
        return cls(name, PATTERN_INTER_FRACTION[name], message_bytes)


@dataclass(frozen=True)
class LoadPoint:
    """One sweep point: offered load as a fraction of link rate, plus run length."""

    load: float
    duration_ns: float = 2_500_000.0

    def __post_init__(self) -> None:
        if not 0.0 < self.load <= 1.0:
            raise ValueError(f"load must be in (0, 1], got {self.load}")
        if self.duration_ns <= 0:
            raise ValueError(f"duration_ns must be positive, got {self.duration_ns}")


def mean_gap_ps(pattern: TrafficPattern, load: float, geom: PacketGeometry,
                link_bps: float) -> float:
    """Mean inter-arrival gap per accelerator, in picoseconds.

    At load L the accelerator offers L times its link rate measured in
    intra-node wire bytes, so the gap is the wire time of one message
    divided by L.
    """
    if not 0.0 < load <= 1.0:
        raise ValueError(f"load must be in (0, 1], got {load}")
    wire_bits = geom.message_wire_bytes(pattern.message_bytes) * 8
    return wire_bits * 1e12 / link_bps / load


def next_message(rng: SplitMix64, pattern: TrafficPattern, node: int, acc: int,
                 num_nodes: int, accs_per_node: int, msg_id: int,
                 created_at: int) -> Message | None:
    """Draw scope and destination for one arrival.

    Returns None when the draw lands on intra-node traffic but the node has a
    single accelerator (no valid local peer). The scope draw is consumed
    either way so the random stream stays aligned across configurations.
    """
    inter = rng.random() < pattern.inter_fraction
    if inter:
        r = rng.randrange((num_nodes - 1) * accs_per_node)
        dst_node = r // accs_per_node
        if dst_node >= node:
            dst_node += 1
        return Message(msg_id, node, acc, dst_node, r % accs_per_node,
                       pattern.message_bytes, created_at, Scope.INTER_NODE)
    if accs_per_node == 1:
        return None
    r = rng.randrange(accs_per_node - 1)
    dst_acc = r if r < acc else r + 1
    return Message(msg_id, node, acc, node, dst_acc,
                   pattern.message_bytes, created_at, Scope.INTRA_NODE)


class MessageGenerator:
    """Poisson source for one accelerator.

    Arrivals are delivered to a callback which may refuse one (injection
    queue full); refused messages still count as offered. Generation stops
    at `stop_ps` so a run can keep draining in-flight traffic afterwards.
    """

    __slots__ = ("engine", "rng", "pattern", "node", "acc", "num_nodes",
                 "accs_per_node", "deliver", "stop_ps", "mean_gap",
                 "_next_id", "offered_messages", "suppressed_messages",
                 "refused_messages")

    def __init__(self, engine: Engine, rng: SplitMix64, pattern: TrafficPattern,
                 load: float, geom: PacketGeometry, link_bps: float,
                 node: int, acc: int, num_nodes: int, accs_per_node: int,
                 deliver, stop_ps: int, id_base: int = 0) -> None:
        if num_nodes < 2:
            raise ValueError("need at least two nodes")
        self.engine = engine
        self.rng = rng
        self.pattern = pattern
        self.node = node
        self.acc = acc
        self.num_nodes = num_nodes
        self.accs_per_node = accs_per_node
        self.deliver = deliver
        self.stop_ps = stop_ps
        self.mean_gap = mean_gap_ps(pattern, load, geom, link_bps)
        self._next_id = id_base
        self.offered_messages = 0
        self.suppressed_messages = 0
        self.refused_messages = 0
        engine.schedule(rng.expovariate_ps(self.mean_gap), self._arrival)

    def _arrival(self, _arg) -> None:
        now = self.engine.now
        if now >= self.stop_ps:
            return
        msg = next_message(self.rng, self.pattern, self.node, self.acc,
                           self.num_nodes, self.accs_per_node, self._next_id, now)
        if msg is None:
            self.suppressed_messages += 1
        else:
            self._next_id += 1
            self.offered_messages += 1
            if not self.deliver(msg):
                self.refused_messages += 1
        self.engine.schedule(now + self.rng.expovariate_ps(self.mean_gap),
                             self._arrival)

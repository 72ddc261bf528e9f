"""Core domain types: messages, the two packet tiers, latency bookkeeping.

The two network tiers use different wire formats. The intra-node tier moves
small packets (default 20 B header + up to 128 B payload = 148 B on the wire);
the inter-node tier moves large ones (64 B header + up to 4032 B payload =
4096 B). The NIC gateway converts between the two; everything else in the
simulator only needs the arithmetic collected here.

Packets carry span descriptors (message id, offset, length), never payload
bytes: only sizes matter for the studied effects, and runs move enough
packets that carrying content would be prohibitive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Scope(enum.Enum):
    """Whether a message stays inside one node or crosses the inter-node tier."""

    INTRA_NODE = "intra"
    INTER_NODE = "inter"


@dataclass(frozen=True)
class PacketGeometry:
    """Header/payload sizes of the two packet tiers, in bytes.

    Payload fields are maxima; the final fragment of a message may be short.
    """

    intra_header_bytes: int = 20
    intra_payload_bytes: int = 128
    inter_header_bytes: int = 64
    inter_payload_bytes: int = 4032

    def __post_init__(self) -> None:
        for name in (
            "intra_header_bytes",
            "intra_payload_bytes",
            "inter_header_bytes",
            "inter_payload_bytes",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def intra_wire_bytes(self) -> int:
        """Wire size of one full intra packet (148 with defaults)."""
        return self.intra_header_bytes + self.intra_payload_bytes

    @property
    def inter_wire_bytes(self) -> int:
        """Wire size of one full inter packet (4096 with defaults)."""
        return self.inter_header_bytes + self.inter_payload_bytes

    def intra_packet_count(self, size_bytes: int) -> int:
        """Number of intra packets a message of this size splits into."""
        p = self.intra_payload_bytes
        return (size_bytes + p - 1) // p

    def message_wire_bytes(self, size_bytes: int) -> int:
        """Total intra-tier wire bytes for a message: payload plus per-packet headers."""
        return size_bytes + self.intra_packet_count(size_bytes) * self.intra_header_bytes


DEFAULT_GEOMETRY = PacketGeometry()


@dataclass(eq=False)
class Message:
    """One application-level transfer between two accelerators."""

    __slots__ = (
        "id", "src_node", "src_acc", "dst_node", "dst_acc", "size_bytes",
        "created_at", "scope",
        # Milestone timestamps filled in as the message moves (ps, -1 = not yet).
        "t_tx_start", "t_nic_arrive", "t_inter_send", "t_inter_arrive",
        "t_regen_send", "t_delivered", "remaining_bytes",
    )

    id: int
    src_node: int
    src_acc: int
    dst_node: int
    dst_acc: int
    size_bytes: int
    created_at: int
    scope: Scope

    def __init__(self, id, src_node, src_acc, dst_node, dst_acc, size_bytes,
                 created_at, scope):
        if size_bytes <= 0:
            raise ValueError("size_bytes must be positive")
        if (src_node, src_acc) == (dst_node, dst_acc):
            raise ValueError("message source and destination coincide")
        if (scope is Scope.INTRA_NODE) != (src_node == dst_node):
            raise ValueError("scope inconsistent with node indices")
        self.id = id
        self.src_node = src_node
        self.src_acc = src_acc
        self.dst_node = dst_node
        self.dst_acc = dst_acc
        self.size_bytes = size_bytes
        self.created_at = created_at
        self.scope = scope
        self.t_tx_start = -1
        self.t_nic_arrive = -1
        self.t_inter_send = -1
        self.t_inter_arrive = -1
        self.t_regen_send = -1
        self.t_delivered = -1
        self.remaining_bytes = size_bytes


@dataclass
class IntraPacket:
    """One intra-tier wire unit: a contiguous slice of one message."""

    message_id: int
    offset_bytes: int
    payload_bytes: int
    header_bytes: int
    route: tuple = ()
    timestamps: dict = field(default_factory=dict)

    @property
    def wire_bytes(self) -> int:
        return self.header_bytes + self.payload_bytes


@dataclass
class InterPacket:
    """One inter-tier wire unit: spans from one or more messages, same node pair."""

    src_node: int
    dst_node: int
    header_bytes: int
    spans: list  # of (message_id, offset, length)
    timestamps: dict = field(default_factory=dict)

    @property
    def payload_bytes(self) -> int:
        return sum(s[2] for s in self.spans)

    @property
    def wire_bytes(self) -> int:
        return self.header_bytes + self.payload_bytes


# Latency component names, in pipeline order. This is also the CSV column order.
LATENCY_COMPONENTS = (
    "src_accelerator",
    "src_intra_network",
    "src_nic",
    "inter_network",
    "dst_nic",
    "dst_intra_network",
    "dst_accelerator",
)


@dataclass
class LatencyRecord:
    """Per-message latency decomposition across the seven pipeline stages (ps).

    For intra-node messages the three inter-tier stages are zero by
    definition. The components always sum exactly to the sojourn time
    (delivery minus creation); `metrics` enforces this on every delivery.
    """

    message_id: int
    scope: Scope
    src_accelerator: int = 0
    src_intra_network: int = 0
    src_nic: int = 0
    inter_network: int = 0
    dst_nic: int = 0
    dst_intra_network: int = 0
    dst_accelerator: int = 0

    def components(self) -> tuple:
        return (
            self.src_accelerator, self.src_intra_network, self.src_nic,
            self.inter_network, self.dst_nic, self.dst_intra_network,
            self.dst_accelerator,
        )

    def total(self) -> int:
        return sum(self.components())

    def validate(self) -> None:
        if any(c < 0 for c in self.components()):
            raise ValueError(f"negative latency component in message {self.message_id}")
        if self.scope is Scope.INTRA_NODE:
            # One switch hop, no gateway: everything after the local network
            # stage must be zero.
            tail = (self.src_nic, self.inter_network, self.dst_nic,
                    self.dst_intra_network, self.dst_accelerator)
            if any(tail):
                raise ValueError(
                    f"intra-node message {self.message_id} has inter-tier latency")
        if self.scope is Scope.INTRA_NODE and (
            self.src_nic or self.inter_network or self.dst_nic
        ):
            raise ValueError(
                f"intra-node message {self.message_id} has inter-tier latency"
            )


def packetize(msg: Message, geom: PacketGeometry) -> list:
    """Split a message into intra packets: full payloads plus a possibly short tail.

    Offsets are contiguous and disjoint and the payload sizes sum to the
    message size, so concatenating spans in offset order reconstructs the
    message exactly.
    """
    payload_max = geom.intra_payload_bytes
    header = geom.intra_header_bytes
    packets = []
    offset = 0
    remaining = msg.size_bytes
    while remaining > 0:
        take = payload_max if remaining >= payload_max else remaining
        packets.append(IntraPacket(msg.id, offset, take, header))
        offset += take
        remaining -= take
    return packets


def fragment_spans(offset: int, length: int, grid: int) -> list:
    """Cut a payload span at multiples of `grid`, relative to the message start.

    The destination NIC regenerates intra packets aligned to each message's
    own fragment grid, so a span starting mid-fragment yields a short leading
    piece, e.g. (4032, 64) with grid 128 is the tail half of fragment 31.
    """
    out = []
    pos = offset
    end = offset + length
    while pos < end:
        boundary = (pos // grid + 1) * grid
        take = (boundary if boundary < end else end) - pos
        out.append((pos, take))
        pos += take
    return out

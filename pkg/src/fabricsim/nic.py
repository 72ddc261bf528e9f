"""Per-node NIC gateway translating between the two packet geometries.

Egress direction: intra-format trains arriving from the node's internal
switch are ingested one packet at a time (each packet costs the conversion
delay), their headers stripped, and the remaining payload staged per
destination node. When a full inter payload is staged it is emitted as one
inter-format packet; a partial packet is emitted only when the oldest staged
byte has waited the flush timeout. Payload from consecutive messages shares
a packet under the default packing policy.

Ingress direction: inter-format packets are split back into intra-format
packets along each original message's own payload grid (again one conversion
delay per regenerated packet), then forwarded into the internal switch.
Headers are regenerated, never tunneled, which is what makes the payload
byte counts on both sides of the gateway equal.

All four internal queues are bounded and exert backpressure through the same
byte-credit scheme the switches use, so a slow conversion engine stalls its
upstream switch port rather than dropping anything.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

from .engine import Engine, SimulationError, ns_to_ps
from .fabric import Sender, Train
from .model import PacketGeometry, Scope, fragment_spans


class PackingPolicy(enum.Enum):
    ACROSS_MESSAGES = "AcrossMessages"
    PER_MESSAGE = "PerMessage"


@dataclass(frozen=True)
class NicParams:
    """Gateway knobs.

    conversion_ns_per_packet is charged once per intra-format packet in both
    directions: at ingest while aggregating, and at split while regenerating.
    The default was calibrated against the saturation behavior of the
    8-accelerator 512 Gbps configuration; see the README for the derivation.

    The queue bounds are the byte budgets of the four internal queues
    (receive and transmit on each side). The receive-side budgets are
    advertised upstream as credits.
    """

    conversion_ns_per_packet: float = 12.0
    flush_timeout_ns: float = 1000.0
    packing: PackingPolicy = PackingPolicy.ACROSS_MESSAGES
    rx_intra_bytes: int = 32768
    egress_bytes: int = 131072
    rx_inter_bytes: int = 131072
    to_intra_bytes: int = 131072

    def __post_init__(self) -> None:
        if self.conversion_ns_per_packet < 0:
            raise ValueError("conversion delay must be >= 0")
        if self.flush_timeout_ns <= 0:
            raise ValueError("flush timeout must be positive")
        for field in ("rx_intra_bytes", "egress_bytes",
                      "rx_inter_bytes", "to_intra_bytes"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be positive")


class _Staging:
    """Per-destination aggregation state: FIFO spans plus a flush deadline."""

    __slots__ = ("spans", "staged_bytes", "flush_seq")

    def __init__(self):
        self.spans = deque()  # entries [message, offset, length, staged_at]
        self.staged_bytes = 0
        self.flush_seq = 0


class Nic:
    """One node's gateway. Wire both directions, then let events flow.

    The owner constructs the two Sender objects (egress toward the
    inter-node tier, to_intra toward the node's internal switch) because
    their far ends differ by topology; wire_egress/wire_ingress attach them
    together with the credit-return paths of the upstream switch ports.
    """

    def __init__(self, engine: Engine, node_id: int, params: NicParams,
                 geometry: PacketGeometry):
        self.engine = engine
        self.node_id = node_id
        self.params = params
        self.geom = geometry
        self.conv_ps = ns_to_ps(params.conversion_ns_per_packet)
        self.flush_ps = ns_to_ps(params.flush_timeout_ns)

        # egress: internal switch -> rx queue -> conversion -> staging -> out
        self.rx_intra = deque()
        self.rx_intra_occ = 0
        self.rx_intra_return = None  # credit back to the internal switch
        self.conv_busy = False
        self.staging = {}
        self.egress: Sender | None = None

        # ingress: inter tier -> rx queue -> split -> internal switch
        self.rx_inter = deque()
        self.rx_inter_occ = 0
        self.rx_inter_return = None  # credit back to the leaf switch
        self.split_busy = False
        self.to_intra: Sender | None = None

        # conservation counters (payload bytes, headers excluded)
        self.ingested_trains = 0
        self.ingested_payload = 0
        self.ingested_packets = 0
        self.emitted_packets = 0
        self.emitted_payload = 0
        self.flushed_packets = 0
        self.split_packets = 0
        self.split_payload = 0
        self.regen_trains = 0
        self.regen_packets = 0

    ### Wiring ###

    def wire_egress(self, rx_credit_return, egress_sender: Sender) -> None:
        self.rx_intra_return = rx_credit_return
        self.egress = egress_sender
        egress_sender.on_start = self._note_inter_send
        egress_sender.on_drain = lambda _t: self._conv_kick()

    def wire_ingress(self, rx_credit_return, to_intra_sender: Sender) -> None:
        self.rx_inter_return = rx_credit_return
        self.to_intra = to_intra_sender
        to_intra_sender.on_start = self._note_regen_send
        to_intra_sender.on_drain = lambda _t: self._split_kick()

    def receive_intra(self, payload) -> None:
        """Receiver for the internal switch's gateway-facing output."""
        train, arrive_end = payload
        now = self.engine.now
        if train.dst_node == self.node_id:
            raise SimulationError(
                f"node {self.node_id}: locally addressed train reached the "
                f"gateway ({train!r}); intra routing is broken")
        for msg, _, _ in train.spans:
            if msg.t_nic_arrive < 0:
                msg.t_nic_arrive = now
        train.arrive_end = arrive_end
        self.rx_intra.append(train)
        self.rx_intra_occ += train.wire_bytes
        assert self.rx_intra_occ <= self.params.rx_intra_bytes
        self._conv_kick()

    def receive_inter(self, payload) -> None:
        """Receiver for the leaf switch's node-facing output."""
        train, arrive_end = payload
        now = self.engine.now
        if train.dst_node != self.node_id:
            raise SimulationError(
                f"node {self.node_id}: train for node {train.dst_node} "
                f"arrived at the wrong gateway; inter routing is broken")
        for msg, _, _ in train.spans:
            if msg.t_inter_arrive < 0:
                msg.t_inter_arrive = now
        train.arrive_end = arrive_end
        self.rx_inter.append(train)
        self.rx_inter_occ += train.wire_bytes
        assert self.rx_inter_occ <= self.params.rx_inter_bytes
        self._split_kick()

    ### Egress: ingest, stage, pack ###

    def _conv_kick(self) -> None:
        if self.conv_busy or not self.rx_intra:
            return
        if self.egress.queued_bytes() >= self.params.egress_bytes:
            return  # resumed by the egress sender's drain callback
        train = self.rx_intra[0]
        self.conv_busy = True
        now = self.engine.now
        done = now + train.packets * self.conv_ps
        # the last packet cannot be ingested before its bytes have arrived
        tail = train.arrive_end + self.conv_ps
        if tail > done:
            done = tail
        self.engine.schedule(done, self._conv_done, train)

    def _conv_done(self, train: Train) -> None:
        head = self.rx_intra.popleft()
        assert head is train
        self.rx_intra_occ -= train.wire_bytes
        self.rx_intra_return(train.wire_bytes)
        self.ingested_trains += 1
        self.ingested_packets += train.packets
        now = self.engine.now

        st = self.staging.get(train.dst_node)
        if st is None:
            st = self.staging[train.dst_node] = _Staging()
        per_message = self.params.packing is PackingPolicy.PER_MESSAGE
        for msg, offset, length, in train.spans:
            if per_message and st.spans and st.spans[0][0] is not msg:
                self._emit(train.dst_node, st)  # never mix messages
            st.spans.append([msg, offset, length, now])
            st.staged_bytes += length
            self.ingested_payload += length
            while st.staged_bytes >= self.geom.inter_payload_bytes:
                self._emit(train.dst_node, st)
        self._settle_flush(train.dst_node, st)

        self.conv_busy = False
        self._conv_kick()

    def _emit(self, dst_node: int, st: _Staging) -> None:
        """Pop staged spans into one inter packet (full if possible)."""
        geom = self.geom
        take = min(st.staged_bytes, geom.inter_payload_bytes)
        assert take > 0
        spans = []
        scope = Scope.INTER_NODE
        remaining = take
        while remaining:
            msg, offset, length, staged_at = st.spans[0]
            if length <= remaining:
                st.spans.popleft()
                spans.append((msg, offset, length))
                remaining -= length
            else:
                spans.append((msg, offset, remaining))
                st.spans[0][1] = offset + remaining
                st.spans[0][2] = length - remaining
                remaining = 0
        st.staged_bytes -= take
        out = Train(spans, 1, geom.inter_header_bytes + take,
                    geom.inter_header_bytes, scope, dst_node, -1)
        self.emitted_packets += 1
        self.emitted_payload += take
        self.egress.submit(out)

    def _settle_flush(self, dst_node: int, st: _Staging) -> None:
        st.flush_seq += 1
        if not st.spans:
            return
        at = st.spans[0][3] + self.flush_ps
        now = self.engine.now
        if at < now:
            at = now
        self.engine.schedule(at, self._flush, (dst_node, st.flush_seq))

    def _flush(self, arg) -> None:
        dst_node, seq = arg
        st = self.staging.get(dst_node)
        if st is None or st.flush_seq != seq or not st.spans:
            return
        assert st.staged_bytes < self.geom.inter_payload_bytes
        self.flushed_packets += 1
        self._emit(dst_node, st)
        self._settle_flush(dst_node, st)

    def _note_inter_send(self, train: Train) -> None:
        now = self.engine.now
        for msg, _, _ in train.spans:
            if msg.t_inter_send < 0:
                msg.t_inter_send = now

    ### Ingress: split and regenerate ###

    def _split_kick(self) -> None:
        if self.split_busy or not self.rx_inter:
            return
        if self.to_intra.queued_bytes() >= self.params.to_intra_bytes:
            return  # resumed by the to_intra sender's drain callback
        train = self.rx_inter[0]
        self.split_busy = True
        grid = self.geom.intra_payload_bytes
        packets = sum(len(fragment_spans(off, length, grid))
                      for _, off, length in train.spans)
        now = self.engine.now
        done = now + packets * self.conv_ps
        tail = train.arrive_end + self.conv_ps
        if tail > done:
            done = tail
        self.engine.schedule(done, self._split_done, (train, packets))

    def _split_done(self, arg) -> None:
        train, packets = arg
        head = self.rx_inter.popleft()
        assert head is train
        self.rx_inter_occ -= train.wire_bytes
        self.rx_inter_return(train.wire_bytes)
        self.split_packets += 1
        self.split_payload += train.payload_bytes

        geom = self.geom
        grid = geom.intra_payload_bytes
        header = geom.intra_header_bytes
        for msg, offset, length in train.spans:
            frags = fragment_spans(offset, length, grid)
            out = Train([(msg, offset, length)], len(frags),
                        length + header * len(frags), header,
                        train.scope, msg.dst_node, msg.dst_acc)
            self.regen_trains += 1
            self.regen_packets += len(frags)
            self.to_intra.submit(out)

        self.split_busy = False
        self._split_kick()

    def _note_regen_send(self, train: Train) -> None:
        now = self.engine.now
        for msg, _, _ in train.spans:
            if msg.t_regen_send < 0:
                msg.t_regen_send = now

    ### Introspection ###

    def staged_bytes(self, dst_node=None) -> int:
        if dst_node is not None:
            st = self.staging.get(dst_node)
            return st.staged_bytes if st else 0
        return sum(st.staged_bytes for st in self.staging.values())

    def queue_occupancy(self) -> dict:
        return {
            "rx_intra": self.rx_intra_occ,
            "egress": self.egress.queued_bytes() if self.egress else 0,
            "rx_inter": self.rx_inter_occ,
            "to_intra": self.to_intra.queued_bytes() if self.to_intra else 0,
        }

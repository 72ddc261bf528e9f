"""Switch and link models shared by both network tiers.

Switching is virtual cut-through with buffering only at input ports. Each
input holds one byte budget (128 KiB by default) shared by per-output queues
(VOQs), so head-of-line blocking across outputs cannot happen but a full
buffer stalls the upstream sender through credits. Credits are counted in
bytes and restored when the downstream switch finishes forwarding a unit.

The unit moved per grant is a train: a contiguous burst of same-geometry
packets belonging to one or two messages. A train occupies its input buffer
from first-byte arrival, becomes an arbitration candidate once its first
header has been received, and its output transmission cannot end before its
input arrival ends (cut-through with a rate mismatch degrades gracefully).

Arbitration is iSlip. The round-robin variant keeps one grant pointer per
output and one accept pointer per input, both advanced only past accepted
grants; the age variant always picks the oldest head-of-line train, with
message id as the tie break. Passes are event-driven: any arrival, credit
restore, or transmit completion requests a pass at the current instant, and
an incomplete matching schedules a retry one arbitration cycle later (the
serialization time of a maximum-size packet), which keeps outputs from
idling while preserving the configured single iteration per cycle.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from functools import partial

from .engine import Engine


class Arbitration(enum.Enum):
    ROUND_ROBIN = "RoundRobin"
    AGE_BASED = "AgeBased"


@dataclass(frozen=True)
class LinkParams:
    """One full-duplex cable: rate, length, and the 25 ns/m flight constant."""

    bandwidth_bps: int
    length_m: float = 0.0
    propagation_ns_per_m: float = 25.0

    def __post_init__(self) -> None:
        if self.bandwidth_bps <= 0:
            raise ValueError("bandwidth must be positive")
        if self.length_m < 0:
            raise ValueError("length must be >= 0")

    @property
    def propagation_ps(self) -> int:
        return int(self.length_m * self.propagation_ns_per_m * 1000 + 0.5)

    def ser_ps(self, nbytes: int) -> int:
        """Serialization time for nbytes, rounded half up to a picosecond."""
        bw = self.bandwidth_bps
        return (nbytes * 8_000_000_000_000 + bw // 2) // bw


@dataclass(frozen=True)
class SwitchParams:
    """Per-switch knobs: size, per-input byte budget, arbitration flavor."""

    radix: int
    input_buffer_bytes: int = 131072
    arbitration: Arbitration = Arbitration.ROUND_ROBIN
    islip_iterations: int = 1
    max_wire_bytes: int = 148  # sets the arbitration cycle cadence

    def __post_init__(self) -> None:
        if self.radix < 2:
            raise ValueError("switch radix must be >= 2")
        if self.input_buffer_bytes < self.max_wire_bytes:
            raise ValueError("input buffer must hold at least one full packet")
        if self.islip_iterations < 1:
            raise ValueError("islip_iterations must be >= 1")
        if self.max_wire_bytes < 1:
            raise ValueError("max_wire_bytes must be positive")


class Train:
    """A burst of back-to-back packets carrying spans of 1..n messages.

    spans is a list of (message, offset_bytes, length_bytes) in payload
    order. The age key is the oldest spanned message; arrive_end and
    eligible_at are rewritten at every hop.
    """

    __slots__ = ("spans", "packets", "wire_bytes", "header_bytes", "scope",
                 "dst_node", "dst_acc", "age_key", "arrive_end", "eligible_at")

    def __init__(self, spans, packets, wire_bytes, header_bytes, scope,
                 dst_node, dst_acc):
        self.spans = spans
        self.packets = packets
        self.wire_bytes = wire_bytes
        self.header_bytes = header_bytes
        self.scope = scope
        self.dst_node = dst_node
        self.dst_acc = dst_acc
        self.age_key = min((m.created_at, m.id) for m, _, _ in spans)
        self.arrive_end = 0
        self.eligible_at = 0

    @property
    def payload_bytes(self) -> int:
        return sum(length for _, _, length in self.spans)

    def __repr__(self) -> str:  # debugging only
        ids = [m.id for m, _, _ in self.spans]
        return (f"Train(msgs={ids}, packets={self.packets}, "
                f"wire={self.wire_bytes}, dst={self.dst_node}/{self.dst_acc})")


class Switch:
    """Input-queued VOQ switch; wire with set_output/set_upstream, then run."""

    __slots__ = ("engine", "name", "params", "route_fn", "radix",
                 "voq", "in_occ", "in_busy", "in_link", "in_return",
                 "accept_ptr", "out_busy", "grant_ptr", "out_link", "out_recv",
                 "out_credit", "out_cycle", "_pass_at",
                 "forwarded_trains", "forwarded_bytes")

    def __init__(self, engine: Engine, name: str, params: SwitchParams,
                 route_fn):
        n = params.radix
        self.engine = engine
        self.name = name
        self.params = params
        self.route_fn = route_fn
        self.radix = n
        self.voq = [[deque() for _ in range(n)] for _ in range(n)]
        self.in_occ = [0] * n
        self.in_busy = [False] * n
        self.in_link = [None] * n
        self.in_return = [None] * n
        self.accept_ptr = [0] * n
        self.out_busy = [False] * n
        self.grant_ptr = [0] * n
        self.out_link = [None] * n
        self.out_recv = [None] * n
        self.out_credit = [None] * n
        self.out_cycle = [0] * n
        self._pass_at = None
        self.forwarded_trains = 0
        self.forwarded_bytes = 0

    ### Wiring ###

    def set_output(self, port: int, link: LinkParams, receiver,
                   credit_bytes=None) -> None:
        """Attach the far-end receiver of an output; None credit = no limit."""
        self.out_link[port] = link
        self.out_recv[port] = receiver
        self.out_credit[port] = credit_bytes
        self.out_cycle[port] = link.ser_ps(self.params.max_wire_bytes)

    def set_upstream(self, port: int, link: LinkParams, credit_return) -> None:
        """Register the inbound link (for header timing) and credit path."""
        self.in_link[port] = link
        self.in_return[port] = credit_return

    def receiver_on(self, port: int):
        """Bound receive callback for wiring into an upstream sender."""
        return partial(self._receive, port)

    def credit_return_on(self, port: int):
        return partial(self.restore_output_credit, port)

    ### Data path ###

    def _receive(self, port: int, payload) -> None:
        train, arrive_end = payload
        now = self.engine.now
        occ = self.in_occ[port] + train.wire_bytes
        assert occ <= self.params.input_buffer_bytes, \
            f"{self.name}: input {port} overflows its buffer"
        self.in_occ[port] = occ
        train.arrive_end = arrive_end
        train.eligible_at = now + self.in_link[port].ser_ps(train.header_bytes)
        out = self.route_fn(train)
        self.voq[port][out].append(train)
        self._request_pass(train.eligible_at)

    def restore_output_credit(self, port: int, nbytes: int) -> None:
        self.out_credit[port] += nbytes
        self._request_pass(self.engine.now)

    def _start_tx(self, i: int, o: int, now: int) -> None:
        train = self.voq[i][o].popleft()
        self.in_busy[i] = True
        self.out_busy[o] = True
        link = self.out_link[o]
        t_end = now + link.ser_ps(train.wire_bytes)
        if t_end < train.arrive_end:  # cannot finish before it has arrived
            t_end = train.arrive_end
        credit = self.out_credit[o]
        if credit is not None:
            assert credit >= train.wire_bytes
            self.out_credit[o] = credit - train.wire_bytes
        prop = link.propagation_ps
        self.engine.schedule(now + prop, self.out_recv[o],
                             (train, t_end + prop))
        self.engine.schedule(t_end, self._tx_done, (i, o, train))
        self.forwarded_trains += 1
        self.forwarded_bytes += train.wire_bytes

    def _tx_done(self, arg) -> None:
        i, o, train = arg
        self.in_busy[i] = False
        self.out_busy[o] = False
        self.in_occ[i] -= train.wire_bytes
        assert self.in_occ[i] >= 0
        ret = self.in_return[i]
        if ret is not None:
            ret(train.wire_bytes)
        self._request_pass(self.engine.now)

    ### Arbitration ###

    def _request_pass(self, at: int) -> None:
        pending = self._pass_at
        if pending is not None and pending <= at:
            return
        self._pass_at = at
        self.engine.schedule(at, self._run_pass, at)

    def _run_pass(self, scheduled_at) -> None:
        if self._pass_at != scheduled_at:
            return  # superseded by an earlier request
        self._pass_at = None
        now = self.engine.now
        n = self.radix
        aged = self.params.arbitration is Arbitration.AGE_BASED
        voq = self.voq
        in_busy = self.in_busy
        out_busy = self.out_busy
        wake = None

        for _ in range(self.params.islip_iterations):
            grants = [None] * n  # per input: outputs granting it this round
            any_grant = False
            for o in range(n):
                if out_busy[o] or self.out_recv[o] is None:
                    continue
                credit = self.out_credit[o]
                chosen = -1
                if aged:
                    best_key = None
                    for i in range(n):
                        if in_busy[i]:
                            continue
                        q = voq[i][o]
                        if not q:
                            continue
                        head = q[0]
                        if head.eligible_at > now:
                            if wake is None or head.eligible_at < wake:
                                wake = head.eligible_at
                            continue
                        if credit is not None and head.wire_bytes > credit:
                            continue
                        if best_key is None or head.age_key < best_key:
                            best_key = head.age_key
                            chosen = i
                else:
                    start = self.grant_ptr[o]
                    for step in range(n):
                        i = start + step
                        if i >= n:
                            i -= n
                        if in_busy[i]:
                            continue
                        q = voq[i][o]
                        if not q:
                            continue
                        head = q[0]
                        if head.eligible_at > now:
                            if wake is None or head.eligible_at < wake:
                                wake = head.eligible_at
                            continue
                        if credit is not None and head.wire_bytes > credit:
                            continue
                        chosen = i
                        break
                if chosen >= 0:
                    lst = grants[chosen]
                    if lst is None:
                        grants[chosen] = [o]
                    else:
                        lst.append(o)
                    any_grant = True
            if not any_grant:
                break
            accepted = False
            for i in range(n):
                outs = grants[i]
                if not outs:
                    continue
                if len(outs) == 1:
                    o = outs[0]
                elif aged:
                    o = min(outs, key=lambda oo: voq[i][oo][0].age_key)
                else:
                    start = self.accept_ptr[i]
                    o = min(outs, key=lambda oo: (oo - start) % n)
                self._start_tx(i, o, now)
                accepted = True
                if not aged:
                    self.grant_ptr[o] = (i + 1) % n
                    self.accept_ptr[i] = (o + 1) % n
            if not accepted:
                break

        # A single iteration can leave a compatible pair unmatched; retry one
        # cycle later so no output idles while work is waiting.
        follow = None
        for o in range(n):
            if out_busy[o] or self.out_recv[o] is None:
                continue
            credit = self.out_credit[o]
            for i in range(n):
                if in_busy[i]:
                    continue
                q = voq[i][o]
                if not q:
                    continue
                head = q[0]
                if head.eligible_at > now:
                    if wake is None or head.eligible_at < wake:
                        wake = head.eligible_at
                    continue
                if credit is not None and head.wire_bytes > credit:
                    continue
                retry = now + self.out_cycle[o]
                if follow is None or retry < follow:
                    follow = retry
                break
        if follow is not None and (wake is None or follow < wake):
            wake = follow
        if wake is not None:
            self._request_pass(wake)

    ### Introspection (tests and metrics) ###

    def queued_trains(self) -> int:
        return sum(len(q) for row in self.voq for q in row)

    def buffered_bytes(self) -> int:
        return sum(self.in_occ)


class Sender:
    """Serializes queued trains onto one link into a credit-limited input.

    Used for every endpoint egress: accelerator injection and the NIC's two
    transmit sides. The queue itself is unbounded; the owner bounds it.
    """

    __slots__ = ("engine", "link", "receiver", "credit", "queue", "busy",
                 "on_start", "on_drain", "sent_trains", "sent_bytes",
                 "_queued_wire")

    def __init__(self, engine: Engine, link: LinkParams, receiver,
                 credit_bytes=None, on_start=None, on_drain=None):
        self.engine = engine
        self.link = link
        self.receiver = receiver
        self.credit = credit_bytes
        self.queue = deque()
        self.busy = False
        self.on_start = on_start  # called with the train when its send begins
        self.on_drain = on_drain  # called with the train after each send
        self.sent_trains = 0
        self.sent_bytes = 0
        self._queued_wire = 0

    def submit(self, train: Train) -> None:
        self.queue.append(train)
        self._queued_wire += train.wire_bytes
        self._kick()

    def restore_credit(self, nbytes: int) -> None:
        self.credit += nbytes
        self._kick()

    def queued_bytes(self) -> int:
        return self._queued_wire

    def _kick(self) -> None:
        if self.busy or not self.queue:
            return
        head = self.queue[0]
        if self.credit is not None and head.wire_bytes > self.credit:
            return
        self.queue.popleft()
        self._queued_wire -= head.wire_bytes
        self.busy = True
        if self.credit is not None:
            self.credit -= head.wire_bytes
        if self.on_start is not None:
            self.on_start(head)
        now = self.engine.now
        t_end = now + self.link.ser_ps(head.wire_bytes)
        if head.arrive_end > t_end:
            t_end = head.arrive_end
        prop = self.link.propagation_ps
        self.engine.schedule(now + prop, self.receiver, (head, t_end + prop))
        self.engine.schedule(t_end, self._tx_done, head)
        self.sent_trains += 1
        self.sent_bytes += head.wire_bytes

    def _tx_done(self, train: Train) -> None:
        self.busy = False
        if self.on_drain is not None:
            self.on_drain(train)
        self._kick()

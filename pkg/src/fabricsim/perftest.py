"""Two-node point-to-point validation scenario.

Models an RDMA-write style benchmark between two hosts: messages post
through a fixed host overhead, cross the source PCIe link chunk by chunk,
serialize onto a single inter-node link, and cross the destination PCIe
link. Chunks cut through stage to stage, so large transfers pipeline and
the reported bandwidth converges to the slowest stage.

The DMA engine reads a message as one continuous TLP stream regardless of
how it is cut into wire packets, so each chunk is charged a slice of the
closed-form cumulative PCIe latency curve; the per-message PCIe occupancy
then telescopes to the closed form exactly. It is recorded separately so
the intra-node segment can be checked against the closed form directly,
independent of the inter-node bottleneck.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .engine import Engine, ns_to_ps
from .fabric import LinkParams
from .pcie import PcieLinkParams, gen3_x16, message_latency_ns


@dataclass(frozen=True)
class PerftestParams:
    """Fixed two-host scenario: PCIe endpoints bridged by one network link."""

    inter_gbps: float = 100.0
    inter_link_m: float = 2.0
    host_overhead_ns: float = 290.0
    chunk_payload_bytes: int = 4032
    inter_header_bytes: int = 64
    pcie: PcieLinkParams = field(default_factory=gen3_x16)

    def __post_init__(self) -> None:
        if self.inter_gbps <= 0:
            raise ValueError("inter_gbps must be positive")
        if self.chunk_payload_bytes <= 0:
            raise ValueError("chunk_payload_bytes must be positive")
        if self.inter_header_bytes < 0:
            raise ValueError("inter_header_bytes must be >= 0")
        if self.host_overhead_ns < 0:
            raise ValueError("host_overhead_ns must be >= 0")


class _Transfer:
    __slots__ = ("size", "chunks", "t_post", "pcie_start", "pcie_done",
                 "t_delivered", "remaining")

    def __init__(self, size: int, chunks) -> None:
        # chunks: ((payload_bytes, pcie_service_ps), ...)
        self.size = size
        self.chunks = chunks
        self.t_post = -1
        self.pcie_start = -1
        self.pcie_done = -1
        self.t_delivered = -1
        self.remaining = len(chunks)


class PerftestRun:
    """One engine wiring of the host -> PCIe -> link -> PCIe pipeline."""

    def __init__(self, params: PerftestParams | None = None) -> None:
        self.params = params or PerftestParams()
        p = self.params
        self.engine = Engine()
        self.link = LinkParams(int(p.inter_gbps * 1e9), p.inter_link_m)
        self.host_ps = ns_to_ps(p.host_overhead_ns)
        self._pcie_cache = {}
        self._host_q = deque()
        self._host_busy = False
        self._src_q = deque()
        self._src_busy = False
        self._link_q = deque()
        self._link_busy = False
        self._dst_q = deque()
        self._dst_busy = False
        self.delivered = []

    def _chunk_plan(self, size: int):
        """Cut size into wire chunks, each charged its slice of the
        cumulative PCIe latency so the slices sum to the closed form."""
        plan = self._pcie_cache.get(size)
        if plan is None:
            step = self.params.chunk_payload_bytes
            out = []
            prev_ps = 0
            prefix = 0
            while prefix < size:
                csize = min(step, size - prefix)
                prefix += csize
                cum = message_latency_ns(self.params.pcie, prefix)
                # round the cumulative curve to the ps grid, then difference,
                # so slice times sum exactly to the rounded closed form
                cum_ps = (cum.numerator * 1000 + cum.denominator // 2) \
                    // cum.denominator
                out.append((csize, cum_ps - prev_ps))
                prev_ps = cum_ps
            plan = tuple(out)
            self._pcie_cache[size] = plan
        return plan

    ### Injection ###

    def post(self, size: int, count: int = 1) -> list:
        """Queue transfers behind the host overhead stage."""
        plan = self._chunk_plan(size)
        batch = [_Transfer(size, plan) for _ in range(count)]
        for tr in batch:
            tr.t_post = self.engine.now
            self._host_q.append(tr)
        self._host_kick()
        return batch

    ### Host overhead stage (per message) ###

    def _host_kick(self) -> None:
        if self._host_busy or not self._host_q:
            return
        self._host_busy = True
        tr = self._host_q.popleft()
        self.engine.schedule(self.engine.now + self.host_ps, self._host_done, tr)

    def _host_done(self, tr: _Transfer) -> None:
        last = len(tr.chunks) - 1
        for i, (csize, service) in enumerate(tr.chunks):
            self._src_q.append((tr, csize, service, i == last))
        self._src_kick()
        self._host_busy = False
        self._host_kick()

    ### Source PCIe stage (per chunk) ###

    def _src_kick(self) -> None:
        if self._src_busy or not self._src_q:
            return
        self._src_busy = True
        tr, _csize, service, _last = self._src_q[0]
        if tr.pcie_start < 0:
            tr.pcie_start = self.engine.now
        self.engine.schedule(self.engine.now + service, self._src_done, None)

    def _src_done(self, _arg) -> None:
        item = self._src_q.popleft()
        tr, _csize, _service, last = item
        if last:
            tr.pcie_done = self.engine.now
        self._link_q.append(item)
        self._link_kick()
        self._src_busy = False
        self._src_kick()

    ### Inter-node link stage (per chunk) ###

    def _link_kick(self) -> None:
        if self._link_busy or not self._link_q:
            return
        self._link_busy = True
        _, csize, _, _ = self._link_q[0]
        wire = csize + self.params.inter_header_bytes
        self.engine.schedule(self.engine.now + self.link.ser_ps(wire),
                             self._link_done, None)

    def _link_done(self, _arg) -> None:
        item = self._link_q.popleft()
        self.engine.schedule(self.engine.now + self.link.propagation_ps,
                             self._dst_arrive, item)
        self._link_busy = False
        self._link_kick()

    ### Destination PCIe stage (per chunk) ###

    def _dst_arrive(self, item) -> None:
        self._dst_q.append(item)
        self._dst_kick()

    def _dst_kick(self) -> None:
        if self._dst_busy or not self._dst_q:
            return
        self._dst_busy = True
        _, _csize, service, _last = self._dst_q[0]
        self.engine.schedule(self.engine.now + service, self._dst_done, None)

    def _dst_done(self, _arg) -> None:
        tr, _csize, _service, _last = self._dst_q.popleft()
        tr.remaining -= 1
        if tr.remaining == 0:
            tr.t_delivered = self.engine.now
            self.delivered.append(tr)
        self._dst_busy = False
        self._dst_kick()

    ### Execution ###

    def run_until_idle(self, limit_ps: int = 60_000_000_000_000) -> None:
        self.engine.run_until(limit_ps)
        assert not (self._host_q or self._src_q or self._link_q or self._dst_q
                    or self._host_busy or self._src_busy or self._link_busy
                    or self._dst_busy), "perftest pipeline did not drain"


@dataclass(frozen=True)
class LatencyProbe:
    size_bytes: int
    latency_ns: float
    pcie_segment_ns: float
    pcie_oracle_ns: float


def measure_latency(size: int, params: PerftestParams | None = None) -> LatencyProbe:
    """One transfer alone on the fabric, endpoint to endpoint."""
    run = PerftestRun(params)
    (tr,) = run.post(size, 1)
    run.run_until_idle()
    oracle = message_latency_ns(run.params.pcie, size)
    return LatencyProbe(
        size_bytes=size,
        latency_ns=(tr.t_delivered - tr.t_post) / 1000.0,
        pcie_segment_ns=(tr.pcie_done - tr.pcie_start) / 1000.0,
        pcie_oracle_ns=float(oracle),
    )


def measure_bandwidth(size: int, params: PerftestParams | None = None,
                      min_total_bytes: int = 1 << 26,
                      min_messages: int = 8,
                      max_messages: int = 20_000) -> float:
    """Streamed transfers; returns delivered bytes per second.

    The message count targets min_total_bytes of payload but is clamped to
    max_messages so tiny sizes stay cheap; the pipeline reaches steady state
    within a handful of messages either way.
    """
    run = PerftestRun(params)
    count = max(min_messages, min(-(-min_total_bytes // size), max_messages))
    run.post(size, count)
    run.run_until_idle()
    assert len(run.delivered) == count
    span_ps = max(tr.t_delivered for tr in run.delivered)
    return count * size / (span_ps * 1e-12)


DEFAULT_TABLE_SIZES = (128, 4096, 65536, 131072, 524288, 1 << 20, 4 << 20)


def run_table(sizes=DEFAULT_TABLE_SIZES, params: PerftestParams | None = None):
    """(size, bandwidth GB/s, latency us) rows for the validation report."""
    rows = []
    for size in sizes:
        probe = measure_latency(size, params)
        bw = measure_bandwidth(size, params)
        rows.append((size, bw / 1e9, probe.latency_ns / 1000.0))
    return rows

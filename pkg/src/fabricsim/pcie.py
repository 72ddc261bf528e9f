"""Closed-form PCIe transfer-latency model.

A message of S bytes moves as ceil(S / max_payload) TLPs, each costing the
serialization time of (tlp_overhead + max_payload) bytes at the link's
effective byte rate, plus one ACK DLLP per ack_factor TLPs. The effective
byte rate is width x per-lane datarate x line encoding.

All arithmetic is exact rational (fractions.Fraction), rounded only for
display, so the model doubles as a bit-stable oracle when validating the
event-driven simulator against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

_VALID_WIDTHS = (1, 2, 4, 8, 16, 32)


@dataclass(frozen=True)
class PcieLinkParams:
    """Link and protocol parameters for the latency formula.

    The DLLP size, DLLP overhead, and ack_factor defaults are stated
    assumptions (8 B, 0 B, 4 TLPs per ACK), exposed as configuration.
    """

    width: int = 16
    datarate_bps: int = 8_000_000_000  # per lane
    encoding: Fraction = field(default_factory=lambda: Fraction(128, 130))
    tlp_overhead_bytes: int = 20
    max_payload_bytes: int = 128
    dllp_overhead_bytes: int = 0
    dllp_size_bytes: int = 8
    ack_factor: int = 4

    def __post_init__(self) -> None:
        if self.width not in _VALID_WIDTHS:
            raise ValueError(f"width must be one of {_VALID_WIDTHS}")
        enc = Fraction(self.encoding)
        if not 0 < enc <= 1:
            raise ValueError("encoding must be in (0, 1]")
        object.__setattr__(self, "encoding", enc)
        if self.ack_factor < 1:
            raise ValueError("ack_factor must be >= 1")
        if self.max_payload_bytes <= 0:
            raise ValueError("max_payload_bytes must be positive")
        if self.datarate_bps <= 0:
            raise ValueError("datarate_bps must be positive")


def gen3_x16(**overrides) -> PcieLinkParams:
    """PCIe Gen3 x16: 8 Gbps/lane, 128b/130b encoding, about 126 Gbps effective."""
    params = dict(width=16, datarate_bps=8_000_000_000, encoding=Fraction(128, 130))
    params.update(overrides)
    return PcieLinkParams(**params)


def effective_bps(p: PcieLinkParams) -> Fraction:
    """Effective link bit rate: width x datarate x encoding, exact."""
    return Fraction(p.width * p.datarate_bps) * p.encoding


def bytes_per_ns(p: PcieLinkParams) -> Fraction:
    """Effective byte rate in bytes/ns, exact (Gen3 x16 gives 2048/130)."""
    return effective_bps(p) / 8 / 1_000_000_000


def message_latency_ns(p: PcieLinkParams, message_bytes: int) -> Fraction:
    """Exact transfer latency in ns for one message over this link.

    number_tlps  = ceil(message / max_payload)
    number_acks  = ceil(number_tlps / ack_factor)
    tlp_time     = (tlp_overhead + max_payload) / bytes_per_ns
    dllp_time    = (dllp_overhead + dllp_size) / bytes_per_ns
    latency      = number_tlps * tlp_time + number_acks * dllp_time

    Packet counts use ceiling division: fractional packets are physically
    meaningless. The last TLP is charged at full max_payload size.
    """
    if message_bytes <= 0:
        raise ValueError("message_bytes must be positive")
    rate = bytes_per_ns(p)
    number_tlps = -(-message_bytes // p.max_payload_bytes)
    number_acks = -(-number_tlps // p.ack_factor)
    tlp_time = Fraction(p.tlp_overhead_bytes + p.max_payload_bytes) / rate
    dllp_time = Fraction(p.dllp_overhead_bytes + p.dllp_size_bytes) / rate
    return number_tlps * tlp_time + number_acks * dllp_time

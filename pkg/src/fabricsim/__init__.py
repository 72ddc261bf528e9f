"""Deterministic packet-level simulator for two-tier accelerator fabrics.

The package models nodes of accelerators joined by an on-node switch, a
gateway NIC that repacks traffic into large-MTU packets, and a two-stage
folded-Clos network between nodes. A discrete-event engine with integer
picosecond time drives everything, so a (config, seed) pair reproduces
byte-identical results on any host.

Public surface:

  engine      event loop, SplitMix64 streams, time helpers
  model       packet geometry, messages, latency decomposition
  topology    star and folded-Clos graph builders with static routes
  fabric      switches: virtual output queues, credits, iSlip arbitration
  nic         the intra/inter gateway (aggregation, split, staging)
  traffic     synthetic workload generators (C1..C5 mixes)
  simulation  full-fabric assembly and run loop
  sweep       load sweeps, CSV output, saturation detection
  analysis    overhead model, throughput bound, model fitting
  pcie        closed-form host-link latency calculator
  perftest    two-node microbenchmark (bandwidth plateau, echo latency)
"""

from .analysis import (
    FitModel,
    FitResult,
    OverheadInputs,
    fit_models,
    throughput_bound,
    traffic_overhead,
)
from .engine import Engine, SimulationError, SplitMix64, derive_seed
from .model import (
    DEFAULT_GEOMETRY,
    LATENCY_COMPONENTS,
    LatencyRecord,
    Message,
    PacketGeometry,
    Scope,
    fragment_spans,
    packetize,
)
from .pcie import PcieLinkParams, gen3_x16, message_latency_ns

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_GEOMETRY",
    "Engine",
    "FitModel",
    "FitResult",
    "LATENCY_COMPONENTS",
    "LatencyRecord",
    "Message",
    "OverheadInputs",
    "PacketGeometry",
    "PcieLinkParams",
    "Scope",
    "SimulationError",
    "SplitMix64",
    "derive_seed",
    "fit_models",
    "fragment_spans",
    "gen3_x16",
    "message_latency_ns",
    "packetize",
    "throughput_bound",
    "traffic_overhead",
]

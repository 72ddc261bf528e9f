"""Run configuration: JSON loading, validation, defaults, and shipped presets.

Configs are plain JSON with five groups (network, geometry, nic, traffic,
sweep) plus a name and a seed. Loading applies defaults, rejects unknown
keys, and cross-validates the groups; every diagnostic carries the JSON
path of the offending field so a bad preset edit is a one-line fix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .fabric import Arbitration
from .model import PacketGeometry
from .nic import NicParams, PackingPolicy
from .topology import TopologyError, radix_for_nodes
from .traffic import PATTERN_INTER_FRACTION, LoadPoint, TrafficPattern


class ConfigError(ValueError):
    """A config file problem, with the JSON path of the offending field."""


def _fail(path: str, message: str) -> None:
    raise ConfigError(f"{path}: {message}")


def _take(d: dict, key: str, path: str, default=None, required: bool = False):
    if key in d:
        return d.pop(key)
    if required:
        _fail(f"{path}.{key}", "required field is missing")
    return default


def _check_empty(d: dict, path: str) -> None:
    if d:
        key = sorted(d)[0]
        _fail(f"{path}.{key}", "unknown field")


def _number(value, path: str, *, integer: bool = False, minimum=None,
            maximum=None, choices=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    if integer and not (isinstance(value, int) or float(value).is_integer()):
        _fail(path, f"expected an integer, got {value!r}")
    if integer:
        value = int(value)
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        _fail(path, f"must be <= {maximum}, got {value}")
    if choices is not None and value not in choices:
        _fail(path, f"must be one of {sorted(choices)}, got {value}")
    return value


@dataclass(frozen=True)
class FabricConfig:
    """Everything a sweep run needs, cross-validated."""

    name: str
    nodes: int
    accelerators_per_node: int
    acc_link_gbps: float
    nic_link_gbps: float
    rlft_link_gbps: float
    intra_link_m: float
    inter_link_m: float
    intra_buffer_bytes: int
    inter_buffer_bytes: int
    arbitration: Arbitration
    islip_iterations: int
    geometry: PacketGeometry
    nic: NicParams
    pattern: TrafficPattern
    loads: tuple
    duration_us: float
    seed: int
    injection_cap_messages: int = 512

    @property
    def switch_radix(self) -> int:
        return radix_for_nodes(self.nodes)

    @property
    def load_points(self) -> tuple:
        return tuple(LoadPoint(l, self.duration_us * 1000.0) for l in self.loads)

    def replace(self, **changes) -> "FabricConfig":
        from dataclasses import replace as dc_replace
        return dc_replace(self, **changes)

    def to_dict(self) -> dict:
        """Config as the canonical JSON structure (all defaults explicit)."""
        return {
            "name": self.name,
            "seed": self.seed,
            "network": {
                "nodes": self.nodes,
                "accelerators_per_node": self.accelerators_per_node,
                "acc_link_gbps": self.acc_link_gbps,
                "nic_link_gbps": self.nic_link_gbps,
                "rlft_link_gbps": self.rlft_link_gbps,
                "intra_link_m": self.intra_link_m,
                "inter_link_m": self.inter_link_m,
                "intra_buffer_bytes": self.intra_buffer_bytes,
                "inter_buffer_bytes": self.inter_buffer_bytes,
                "arbitration": self.arbitration.value,
                "islip_iterations": self.islip_iterations,
                "switches": 3 * self.switch_radix // 2,
            },
            "geometry": {
                "intra_header_bytes": self.geometry.intra_header_bytes,
                "intra_payload_bytes": self.geometry.intra_payload_bytes,
                "inter_header_bytes": self.geometry.inter_header_bytes,
                "inter_payload_bytes": self.geometry.inter_payload_bytes,
            },
            "nic": {
                "conversion_ns_per_packet": self.nic.conversion_ns_per_packet,
                "flush_timeout_ns": self.nic.flush_timeout_ns,
                "packing": self.nic.packing.value,
                "rx_intra_bytes": self.nic.rx_intra_bytes,
                "egress_bytes": self.nic.egress_bytes,
                "rx_inter_bytes": self.nic.rx_inter_bytes,
                "to_intra_bytes": self.nic.to_intra_bytes,
            },
            "traffic": {
                "pattern": self.pattern.name,
                "inter_fraction": self.pattern.inter_fraction,
                "message_bytes": self.pattern.message_bytes,
                "injection_cap_messages": self.injection_cap_messages,
            },
            "sweep": {
                "loads": list(self.loads),
                "duration_us": self.duration_us,
            },
        }


def config_from_dict(data: dict, path: str = "config") -> FabricConfig:
    """Validate a parsed JSON object into a FabricConfig."""
    if not isinstance(data, dict):
        _fail(path, "expected a JSON object")
    data = dict(data)

    name = _take(data, "name", path, default="unnamed")
    if not isinstance(name, str) or not name:
        _fail(f"{path}.name", "expected a non-empty string")
    seed = _number(_take(data, "seed", path, default=1), f"{path}.seed",
                   integer=True, minimum=0)

    net = _take(data, "network", path, default={})
    if not isinstance(net, dict):
        _fail(f"{path}.network", "expected an object")
    net = dict(net)
    np = f"{path}.network"
    nodes = _number(_take(net, "nodes", np, default=32), f"{np}.nodes",
                    integer=True, minimum=2)
    try:
        radix = radix_for_nodes(nodes)
    except TopologyError as exc:
        raise ConfigError(f"{np}.nodes: {exc}") from None
    accs = _number(_take(net, "accelerators_per_node", np, default=8),
                   f"{np}.accelerators_per_node", integer=True,
                   choices={1, 2, 4, 8})
    acc_gbps = _number(_take(net, "acc_link_gbps", np, default=512),
                       f"{np}.acc_link_gbps", choices={128, 256, 512})
    nic_gbps = _number(_take(net, "nic_link_gbps", np, default=400),
                       f"{np}.nic_link_gbps", minimum=1)
    rlft_gbps = _number(_take(net, "rlft_link_gbps", np, default=512),
                        f"{np}.rlft_link_gbps", minimum=1)
    intra_m = _number(_take(net, "intra_link_m", np, default=0.3),
                      f"{np}.intra_link_m", minimum=0)
    inter_m = _number(_take(net, "inter_link_m", np, default=2.0),
                      f"{np}.inter_link_m", minimum=0)
    intra_buf = _number(_take(net, "intra_buffer_bytes", np, default=131072),
                        f"{np}.intra_buffer_bytes", integer=True, minimum=1)
    inter_buf = _number(_take(net, "inter_buffer_bytes", np, default=131072),
                        f"{np}.inter_buffer_bytes", integer=True, minimum=1)
    arb_name = _take(net, "arbitration", np, default="RoundRobin")
    try:
        arbitration = Arbitration(arb_name)
    except ValueError:
        _fail(f"{np}.arbitration",
              f"must be one of {[a.value for a in Arbitration]}, got {arb_name!r}")
    iters = _number(_take(net, "islip_iterations", np, default=1),
                    f"{np}.islip_iterations", integer=True, minimum=1)
    switches = _take(net, "switches", np)
    if switches is not None:
        switches = _number(switches, f"{np}.switches", integer=True, minimum=1)
        expected = 3 * radix // 2
        if switches != expected:
            _fail(f"{np}.switches",
                  f"{nodes} nodes use a switch size of {radix} and therefore "
                  f"{expected} switches, got {switches}")
    _check_empty(net, np)

    geo = _take(data, "geometry", path, default={})
    if not isinstance(geo, dict):
        _fail(f"{path}.geometry", "expected an object")
    geo = dict(geo)
    gp = f"{path}.geometry"
    geo_kwargs = {}
    for key in ("intra_header_bytes", "intra_payload_bytes",
                "inter_header_bytes", "inter_payload_bytes"):
        if key in geo:
            geo_kwargs[key] = _number(geo.pop(key), f"{gp}.{key}",
                                      integer=True, minimum=1)
    _check_empty(geo, gp)
    try:
        geometry = PacketGeometry(**geo_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{gp}: {exc}") from None

    nic_d = _take(data, "nic", path, default={})
    if not isinstance(nic_d, dict):
        _fail(f"{path}.nic", "expected an object")
    nic_d = dict(nic_d)
    kp = f"{path}.nic"
    nic_kwargs = {}
    for key, integer in (("conversion_ns_per_packet", False),
                         ("flush_timeout_ns", False),
                         ("rx_intra_bytes", True), ("egress_bytes", True),
                         ("rx_inter_bytes", True), ("to_intra_bytes", True)):
        if key in nic_d:
            nic_kwargs[key] = _number(nic_d.pop(key), f"{kp}.{key}",
                                      integer=integer, minimum=0)
    if "packing" in nic_d:
        raw = nic_d.pop("packing")
        try:
            nic_kwargs["packing"] = PackingPolicy(raw)
        except ValueError:
            _fail(f"{kp}.packing",
                  f"must be one of {[p.value for p in PackingPolicy]}, got {raw!r}")
    _check_empty(nic_d, kp)
    try:
        nic = NicParams(**nic_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{kp}: {exc}") from None

    tr = _take(data, "traffic", path, default={})
    if not isinstance(tr, dict):
        _fail(f"{path}.traffic", "expected an object")
    tr = dict(tr)
    tp = f"{path}.traffic"
    pat = _take(tr, "pattern", tp, default="C1")
    if not isinstance(pat, str):
        _fail(f"{tp}.pattern", f"expected a string, got {pat!r}")
    msg_bytes = _number(_take(tr, "message_bytes", tp, default=4096),
                        f"{tp}.message_bytes", integer=True, minimum=1)
    frac = _take(tr, "inter_fraction", tp)
    cap = _number(_take(tr, "injection_cap_messages", tp, default=512),
                  f"{tp}.injection_cap_messages", integer=True, minimum=1)
    _check_empty(tr, tp)
    if frac is not None:
        frac = _number(frac, f"{tp}.inter_fraction", minimum=0.0, maximum=1.0)
    if pat in PATTERN_INTER_FRACTION:
        expected_frac = PATTERN_INTER_FRACTION[pat]
        if frac is not None and frac != expected_frac:
            _fail(f"{tp}.inter_fraction",
                  f"pattern {pat} is defined with {expected_frac}, got {frac}")
        frac = expected_frac
    elif frac is None:
        _fail(f"{tp}.inter_fraction",
              f"required for custom pattern {pat!r} "
              f"(named patterns: {', '.join(PATTERN_INTER_FRACTION)})")
    try:
        pattern = TrafficPattern(pat, frac, msg_bytes)
    except ValueError as exc:
        raise ConfigError(f"{tp}: {exc}") from None

    sw = _take(data, "sweep", path, default={})
    if not isinstance(sw, dict):
        _fail(f"{path}.sweep", "expected an object")
    sw = dict(sw)
    sp = f"{path}.sweep"
    loads_raw = _take(sw, "loads", sp,
                      default=[round(0.1 * i, 1) for i in range(1, 11)])
    duration_us = _number(_take(sw, "duration_us", sp, default=250.0),
                          f"{sp}.duration_us", minimum=1e-3)
    _check_empty(sw, sp)
    if not isinstance(loads_raw, list) or not loads_raw:
        _fail(f"{sp}.loads", "expected a non-empty list of loads in (0, 1]")
    loads = []
    for i, l in enumerate(loads_raw):
        loads.append(_number(l, f"{sp}.loads[{i}]", minimum=1e-9, maximum=1.0))
    if len(set(loads)) != len(loads):
        _fail(f"{sp}.loads", "load points must be distinct")

    _check_empty(data, path)

    cfg = FabricConfig(
        name=name, nodes=nodes, accelerators_per_node=accs,
        acc_link_gbps=float(acc_gbps), nic_link_gbps=float(nic_gbps),
        rlft_link_gbps=float(rlft_gbps), intra_link_m=float(intra_m),
        inter_link_m=float(inter_m), intra_buffer_bytes=intra_buf,
        inter_buffer_bytes=inter_buf, arbitration=arbitration,
        islip_iterations=iters, geometry=geometry, nic=nic, pattern=pattern,
        loads=tuple(loads), duration_us=float(duration_us), seed=seed,
        injection_cap_messages=cap,
    )
    _cross_validate(cfg, path)
    return cfg


def _cross_validate(cfg: FabricConfig, path: str) -> None:
    g = cfg.geometry
    if g.intra_wire_bytes > cfg.intra_buffer_bytes:
        _fail(f"{path}.network.intra_buffer_bytes",
              f"smaller than one intra packet ({g.intra_wire_bytes} B)")
    if g.inter_wire_bytes > cfg.inter_buffer_bytes:
        _fail(f"{path}.network.inter_buffer_bytes",
              f"smaller than one inter packet ({g.inter_wire_bytes} B)")
    if g.inter_wire_bytes > cfg.nic.egress_bytes:
        _fail(f"{path}.nic.egress_bytes",
              f"smaller than one inter packet ({g.inter_wire_bytes} B)")
    if g.intra_wire_bytes > cfg.nic.to_intra_bytes:
        _fail(f"{path}.nic.to_intra_bytes",
              f"smaller than one intra packet ({g.intra_wire_bytes} B)")
    wire = g.message_wire_bytes(cfg.pattern.message_bytes)
    if wire > cfg.nic.rx_intra_bytes:
        _fail(f"{path}.nic.rx_intra_bytes",
              f"one message spans {wire} wire bytes and would deadlock the "
              f"gateway receive buffer")
    if g.intra_wire_bytes > cfg.nic.rx_intra_bytes:
        _fail(f"{path}.nic.rx_intra_bytes",
              f"smaller than one intra packet ({g.intra_wire_bytes} B)")


def load_config(path) -> FabricConfig:
    """Load and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(data, path=str(path))


def preset_names() -> list:
    """Shipped preset configs, sorted by name."""
    pkg = resources.files(__package__) / "presets"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> FabricConfig:
    pkg = resources.files(__package__) / "presets"
    candidate = pkg / f"{name}.json"
    if not candidate.is_file():
        known = ", ".join(preset_names())
        raise ConfigError(f"unknown preset {name!r}; shipped presets: {known}")
    data = json.loads(candidate.read_text(encoding="utf-8"))
    return config_from_dict(data, path=f"preset:{name}")

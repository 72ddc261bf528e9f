"""Command-line front end.

Subcommands:
  run           sweep a config (file or named preset) and write CSV/SVG
  pcie-latency  closed-form PCIe transfer latency for given message sizes
  overhead      wire-efficiency factor and optional throughput bound
  fit           fit the four candidate models to inter_pct/throughput CSV
  validate      two-host point-to-point bandwidth/latency table
  presets       list shipped experiment presets

Exit codes: 0 success, 2 usage or configuration errors, 1 runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import sys

from .analysis import OverheadInputs, fit_models, throughput_bound, traffic_overhead
from .config import ConfigError, load_config, load_preset, preset_names
from .fabric import Arbitration
from .model import PacketGeometry
from .pcie import gen3_x16, message_latency_ns
from .perftest import PerftestParams, run_table
from .sweep import SweepError, resolve_workers, run_sweep, write_csv
from .traffic import PATTERN_NAMES, TrafficPattern


def _parse_size(text: str) -> int:
    """Accept plain byte counts plus K/M/G binary suffixes (e.g. 128K)."""
    t = text.strip()
    mult = 1
    if t and t[-1] in "kKmMgG":
        mult = {"k": 1 << 10, "m": 1 << 20, "g": 1 << 30}[t[-1].lower()]
        t = t[:-1]
    try:
        value = int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    if value <= 0 or mult > 1 and not t:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    return value * mult


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="fabricsim", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a load sweep")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("config", nargs="?", help="path to a config JSON file")
    src.add_argument("--preset", help="name of a shipped preset")
    p.add_argument("--output", help="CSV path (default <name>.csv)")
    p.add_argument("--svg", metavar="PREFIX",
                   help="also write PREFIX-throughput.svg and PREFIX-latency.svg")
    p.add_argument("--workers", type=int,
                   help="parallel sweep processes (default $FABRICSIM_WORKERS or 1)")
    p.add_argument("--duration", type=float, metavar="US",
                   help="override run duration in microseconds")
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--loads", help="override load list, e.g. 0.5,0.7,1.0")
    p.add_argument("--pattern", choices=list(PATTERN_NAMES),
                   help="override the traffic pattern")
    p.add_argument("--arbitration",
                   choices=[a.value for a in Arbitration],
                   help="override the switch arbitration scheme")
    p.add_argument("--accelerators", type=int, choices=(1, 2, 4, 8),
                   help="override accelerators per node")
    p.add_argument("--acc-gbps", type=float, help="override accelerator link rate")

    p = sub.add_parser("pcie-latency", help="closed-form PCIe latency")
    p.add_argument("sizes", nargs="+", type=_parse_size,
                   help="message sizes in bytes (K/M/G suffixes allowed)")
    p.add_argument("--width", type=int, default=16, help="lane count")
    p.add_argument("--lane-gbps", type=float, default=8.0,
                   help="per-lane data rate")
    p.add_argument("--max-payload", type=int, default=128,
                   help="max payload per packet (MPS)")
    p.add_argument("--tlp-overhead", type=int, default=20)
    p.add_argument("--dllp-bytes", type=int, default=8)
    p.add_argument("--ack-factor", type=int, default=4)

    p = sub.add_parser("overhead", help="wire-efficiency factor and bound")
    p.add_argument("--intra-header", type=int, default=20)
    p.add_argument("--intra-payload", type=int, default=128)
    p.add_argument("--inter-header", type=int, default=64)
    p.add_argument("--inter-payload", type=int, default=4032)
    p.add_argument("--adjustment", type=float,
                   help="fitted adjustment constant (Gbps); enables the bound")
    p.add_argument("--inter-pct", type=float,
                   help="share of traffic addressed to remote nodes, 0..100")
    p.add_argument("--nodes", type=int, help="node count for the bound")

    p = sub.add_parser("fit", help="fit throughput-vs-inter-share models")
    p.add_argument("data", help="CSV with header inter_pct,throughput_gbps")

    p = sub.add_parser("validate", help="two-host bandwidth/latency table")
    p.add_argument("--sizes", default=None,
                   help="comma-separated sizes (default spans 128B..4M)")
    p.add_argument("--inter-gbps", type=float, default=100.0)
    p.add_argument("--host-ns", type=float, default=290.0)

    sub.add_parser("presets", help="list shipped presets")
    return top


def _cmd_run(args) -> int:
    cfg = load_preset(args.preset) if args.preset else load_config(args.config)
    overrides = {}
    if args.duration is not None:
        overrides["duration_us"] = args.duration
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.loads:
        try:
            overrides["loads"] = tuple(float(t) for t in args.loads.split(","))
        except ValueError:
            raise ConfigError(f"bad --loads value {args.loads!r}")
    if args.pattern:
        overrides["pattern"] = TrafficPattern.named(args.pattern)
    if args.arbitration:
        overrides["arbitration"] = Arbitration(args.arbitration)
    if args.accelerators is not None:
        overrides["accelerators_per_node"] = args.accelerators
    if args.acc_gbps is not None:
        overrides["acc_link_gbps"] = args.acc_gbps
    if overrides:
        cfg = cfg.replace(**overrides)

    workers = resolve_workers(args.workers)
    results = run_sweep(cfg, workers=workers)
    out = args.output or f"{cfg.name}.csv"
    sibling = write_csv(results, out)

    print(f"# {cfg.name}: {cfg.nodes} nodes x {cfg.accelerators_per_node} accs, "
          f"{cfg.pattern.name}, {cfg.duration_us:g} us, seed {cfg.seed}")
    print(f"{'load':>6} {'offered':>12} {'total':>12} {'delivered':>10}")
    for r in results:
        print(f"{r.load * 100:5.0f}% {r.offered_gbps:10.1f} G "
              f"{r.total_gbps:10.1f} G {r.delivered_fraction:9.1%}")
    print(f"wrote {out} and {sibling}")

    if args.svg:
        from .svg import latency_chart, throughput_chart
        tp = f"{args.svg}-throughput.svg"
        lp = f"{args.svg}-latency.svg"
        throughput_chart(results, path=tp)
        latency_chart(results, path=lp)
        print(f"wrote {tp} and {lp}")
    return 0


def _cmd_pcie_latency(args) -> int:
    params = gen3_x16(
        width=args.width,
        datarate_bps=int(args.lane_gbps * 1e9),
        max_payload_bytes=args.max_payload,
        tlp_overhead_bytes=args.tlp_overhead,
        dllp_size_bytes=args.dllp_bytes,
        ack_factor=args.ack_factor,
    )
    print(f"{'bytes':>10} {'latency_ns':>14}")
    for size in args.sizes:
        ns = message_latency_ns(params, size)
        print(f"{size:>10} {float(ns):>14.3f}")
    return 0


def _cmd_overhead(args) -> int:
    geom = PacketGeometry(
        intra_header_bytes=args.intra_header,
        intra_payload_bytes=args.intra_payload,
        inter_header_bytes=args.inter_header,
        inter_payload_bytes=args.inter_payload,
    )
    factor = traffic_overhead(geom)
    print(f"overhead_factor {factor:.6f}")
    bound_args = (args.adjustment, args.inter_pct, args.nodes)
    if any(a is not None for a in bound_args):
        if any(a is None for a in bound_args):
            raise ConfigError(
                "--adjustment, --inter-pct and --nodes must be given together")
        bound = throughput_bound(OverheadInputs(
            geometry=geom,
            traffic_inter_pct=args.inter_pct,
            num_nodes=args.nodes,
            model_adjustment=args.adjustment,
        ))
        print(f"throughput_bound_gbps {bound:.1f}")
    return 0


def _cmd_fit(args) -> int:
    try:
        with open(args.data, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or \
                    reader.fieldnames[:2] != ["inter_pct", "throughput_gbps"]:
                raise ConfigError(
                    f"{args.data}: expected header inter_pct,throughput_gbps")
            data = [(float(row["inter_pct"]), float(row["throughput_gbps"]))
                    for row in reader]
    except OSError as exc:
        raise ConfigError(f"cannot read {args.data}: {exc.strerror}")
    except ValueError as exc:
        raise ConfigError(f"{args.data}: {exc}")

    results, best = fit_models(data)
    for res in results:
        if res.failed:
            print(f"{res.model.value:<10} failed")
            continue
        coeffs = " ".join(f"{c:.6g}" for c in res.parameters)
        print(f"{res.model.value:<10} sse={res.sse:.6g} "
              f"r2={res.r_squared:.6f} params=[{coeffs}]")
    if best is None:
        print("best none")
        return 1
    print(f"best {best.model.value}")
    return 0


def _cmd_validate(args) -> int:
    params = PerftestParams(inter_gbps=args.inter_gbps,
                            host_overhead_ns=args.host_ns)
    if args.sizes:
        sizes = tuple(_parse_size(t) for t in args.sizes.split(","))
    else:
        sizes = None
    rows = run_table(sizes, params) if sizes else run_table(params=params)
    print(f"{'bytes':>10} {'bandwidth_GBps':>15} {'latency_us':>12}")
    for size, bw, lat in rows:
        print(f"{size:>10} {bw:>15.3f} {lat:>12.3f}")
    return 0


def _cmd_presets(_args) -> int:
    for name in preset_names():
        cfg = load_preset(name)
        print(f"{name:<24} {cfg.nodes:>4} nodes x{cfg.accelerators_per_node} "
              f"{cfg.acc_link_gbps:g} Gbps {cfg.pattern.name} "
              f"{cfg.duration_us:g} us")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "pcie-latency": _cmd_pcie_latency,
    "overhead": _cmd_overhead,
    "fit": _cmd_fit,
    "validate": _cmd_validate,
    "presets": _cmd_presets,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SweepError as exc:
        print(f"sweep error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

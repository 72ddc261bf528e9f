#!/usr/bin/env python3
"""Point-to-point bandwidth curve against the closed-form PCIe latency.

Mirrors an ib_write-style microbenchmark: small transfers are dominated
by fixed host and protocol overheads, large ones pipeline until the
100 Gbps inter link caps delivery near 12.3 GB/s of payload.
"""

import sys

from fabricsim.pcie import gen3_x16, message_latency_ns
from fabricsim.perftest import measure_bandwidth, measure_latency

SIZES = (128, 1024, 4096, 65536, 131072, 1 << 20, 4 << 20)


def main():
    pcie = gen3_x16()
    print(f"{'bytes':>9} {'pcie_ns':>11} {'latency_us':>11} {'GB/s':>7}")
    for size in SIZES:
        probe = measure_latency(size)
        bw = measure_bandwidth(size)
        print(f"{size:>9} {float(message_latency_ns(pcie, size)):>11.1f} "
              f"{probe.latency_ns / 1000:>11.3f} {bw / 1e9:>7.2f}")
    print()
    print("The PCIe column is the closed form; the simulated source-side")
    print("segment matches it exactly because chunks are charged slices of")
    print("the same cumulative curve. Past 128 KiB the bandwidth column")
    print("pins to the wire limit: 4032 payload bytes per 4096 B slot.")
    return 0


if __name__ == "__main__":
    sys.exit(main())

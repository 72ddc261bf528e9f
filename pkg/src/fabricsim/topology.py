"""Graph builders for the two network tiers and the deterministic routes.

The intra-node tier is a star: every accelerator plus the gateway NIC hangs
off one switch, so the switch radix is accelerator count + 1 and the NIC
always takes the highest-numbered port.

The inter-node tier is a two-stage folded Clos built from one switch size k:
k leaf switches each give half their ports to nodes and half to spines, so
k/2 spines see every leaf and the fabric holds k^2/2 nodes with 3k/2
switches total (k=8 gives 12, k=16 gives 24, k=32 gives 48).

Routing is destination-mod-k: traffic to node d always climbs to spine
d mod (k/2), which spreads destinations evenly over up-links and keeps every
route up-then-down (deadlock-free by construction). Same-leaf pairs skip the
spine entirely.

Switch ids are global: leaves are 0..k-1, spines are k..3k/2-1. Ports on a
leaf: 0..k/2-1 down to nodes, k/2..k-1 up to spines (up port k/2+s reaches
spine s). Ports on spine s: port L reaches leaf L. Links are full duplex; a
port index names both directions of the same cable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class TopologyError(ValueError):
    """Raised for inconsistent sizes or out-of-range endpoints."""


@dataclass(frozen=True)
class StarTopology:
    """Intra-node star: accelerators and the NIC around one switch."""

    accelerators: int

    def __post_init__(self) -> None:
        if self.accelerators < 1:
            raise TopologyError("a node needs at least one accelerator")

    @property
    def radix(self) -> int:
        return self.accelerators + 1

    @property
    def gateway_port(self) -> int:
        """The switch port wired to the NIC (always the last one)."""
        return self.accelerators

    def accelerator_port(self, acc: int) -> int:
        if not 0 <= acc < self.accelerators:
            raise TopologyError(f"accelerator index {acc} out of range")
        return acc


def radix_for_nodes(node_count: int) -> int:
    """The unique even switch size k with k^2/2 nodes, or TopologyError."""
    if node_count < 2:
        raise TopologyError("the inter-node network needs at least 2 nodes")
    k = math.isqrt(2 * node_count)
    if k * k != 2 * node_count or k % 2:
        raise TopologyError(
            f"{node_count} nodes does not fill a two-stage fabric; "
            f"valid sizes are 2*(k/2)^2*... i.e. k^2/2 for even k: 2, 8, 18, 32, 50, 72, 98, 128, ...")
    return k


@dataclass(frozen=True)
class RlftTopology:
    """Two-stage folded Clos of switch size k with static routes."""

    k: int

    def __post_init__(self) -> None:
        if self.k < 2 or self.k % 2:
            raise TopologyError(f"switch size must be even and >= 2, got {self.k}")

    ### Shape ###

    @property
    def half(self) -> int:
        return self.k // 2

    @property
    def num_leaves(self) -> int:
        return self.k

    @property
    def num_spines(self) -> int:
        return self.k // 2

    @property
    def num_switches(self) -> int:
        return self.k + self.k // 2

    @property
    def num_nodes(self) -> int:
        return self.k * self.k // 2

    def is_leaf(self, switch_id: int) -> bool:
        self._check_switch(switch_id)
        return switch_id < self.k

    def leaf_id(self, leaf_index: int) -> int:
        return leaf_index

    def spine_id(self, spine_index: int) -> int:
        return self.k + spine_index

    def switch_radix(self, switch_id: int) -> int:
        """Leaves use all k ports; spines use one port per leaf, also k."""
        self._check_switch(switch_id)
        return self.k

    ### Attachment ###

    def node_leaf(self, node: int) -> int:
        self._check_node(node)
        return node // self.half

    def node_down_port(self, node: int) -> int:
        """Port on its leaf that a node's NIC is wired to."""
        self._check_node(node)
        return node % self.half

    def leaf_port_node(self, leaf_index: int, port: int) -> int:
        """Inverse of the attachment map, for wiring."""
        if not 0 <= port < self.half:
            raise TopologyError(f"port {port} is not a down port")
        return leaf_index * self.half + port

    ### Routing ###

    def spine_for(self, dst_node: int) -> int:
        """Every route to dst climbs through this one spine (index)."""
        self._check_node(dst_node)
        return dst_node % self.half

    def forward_port(self, switch_id: int, dst_node: int) -> int:
        """Output port a switch uses for traffic to dst_node."""
        self._check_switch(switch_id)
        self._check_node(dst_node)
        if switch_id >= self.k:  # spine: straight down to the leaf
            return dst_node // self.half
        if dst_node // self.half == switch_id:  # same leaf: straight down
            return dst_node % self.half
        return self.half + dst_node % self.half  # up toward spine dst mod k/2

    def route(self, src_node: int, dst_node: int) -> tuple:
        """Hops as ((switch_id, output_port), ...); pure and loop-free."""
        self._check_node(src_node)
        self._check_node(dst_node)
        if src_node == dst_node:
            raise TopologyError("no route from a node to itself")
        src_leaf = src_node // self.half
        dst_leaf = dst_node // self.half
        down = dst_node % self.half
        if src_leaf == dst_leaf:
            return ((src_leaf, down),)
        spine = dst_node % self.half
        return (
            (src_leaf, self.half + spine),
            (self.spine_id(spine), dst_leaf),
            (dst_leaf, down),
        )

    ### Wiring ###

    def neighbor(self, switch_id: int, port: int):
        """What the far end of (switch, port) is.

        Returns ("node", node_index) for a leaf down port, otherwise
        ("switch", far_switch_id, far_port).
        """
        self._check_switch(switch_id)
        if switch_id < self.k:  # leaf
            if port < 0 or port >= self.k:
                raise TopologyError(f"port {port} out of range for leaf")
            if port < self.half:
                return ("node", switch_id * self.half + port)
            spine = port - self.half
            return ("switch", self.spine_id(spine), switch_id)
        spine_index = switch_id - self.k
        if port < 0 or port >= self.k:
            raise TopologyError(f"port {port} out of range for spine")
        return ("switch", port, self.half + spine_index)

    ### Checks ###

    def _check_switch(self, switch_id: int) -> None:
        if not 0 <= switch_id < self.num_switches:
            raise TopologyError(f"switch id {switch_id} out of range")

    def _check_node(self, node: int) -> None:
        if not 0 <= node < self.num_nodes:
            raise TopologyError(f"node index {node} out of range")


def build_rlft(node_count: int) -> RlftTopology:
    """The fabric for a node count, sized via radix_for_nodes."""
    return RlftTopology(radix_for_nodes(node_count))

"""Whole-fabric wiring and single-run execution.

One FabricSimulation owns one engine and one load point: per node an
intra-node star switch, its accelerators (sender + sink per accelerator),
and the gateway NIC; plus the shared two-stage inter-node fabric. All
queues between stages are credit-limited except the accelerator send queue,
which is bounded by the injection cap: arrivals beyond it still count as
offered load but are never materialized, so deep saturation cannot grow
memory without bound while the offered/delivered ratio stays honest.

Message milestones are stamped here (and inside the NIC) as trains pass
fixed points; the metrics collector turns them into the seven-stage latency
decomposition on delivery.
"""

from __future__ import annotations

from functools import partial

from .engine import Engine, SplitMix64, derive_seed, ns_to_ps
from .fabric import LinkParams, Sender, Switch, SwitchParams, Train
from .metrics import MetricsCollector, SweepResult
from .nic import Nic
from .topology import build_rlft
from .traffic import LoadPoint, MessageGenerator

#: Fraction of the run discarded as warm-up.
WARMUP_FRACTION = 0.1


class FabricSimulation:
    """One simulated sweep point over the full two-tier fabric."""

    def __init__(self, cfg, load_point: LoadPoint, seed: int) -> None:
        self.cfg = cfg
        self.load_point = load_point
        self.seed = seed
        self.engine = Engine()
        self.geom = cfg.geometry
        self.topo = build_rlft(cfg.nodes)
        self.horizon_ps = ns_to_ps(load_point.duration_ns)
        warmup_ps = int(self.horizon_ps * WARMUP_FRACTION)
        self.collector = MetricsCollector(
            self.geom, warmup_ps, self.horizon_ps,
            rng=SplitMix64(derive_seed(seed, 0)))
        self.materialized_messages = 0
        self.delivered_messages = 0
        self._build()

    ### Wiring ###

    def _build(self) -> None:
        cfg = self.cfg
        geom = self.geom
        topo = self.topo
        engine = self.engine
        accs = cfg.accelerators_per_node

        inter_params = SwitchParams(
            radix=topo.k,
            input_buffer_bytes=cfg.inter_buffer_bytes,
            arbitration=cfg.arbitration,
            islip_iterations=cfg.islip_iterations,
            max_wire_bytes=geom.inter_wire_bytes)
        intra_params = SwitchParams(
            radix=accs + 1,
            input_buffer_bytes=cfg.intra_buffer_bytes,
            arbitration=cfg.arbitration,
            islip_iterations=cfg.islip_iterations,
            max_wire_bytes=geom.intra_wire_bytes)

        rlft_link = LinkParams(int(cfg.rlft_link_gbps * 1e9), cfg.inter_link_m)
        nic_link = LinkParams(int(cfg.nic_link_gbps * 1e9), cfg.inter_link_m)
        acc_link = LinkParams(int(cfg.acc_link_gbps * 1e9), cfg.intra_link_m)

        self.switches = [
            Switch(engine, f"rlft{sid}", inter_params,
                   route_fn=partial(self._rlft_route, sid))
            for sid in range(topo.num_switches)
        ]
        for sid, sw in enumerate(self.switches):
            for port in range(topo.k):
                far = topo.neighbor(sid, port)
                if far[0] != "switch":
                    continue
                far_sw, far_port = far[1], far[2]
                sw.set_output(port, rlft_link,
                              self.switches[far_sw].receiver_on(far_port),
                              credit_bytes=cfg.inter_buffer_bytes)
                self.switches[far_sw].set_upstream(
                    far_port, rlft_link, sw.credit_return_on(port))

        self.stars = []
        self.nics = []
        self.acc_senders = []
        self.generators = []
        gw = accs  # the star port wired to the NIC
        for node in range(cfg.nodes):
            leaf = self.switches[topo.node_leaf(node)]
            down = topo.node_down_port(node)
            star = Switch(engine, f"star{node}", intra_params,
                          route_fn=partial(self._star_route, node, gw))
            nic = Nic(engine, node, cfg.nic, geom)

            senders = []
            for acc in range(accs):
                sender = Sender(engine, acc_link, star.receiver_on(acc),
                                credit_bytes=cfg.intra_buffer_bytes,
                                on_start=self._note_tx_start)
                star.set_upstream(acc, acc_link, sender.restore_credit)
                star.set_output(acc, acc_link,
                                partial(self._acc_sink, node, acc))
                senders.append(sender)

            # Star -> NIC -> leaf (egress direction).
            star.set_output(gw, acc_link, nic.receive_intra,
                            credit_bytes=cfg.nic.rx_intra_bytes)
            egress = Sender(engine, nic_link, leaf.receiver_on(down),
                            credit_bytes=cfg.inter_buffer_bytes)
            nic.wire_egress(star.credit_return_on(gw), egress)
            leaf.set_upstream(down, nic_link, egress.restore_credit)

            # Leaf -> NIC -> star (ingress direction).
            leaf.set_output(down, nic_link, nic.receive_inter,
                            credit_bytes=cfg.nic.rx_inter_bytes)
            to_intra = Sender(engine, acc_link, star.receiver_on(gw),
                              credit_bytes=cfg.intra_buffer_bytes)
            nic.wire_ingress(leaf.credit_return_on(down), to_intra)
            star.set_upstream(gw, acc_link, to_intra.restore_credit)

            self.stars.append(star)
            self.nics.append(nic)
            self.acc_senders.append(senders)

        load = self.load_point.load
        acc_bps = cfg.acc_link_gbps * 1e9
        for node in range(cfg.nodes):
            for acc in range(accs):
                stream = 1 + node * accs + acc
                rng = SplitMix64(derive_seed(self.seed, stream))
                self.generators.append(MessageGenerator(
                    engine, rng, cfg.pattern, load, geom, acc_bps,
                    node, acc, cfg.nodes, accs,
                    deliver=partial(self._inject, node, acc),
                    stop_ps=self.horizon_ps,
                    id_base=(node * accs + acc) << 40))

    def _rlft_route(self, switch_id: int, train: Train) -> int:
        return self.topo.forward_port(switch_id, train.dst_node)

    def _star_route(self, node: int, gw: int, train: Train) -> int:
        return train.dst_acc if train.dst_node == node else gw

    ### Endpoints ###

    def _note_tx_start(self, train: Train) -> None:
        now = self.engine.now
        for msg, _, _ in train.spans:
            if msg.t_tx_start < 0:
                msg.t_tx_start = now

    def _inject(self, node: int, acc: int, msg) -> bool:
        self.collector.on_offered(msg)
        sender = self.acc_senders[node][acc]
        if len(sender.queue) >= self.cfg.injection_cap_messages:
            return False
        geom = self.geom
        train = Train(
            spans=[(msg, 0, msg.size_bytes)],
            packets=geom.intra_packet_count(msg.size_bytes),
            wire_bytes=geom.message_wire_bytes(msg.size_bytes),
            header_bytes=geom.intra_header_bytes,
            scope=msg.scope,
            dst_node=msg.dst_node,
            dst_acc=msg.dst_acc)
        self.materialized_messages += 1
        sender.submit(train)
        return True

    def _acc_sink(self, node: int, acc: int, payload) -> None:
        train, arrive_end = payload
        for msg, _, length in train.spans:
            msg.remaining_bytes -= length
            assert msg.remaining_bytes >= 0, f"over-delivery of message {msg.id}"
            if msg.remaining_bytes == 0:
                assert (msg.dst_node, msg.dst_acc) == (node, acc), \
                    f"message {msg.id} delivered to the wrong accelerator"
                msg.t_delivered = arrive_end
                self.delivered_messages += 1
                self.collector.on_delivered(msg)

    ### Execution ###

    def run(self) -> SweepResult:
        self.engine.run_until(self.horizon_ps)
        return self.collector.result(self.load_point.load)

    def drain(self, step_ps: int = 10_000_000, max_steps: int = 1000) -> None:
        """Keep running past the horizon until all materialized traffic lands.

        Test helper for conservation checks; sweeps never call it.
        """
        for _ in range(max_steps):
            if self.delivered_messages >= self.materialized_messages:
                return
            self.engine.run_until(self.engine.now + step_ps)
        raise AssertionError(
            f"{self.materialized_messages - self.delivered_messages} messages "
            f"still in flight after draining")

    ### Introspection ###

    def in_flight_messages(self) -> int:
        return self.materialized_messages - self.delivered_messages

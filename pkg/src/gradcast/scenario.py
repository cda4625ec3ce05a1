"""Experiment execution: topology, traffic, per-node state, packet dispatch.

A replication plays three phases on one seeded event loop: the advertisement
flood that builds the cost field, an optional neighbor-count stage (needed by
the discrepancy-based policies), and the data phase where sensing events
inject messages that roll downhill to the sink under the selected policy.
"""

from __future__ import annotations

import itertools
import math
import multiprocessing
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from . import costfield, mac, phys, policies
from .config import SimConfig
from .costfield import AdvPacket, CostState, NeighborCountPacket
from .engine import Event, EventKind, Simulator
from .metrics import RunMetrics, RunRecorder, aggregate
from .policies import Battery, DataPacket, Decision, PGrabState, UGrabState


@dataclass
class Node:
    id: int
    pos: tuple[float, float]
    is_sink: bool
    battery: Battery
    cost: CostState = field(default_factory=CostState)
    pgrab: PGrabState | None = None
    ugrab: UGrabState | None = None
    neighbor_pathloss: dict = field(default_factory=dict)   # id -> learned link cost
    neighbor_counts: dict = field(default_factory=dict)     # id -> advertised count
    advertised_count: int | None = None   # own count as broadcast in the count stage
    delta: float | None = None
    delta_bounds: tuple[float, float] | None = None
    seen: set = field(default_factory=set)
    connected: bool = True

    @property
    def dead(self) -> bool:
        return self.battery.dead


@dataclass
class TrafficEvent:
    pos: tuple[float, float]
    trigger_ms: float


# ---------------------------------------------------------------------------
# generation


def generate_topology(cfg: SimConfig, rng) -> tuple[list, tuple[float, float]]:
    """Uniform sensor positions plus the sink position. With
    require_connected, resample until every sensor reaches the sink."""
    sc = cfg.scenario
    w, h = sc.area_width_m, sc.area_height_m
    sink_pos = (0.0, 0.0) if sc.sink_placement == "corner" else (w / 2.0, h / 2.0)
    for _ in range(1000):
        xs = rng.uniform(0.0, w, sc.node_count)
        ys = rng.uniform(0.0, h, sc.node_count)
        positions = [(float(x), float(y)) for x, y in zip(xs, ys)]
        if not sc.require_connected:
            return positions, sink_pos
        flags = connectivity(positions, sink_pos, cfg.phys)
        if all(flags):
            return positions, sink_pos
    raise RuntimeError("could not sample a fully connected topology")


def neighbor_lists(positions: list, params: phys.RadioParams) -> list[list[int]]:
    """Ground-truth neighbor ids per node (default power), ids ascending."""
    n = len(positions)
    out: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if phys.is_neighbor(positions[i], positions[j], params):
                out[i].append(j)
                out[j].append(i)
    return out


def connectivity(positions: list, sink_pos, params: phys.RadioParams) -> list[bool]:
    """Which sensors reach the sink through the neighbor graph."""
    pts = positions + [sink_pos]
    nbrs = neighbor_lists(pts, params)
    sink = len(pts) - 1
    seen = {sink}
    frontier = [sink]
    while frontier:
        nxt = []
        for i in frontier:
            for j in nbrs[i]:
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return [i in seen for i in range(len(positions))]


def generate_traffic(cfg: SimConfig, rng) -> list[TrafficEvent]:
    """Randomly positioned sensing events, one message each; the total is
    uniform on event_count +/- event_spread, triggers uniform over the data
    window."""
    sc = cfg.scenario
    lo = max(0, sc.event_count - sc.event_spread)
    hi = sc.event_count + sc.event_spread
    total = int(rng.integers(lo, hi + 1))
    events = []
    for _ in range(total):
        x = float(rng.uniform(0.0, sc.area_width_m))
        y = float(rng.uniform(0.0, sc.area_height_m))
        t = sc.data_start_ms + float(rng.uniform(0.0, sc.data_window_ms))
        events.append(TrafficEvent((x, y), t))
    return events


# ---------------------------------------------------------------------------
# the wired network


class Network:
    """Owns one replication: nodes, the active-transmission set, dispatch."""

    def __init__(self, cfg: SimConfig, sim: Simulator, recorder: RunRecorder,
                 decision_trace: Optional[Callable] = None):
        self.cfg = cfg
        self.radio = cfg.phys
        self.mac = cfg.mac
        self.costfield = cfg.costfield
        self.policies = cfg.policies
        self.protocol = cfg.scenario.protocol
        self.sim = sim
        self.recorder = recorder
        self.counters = recorder.counters
        self.decision_trace = decision_trace
        self.nodes: list[Node] = []
        self.sink_id = -1
        self.neighbors: list[list[int]] = []
        self.active: dict[int, phys.Transmission] = {}
        self._tx_serial = 0
        self.flood_epoch = 0.0
        self.delta_bounds: tuple[float, float] | None = None
        self.energy_log: list | None = [] if cfg.metrics.energy_audit else None
        sim.handler = self.handle

    # -- construction ------------------------------------------------------

    def build(self, positions: list, sink_pos: tuple[float, float]) -> None:
        cfg = self.cfg
        needs_delta = self.protocol in ("P-GRAB", "UP-GRAB")
        needs_ladder = self.protocol in ("U-GRAB", "UP-GRAB")
        pol = cfg.policies
        for i, pos in enumerate(positions):
            self.nodes.append(Node(i, pos, False, Battery(pol.initial_energy_j)))
        self.sink_id = len(positions)
        sink = Node(self.sink_id, sink_pos, True, Battery(pol.initial_energy_j))
        sink.cost.q = 0.0
        self.nodes.append(sink)
        for node in self.nodes:
            if needs_delta and not node.is_sink:
                node.pgrab = PGrabState(spread=pol.spread_factor)
            if needs_ladder and not node.is_sink:
                node.ugrab = UGrabState(pol.ladder_scale, pol.ladder_ratio,
                                        spread=pol.spread_factor)
        pts = [n.pos for n in self.nodes]
        self.neighbors = neighbor_lists(pts, self.radio)
        flags = connectivity(positions, sink_pos, self.radio)
        for i, ok in enumerate(flags):
            self.nodes[i].connected = ok
        self.delta_bounds = self._discrepancy_bounds()
        sink.cost.bounds = self.delta_bounds

    def _discrepancy_bounds(self) -> tuple[float, float]:
        cf = self.costfield
        if cf.bounds_mode == "fixed":
            return (cf.fixed_bounds_lo, cf.fixed_bounds_hi)
        # exact bounds over the true geometry, computed centrally and shipped
        # in the sink's advertisement
        true_counts = [len(self.neighbors[n.id]) for n in self.nodes]
        deltas = []
        for node in self.nodes:
            if node.is_sink:
                continue
            counts = [true_counts[j] for j in self.neighbors[node.id]]
            deltas.append(costfield.neighborhood_discrepancy(true_counts[node.id], counts))
        lo, hi = min(deltas, default=0.0), max(deltas, default=0.0)
        if lo >= hi:
            # degenerate geometry; fall back to a unit interval around it
            lo, hi = lo - 1.0, hi + 1.0
        return (lo, hi)

    def start(self, traffic: list[TrafficEvent]) -> None:
        """Schedule the flood, the optional neighbor-count stage, stall checks
        and all message injections."""
        sim = self.sim
        cfg = self.cfg
        sink = self.nodes[self.sink_id]
        mac.transmit(self, sink, AdvPacket(sink.id, 0.0, self.radio.tx_power_dbm,
                                           sink.cost.bounds))
        if self.protocol in ("P-GRAB", "UP-GRAB"):
            cf = self.costfield
            for node in self.nodes:
                u = float(sim.stream(node.id, "mac").uniform(0.0, cf.ncnt_window_ms))
                sim.schedule(cf.ncnt_start_ms + u, EventKind.TIMER, node.id, ("ncnt", 0))
        if self.protocol in ("U-GRAB", "UP-GRAB"):
            period = self._stall_period()
            for node in self.nodes:
                if not node.is_sink:
                    sim.schedule(cfg.scenario.data_start_ms + period,
                                 EventKind.TIMER, node.id, ("stall", 0))
        for k, ev in enumerate(traffic):
            sim.schedule(ev.trigger_ms, EventKind.INJECT, -1, (k, ev))

    def _stall_period(self) -> float:
        sc = self.cfg.scenario
        mean_interarrival = sc.data_window_ms / max(1, sc.event_count)
        return self.policies.stall_check_factor * mean_interarrival

    # -- event dispatch ------------------------------------------------------

    def handle(self, sim: Simulator, ev: Event) -> None:
        if ev.kind is EventKind.TX_END:
            self._tx_end(ev)
        elif ev.kind is EventKind.TX_START:
            self._tx_start(ev)
        elif ev.kind is EventKind.TIMER:
            self._timer(ev)
        elif ev.kind is EventKind.INJECT:
            self._inject(ev)

    def _packet_bytes(self, packet) -> int:
        if isinstance(packet, DataPacket):
            return self.radio.data_bytes
        if isinstance(packet, AdvPacket):
            return self.radio.adv_bytes
        return self.radio.ncnt_bytes

    def _spend(self, node: Node, kind: str, n_bytes: int, power: float) -> None:
        joules = policies.consume_energy(node, kind, n_bytes, power,
                                         self.policies, self.radio)
        if self.energy_log is not None:
            self.energy_log.append((node.id, joules))

    def _tx_start(self, ev: Event) -> None:
        node = self.nodes[ev.node]
        packet, power = ev.payload
        if node.dead:
            self.counters["suppressed_tx"] += 1
            return
        # packet contents freeze at the moment the transmission begins
        if isinstance(packet, AdvPacket):
            packet.q_p = node.cost.q
            packet.bounds = node.cost.bounds
            if node.is_sink:
                self.flood_epoch = self.sim.clock
            self.counters["adv"] += 1
        elif isinstance(packet, NeighborCountPacket):
            packet.count = len(node.neighbor_pathloss)
            node.advertised_count = packet.count
            self.counters["ncnt"] += 1
        else:
            packet.q_p = node.cost.q
            self.counters["forwarded"] += 1
        n_bytes = self._packet_bytes(packet)
        self._spend(node, "tx", n_bytes, power)
        now = self.sim.clock
        tr = phys.Transmission(node.id, node.pos, power, now,
                               now + self.radio.airtime_ms(n_bytes), packet)
        tr.interferers = list(self.active.values())
        for other in self.active.values():
            other.interferers.append(tr)
        self._tx_serial += 1
        self.active[self._tx_serial] = tr
        self.sim.schedule(tr.end, EventKind.TX_END, node.id, (self._tx_serial, tr))

    def _tx_end(self, ev: Event) -> None:
        serial, tr = ev.payload
        del self.active[serial]
        for rx_id in self.neighbors[tr.sender]:
            rx = self.nodes[rx_id]
            if rx.dead:
                continue
            if not phys.decode(rx.pos, tr, tr.interferers, self.radio):
                if isinstance(tr.packet, AdvPacket):
                    self.counters["adv_decode_failures"] += 1
                continue
            self._receive(rx, tr)

    def _receive(self, rx: Node, tr: phys.Transmission) -> None:
        pkt = tr.packet
        rx_power = phys.received_power_dbm(
            tr.tx_power_dbm, phys.distance(rx.pos, tr.sender_pos),
            self.radio.alpha_exp, self.radio.d_min_m)
        if isinstance(pkt, DataPacket):
            if rx.is_sink:
                self._spend(rx, "rx", self.radio.data_bytes, 0.0)
                self.recorder.on_delivery(pkt.msg_id, self.sim.clock)
                return
            sc = self.cfg.scenario
            if sc.p_f > 0.0 and sc.failure_side == "rx":
                if float(self.sim.stream(rx.id, "failure").random()) < sc.p_f:
                    self.counters["relay_failures"] += 1
                    return
            self._spend(rx, "rx", self.radio.data_bytes, 0.0)
            rx.neighbor_pathloss[tr.sender] = costfield.link_cost(tr.tx_power_dbm, rx_power)
            if rx.ugrab is not None:
                policies.note_overheard(rx, pkt.q_p, self.policies)
            if not policies.eligible(rx, pkt):
                if self.decision_trace is not None and not rx.is_sink:
                    self._trace_decision(rx, eligible=False, dec=None)
                return
            rx.seen.add(pkt.msg_id)
            self._decide_and_forward(rx, pkt, tr.tx_power_dbm, rx_power)
        elif isinstance(pkt, AdvPacket):
            self._spend(rx, "rx", self.radio.adv_bytes, 0.0)
            rx.neighbor_pathloss[pkt.sender] = costfield.link_cost(tr.tx_power_dbm, rx_power)
            costfield.handle_adv(self, rx, pkt, rx_power)
        else:
            self._spend(rx, "rx", self.radio.ncnt_bytes, 0.0)
            rx.neighbor_pathloss[pkt.sender] = costfield.link_cost(tr.tx_power_dbm, rx_power)
            costfield.handle_ncnt(self, rx, pkt)

    def _ensure_delta(self, node: Node) -> None:
        if node.delta is None:
            # the node's own count enters as the value it advertised, so both
            # sides of the discrepancy are snapshots of the same stage
            own = (node.advertised_count if node.advertised_count is not None
                   else len(node.neighbor_pathloss))
            node.delta = costfield.neighborhood_discrepancy(
                own, node.neighbor_counts.values())
            node.delta_bounds = (node.cost.bounds if node.cost.bounds is not None
                                 else (self.costfield.fixed_bounds_lo,
                                       self.costfield.fixed_bounds_hi))
            if node.pgrab is not None:
                node.pgrab.p_ia = policies.erfc_forward_probability(
                    node.delta, node.pgrab.spread, node.delta_bounds)

    def _decide_and_forward(self, node: Node, pkt: DataPacket,
                            sender_power: float, rx_power: float) -> None:
        proto = self.protocol
        pol = self.policies
        rng = self.sim.stream(node.id, "policy")
        consumed = pkt.consumed + costfield.link_cost(sender_power, rx_power)
        fwd_pkt = replace(pkt, consumed=consumed)
        if proto == "BGB":
            dec = policies.bgb_decide(node, fwd_pkt)
        elif proto == "GRAB":
            dec = policies.grab_decide(node, fwd_pkt, pol, self.radio)
        elif proto == "P-GRAB":
            self._ensure_delta(node)
            dec = policies.pgrab_decide(node, rng)
        elif proto == "U-GRAB":
            dec = policies.ugrab_decide(node, mac.sense(self, node),
                                        self.mac.congestion_limit, rng)
        else:
            self._ensure_delta(node)
            dec = policies.upgrab_decide(node, mac.sense(self, node),
                                         self.mac.congestion_limit, pol, rng)
        if self.decision_trace is not None:
            self._trace_decision(node, eligible=True, dec=dec)
        if not dec.forward:
            return
        sc = self.cfg.scenario
        if sc.p_f > 0.0 and sc.failure_side == "tx":
            if float(self.sim.stream(node.id, "failure").random()) < sc.p_f:
                self.counters["relay_failures"] += 1
                return
        fwd_pkt.q_p = node.cost.q
        fwd_pkt.tx_power_dbm = (self.radio.tx_power_dbm if dec.tx_power_dbm is None
                                else dec.tx_power_dbm)
        mac.transmit(self, node, fwd_pkt, fwd_pkt.tx_power_dbm)

    def _trace_decision(self, node: Node, eligible: bool, dec: Decision | None) -> None:
        f = "" if dec is None else ("1" if dec.forward else "0")
        row = (self.sim.clock, node.id, self.protocol, int(eligible), f,
               getattr(dec, "p_fw", None), getattr(dec, "c_n", None),
               getattr(dec, "forward_reward", None), getattr(dec, "energy_reward", None))
        self.decision_trace(row)

    def _timer(self, ev: Event) -> None:
        tag, gen = ev.payload
        node = self.nodes[ev.node]
        if tag == "adv":
            st = node.cost
            if gen != st.adv_timer_gen or st.adv_sent or node.dead:
                return
            st.adv_sent = True
            mac.transmit(self, node, AdvPacket(node.id, st.q, self.radio.tx_power_dbm,
                                               st.bounds))
        elif tag == "ncnt":
            if not node.dead:
                mac.transmit(self, node, NeighborCountPacket(
                    node.id, len(node.neighbor_pathloss)))
        elif tag == "stall":
            if not node.dead and node.ugrab is not None:
                policies.stall_check(node, self.policies)
            nxt = self.sim.clock + self._stall_period()
            if nxt <= self.cfg.scenario.max_sim_time_ms:
                self.sim.schedule(nxt, EventKind.TIMER, node.id, ("stall", 0))

    def _inject(self, ev: Event) -> None:
        k, tev = ev.payload
        src = self._nearest_alive_sensor(tev.pos)
        if src is None:
            return
        msg_id = (src.id, k)
        self.recorder.on_sent(msg_id, self.sim.clock)
        src.seen.add(msg_id)
        pol = self.policies
        if self.protocol == "GRAB":
            budget = src.cost.q * (1.0 + pol.credit_factor)
            power = (policies.reach_power(src, pol.wide_neighbor_count, pol, self.radio)
                     if src.neighbor_pathloss else self.radio.tx_power_dbm)
        else:
            budget = math.inf
            power = self.radio.tx_power_dbm
        pkt = DataPacket(msg_id, src.cost.q, power, budget=budget, consumed=0.0)
        mac.transmit(self, src, pkt, power)

    def _nearest_alive_sensor(self, pos) -> Node | None:
        best = None
        best_key = None
        for node in self.nodes:
            if node.is_sink or node.dead:
                continue
            key = (phys.distance(node.pos, pos), node.id)
            if best_key is None or key < best_key:
                best, best_key = node, key
        return best

    def finish(self) -> RunMetrics:
        return self.recorder.finalize(self.nodes, self.cfg.metrics.include_sink,
                                      self.energy_log)


# ---------------------------------------------------------------------------
# replication drivers


def build_network(cfg: SimConfig, run_index: int, *, positions=None, sink_pos=None,
                  traffic=None, event_trace=None, decision_trace=None,
                  param: str = "") -> tuple[Simulator, Network]:
    """Assemble a ready-to-run replication. Positions and traffic may be
    supplied explicitly for scripted topologies; otherwise they come from the
    run's topology and traffic streams."""
    sim = Simulator(cfg.scenario.base_seed, run_index, trace=event_trace)
    if positions is None:
        positions, generated_sink = generate_topology(cfg, sim.stream(None, "topology"))
        sink_pos = generated_sink if sink_pos is None else sink_pos
    elif sink_pos is None:
        raise ValueError("explicit positions need an explicit sink position")
    if traffic is None:
        traffic = generate_traffic(cfg, sim.stream(None, "traffic"))
    recorder = RunRecorder(run_index, cfg.scenario.protocol, cfg.scenario.p_f, param)
    net = Network(cfg, sim, recorder, decision_trace=decision_trace)
    net.build(positions, sink_pos)
    net.start(traffic)
    return sim, net


def run_replication(cfg: SimConfig, run_index: int, *, positions=None, sink_pos=None,
                    traffic=None, event_trace=None, decision_trace=None,
                    param: str = "") -> RunMetrics:
    sim, net = build_network(cfg, run_index, positions=positions, sink_pos=sink_pos,
                             traffic=traffic, event_trace=event_trace,
                             decision_trace=decision_trace, param=param)
    sim.run_until_idle(cfg.scenario.max_sim_time_ms)
    return net.finish()


def _run_task(args):
    cell_idx, cfg, run_index, param = args
    return cell_idx, run_index, run_replication(cfg, run_index, param=param)


def run_cell(cfg: SimConfig, *, jobs: int = 1, param: str = "") -> list[RunMetrics]:
    """All replications of one configuration, in run-index order."""
    tasks = [(0, cfg, i, param) for i in range(cfg.scenario.replications)]
    return [m for _, _, m in _execute(tasks, jobs)]


def _execute(tasks, jobs: int):
    if jobs > 1 and len(tasks) > 1:
        with multiprocessing.Pool(jobs) as pool:
            results = pool.map(_run_task, tasks)
    else:
        results = [_run_task(t) for t in tasks]
    return sorted(results, key=lambda r: (r[0], r[1]))


def sweep(base_cfg: SimConfig, axes: dict[str, list[str]], *, jobs: int = 1):
    """Cross product of override axes; returns (runs, cell aggregates) with
    cells ordered by axis combination."""
    from .config import apply_overrides
    for key, values in axes.items():
        if not values:
            raise ValueError(f"sweep axis {key} has no values")
    keys = list(axes)
    combos = list(itertools.product(*(axes[k] for k in keys)))
    cells_cfg = []
    for combo in combos:
        overrides = [f"{k}={v}" for k, v in zip(keys, combo)]
        cfg_i = apply_overrides(base_cfg, overrides)
        param = ",".join(f"{k.split('.')[-1]}={v}" for k, v in zip(keys, combo)
                         if k.split(".")[-1] not in ("protocol", "p_f"))
        cells_cfg.append((cfg_i, param))
    tasks = []
    for idx, (cfg_i, param) in enumerate(cells_cfg):
        for i in range(cfg_i.scenario.replications):
            tasks.append((idx, cfg_i, i, param))
    results = _execute(tasks, jobs)
    runs_by_cell: dict[int, list[RunMetrics]] = {}
    for cell_idx, _, m in results:
        runs_by_cell.setdefault(cell_idx, []).append(m)
    all_runs = []
    cells = []
    for idx in range(len(cells_cfg)):
        runs = runs_by_cell.get(idx, [])
        all_runs.extend(runs)
        if runs:
            cells.append(aggregate(runs))
    return all_runs, cells


def costfield_rows(net: Network) -> list[list[str]]:
    """Topology and cost-field dump rows: node,x,y,Q,N_i,delta."""
    rows = []
    for node in net.nodes:
        rows.append([str(node.id), format(node.pos[0], ".10g"), format(node.pos[1], ".10g"),
                     format(node.cost.q, ".10g"), str(len(node.neighbor_pathloss)),
                     "" if node.delta is None else format(node.delta, ".10g")])
    return rows

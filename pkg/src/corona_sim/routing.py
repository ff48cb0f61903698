"""Layer-adaptive 3-tier data flow for one round.

Tier 1: normal nodes send to the nearest legal head (own region or one of the
bordered regions one ring down); innermost-region nodes send straight to the
BS. Tier 2: heads in ring 3 and above fuse what they got and forward one
packet one ring down. Tier 3: ring-2 heads fuse and deliver to the BS.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

from .election import ElectionResult
from .radio import RadioParams, agg_energy, rx_energy, tx_energy
from .topology import NodeState, Role, Topology

BS = -1


@dataclass
class RoundLedger:
    round_index: int = 0
    spent: dict[int, float] = field(default_factory=dict)
    # (src, dst, bits, distance_m, tx energy actually drawn, delivered)
    hops: list[tuple[int, int, int, float, float, bool]] = field(default_factory=list)
    # (node, "tx" | "rx" | "agg", joules)
    events: list[tuple[int, str, float]] = field(default_factory=list)
    packets_delivered_to_bs: int = 0
    aggregations: list[tuple[int, int]] = field(default_factory=list)
    packets_lost: int = 0

    @property
    def total_energy(self) -> float:
        return math.fsum(self.spent.values())


def charge(node: NodeState, cost: float, ledger: RoundLedger, kind: str) -> bool:
    """Draw ``cost`` from ``node``. Returns False (and drains it) if it cannot pay."""
    e = node.residual_energy
    if cost < e:
        node.residual_energy = e - cost
        drawn, paid = cost, True
    else:
        node.residual_energy = 0.0
        node.role = Role.DEAD
        drawn, paid = e, cost == e
    ledger.spent[node.id] = ledger.spent.get(node.id, 0.0) + drawn
    ledger.events.append((node.id, kind, drawn))
    return paid


def send(src: NodeState, dst: NodeState | None, bs: tuple[float, float], k: int,
         params: RadioParams, ledger: RoundLedger) -> bool:
    """One k-bit hop from ``src`` to ``dst`` (None = BS). Returns True if delivered."""
    target = bs if dst is None else (dst.x, dst.y)
    d = math.hypot(src.x - target[0], src.y - target[1])
    before = src.residual_energy
    ok = charge(src, tx_energy(params, k, d), ledger, "tx")
    delivered = ok
    if ok and dst is not None:
        delivered = dst.alive and charge(dst, rx_energy(params, k), ledger, "rx")
    ledger.hops.append((src.id, BS if dst is None else dst.id, k, d,
                        before - src.residual_energy, delivered))
    if delivered and dst is None:
        ledger.packets_delivered_to_bs += 1
    if not delivered:
        ledger.packets_lost += 1
    return delivered


def _nearest(node: NodeState, cands: Sequence[NodeState]) -> NodeState | None:
    best, best_key = None, None
    for c in cands:
        key = (math.hypot(node.x - c.x, node.y - c.y), c.id)
        if best_key is None or key < best_key:
            best, best_key = c, key
    return best


def _escalate(node: NodeState, alpha: int, topology: Topology,
              head_of: dict[int, NodeState]) -> NodeState | None:
    # nearest head anywhere in the closest lower ring that still has one
    for lower in range(alpha - 1, 1, -1):
        cands = [head_of[r.id] for r in topology.in_corona(lower) if r.id in head_of]
        if cands:
            return _nearest(node, cands)
    return None


def _heads(election: ElectionResult, nodes: Sequence[NodeState]) -> dict[int, NodeState]:
    by_id = nodes if isinstance(nodes, dict) else {n.id: n for n in nodes}
    return {rid: by_id[nid] for rid, nid in election.heads.items()}


def tier1_assign(node: NodeState, election: ElectionResult, topology: Topology,
                 nodes: Sequence[NodeState], head_of: dict[int, NodeState] | None = None) -> int:
    """Destination of a normal node's reading: a head id or ``BS``."""
    if head_of is None:
        head_of = _heads(election, nodes)
    alpha = topology.region(node.region_id).corona
    if alpha == 1:
        return BS
    legal = [node.region_id, *topology.adjacency[node.region_id]]
    cands = [head_of[r] for r in legal if r in head_of]
    dst = _nearest(node, cands) if cands else _escalate(node, alpha, topology, head_of)
    return BS if dst is None else dst.id


def execute_round(nodes: Sequence[NodeState], election: ElectionResult, topology: Topology,
                  params: RadioParams, k: int, bs: tuple[float, float] = (0.0, 0.0)) -> RoundLedger:
    """Run tiers 1-3 for one round, mutating node energies and roles."""
    ledger = RoundLedger(round_index=election.round_index)
    by_id = {n.id: n for n in nodes}
    head_of = _heads(election, by_id)
    head_ids = set(election.heads.values())
    inbox: dict[int, int] = {h: 0 for h in head_ids}
    corona_of = {r.id: r.corona for r in topology.regions}

    for node in sorted(nodes, key=lambda n: n.id):
        if not node.alive or node.id in head_ids:
            continue
        dst_id = tier1_assign(node, election, topology, nodes, head_of)
        dst = None if dst_id == BS else by_id[dst_id]
        if send(node, dst, bs, k, params, ledger) and dst is not None:
            inbox[dst_id] += 1

    def fuse(head: NodeState) -> bool:
        signals = inbox[head.id] + 1
        ledger.aggregations.append((head.id, signals))
        return charge(head, agg_energy(params, k, signals), ledger, "agg")

    upper = sorted((h for h in head_ids if corona_of[by_id[h].region_id] >= 3),
                   key=lambda h: (-corona_of[by_id[h].region_id], h))
    for hid in upper:
        head = by_id[hid]
        if not head.alive or not fuse(head):
            continue
        alpha = corona_of[head.region_id]
        cands = [head_of[r] for r in topology.adjacency[head.region_id] if r in head_of]
        dst = _nearest(head, cands) if cands else _escalate(head, alpha, topology, head_of)
        if send(head, dst, bs, k, params, ledger) and dst is not None:
            inbox[dst.id] += 1

    for hid in sorted(h for h in head_ids if corona_of[by_id[h].region_id] == 2):
        head = by_id[hid]
        if head.alive and fuse(head):
            send(head, None, bs, k, params, ledger)
    return ledger


def write_hops_csv(path, ledgers: Sequence[RoundLedger]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "src", "dst", "bits", "distance_m", "energy_j"])
        for led in ledgers:
            for src, dst, bits, d, e, _ in led.hops:
                w.writerow([led.round_index, src, "BS" if dst == BS else dst, bits, repr(d), repr(e)])

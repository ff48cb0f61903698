"""Layer-controlled cluster-head nomination.

Coronas are processed innermost first so that each ring's criterion can see
the heads just chosen one ring below. The innermost corona never elects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .topology import NodeState, Role, Topology

SHORTLIST_FRACTION = 0.05


@dataclass(frozen=True)
class ElectionResult:
    round_index: int
    heads: dict[int, int]
    # corona -> heads visible when that corona ran its election
    observed: dict[int, dict[int, int]] = field(default_factory=dict, compare=False)


def shortlist(nodes_in_region: list[NodeState], fraction: float = SHORTLIST_FRACTION) -> list[NodeState]:
    """Alive nodes with the highest residual energy, at least one of them."""
    alive = [n for n in nodes_in_region if n.alive]
    if not alive:
        return []
    size = max(1, math.ceil(fraction * len(alive) - 1e-9))
    alive.sort(key=lambda n: (-n.residual_energy, n.id))
    return alive[:size]


def _dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def elect_round(topology: Topology, nodes: list[NodeState], round_index: int,
                by_region: dict[int, list[NodeState]] | None = None) -> ElectionResult:
    """Pick one head per region (except the innermost) and update node roles.

    ``by_region`` may be passed to skip regrouping the node list every round.
    """
    if by_region is None:
        by_region = group_by_region(nodes)
    heads: dict[int, int] = {}
    observed: dict[int, dict[int, int]] = {}
    lookup = {}
    for alpha in range(2, len(topology.coronas) + 1):
        observed[alpha] = dict(heads)
        for reg in topology.in_corona(alpha):
            cands = shortlist(by_region.get(reg.id, []))
            if not cands:
                continue
            anchors = []
            if alpha >= 3:
                for low in topology.adjacency[reg.id]:
                    if low in heads:
                        anchors.append(lookup[heads[low]].position)
            if not anchors:
                anchors = [reg.centroid]
            best = min(cands, key=lambda n: (sum(_dist(n.position, a) for a in anchors), n.id))
            heads[reg.id] = best.id
            lookup[best.id] = best
    for n in nodes:
        if n.role is not Role.DEAD:
            n.role = Role.NORMAL
    for nid in heads.values():
        lookup[nid].role = Role.CLUSTER_HEAD
    return ElectionResult(round_index, heads, observed)


def group_by_region(nodes: list[NodeState]) -> dict[int, list[NodeState]]:
    groups: dict[int, list[NodeState]] = {}
    for n in nodes:
        groups.setdefault(n.region_id, []).append(n)
    return groups

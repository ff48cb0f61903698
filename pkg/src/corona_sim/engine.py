"""Round-by-round lifetime simulation for the corona protocol and LEACH."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coverage import CoverageTracker, SensorDisk
from .election import elect_round, group_by_region
from .radio import RadioParams, agg_energy
from .routing import RoundLedger, charge, execute_round, send
from .topology import NetworkConfig, NodeState, Role, build_topology, deploy_nodes

PROTOCOLS = ("proposed", "leach")
DEFAULT_MAX_ROUNDS = 8000


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    protocol: str
    alive: int
    residual_j: float
    packets_bs: int
    coverage_rate: float


@dataclass(frozen=True)
class LifetimeSummary:
    first_node_death_round: int | None
    half_node_death_round: int | None
    all_node_death_round: int | None
    rounds_simulated: int

    @property
    def stability_period(self) -> int:
        """Rounds before the first death."""
        fnd = self.first_node_death_round
        return (fnd - 1) if fnd is not None else self.rounds_simulated

    @property
    def instability_period(self) -> int | None:
        if self.first_node_death_round is None:
            return 0
        if self.all_node_death_round is None:
            return None
        return self.all_node_death_round - self.first_node_death_round


@dataclass
class RunResult:
    protocol: str
    config: NetworkConfig
    metrics: list[RoundMetrics]
    summary: LifetimeSummary
    nodes: list[NodeState]
    death_round: dict[int, int]
    energy_spent: float
    ledgers: list[RoundLedger] = field(default_factory=list)

    def __iter__(self):
        yield self.metrics
        yield self.summary


class LeachState:
    """Per-node record of the last round served as cluster head."""

    def __init__(self, node_count: int, p: float):
        self.p = p
        self.period = round(1.0 / p)
        self.last_ch: list[int | None] = [None] * node_count

    def threshold(self, r: int) -> float:
        return self.p / (1.0 - self.p * (r % self.period))

    def eligible(self, node_id: int, r: int) -> bool:
        last = self.last_ch[node_id]
        return last is None or r - last >= self.period


def leach_round(nodes: Sequence[NodeState], config: NetworkConfig, rng: np.random.Generator,
                round_index: int, state: LeachState, params: RadioParams | None = None) -> RoundLedger:
    """One LEACH round: self-election, join nearest head, heads fuse and send to the BS.

    ``round_index`` is zero-based; one uniform draw is taken per node every
    round (dead or alive) so trajectories depend only on the seed.
    """
    params = params or config.radio
    k = config.packet_bits
    bs = config.bs_position
    ledger = RoundLedger(round_index=round_index)
    draws = rng.random(len(nodes))
    t = state.threshold(round_index)
    heads = []
    for n in nodes:
        if not n.alive:
            continue
        if state.eligible(n.id, round_index) and draws[n.id] < t:
            n.role = Role.CLUSTER_HEAD
            state.last_ch[n.id] = round_index
            heads.append(n)
        else:
            n.role = Role.NORMAL

    members = [n for n in nodes if n.alive and n.role is Role.NORMAL]
    inbox = {h.id: 0 for h in heads}
    if heads:
        hx = np.array([h.x for h in heads])
        hy = np.array([h.y for h in heads])
        mx = np.array([m.x for m in members])
        my = np.array([m.y for m in members])
        d = np.hypot(mx[:, None] - hx[None, :], my[:, None] - hy[None, :]) if members else None
        # argmin takes the lowest index on ties; heads are in id order
        choice = d.argmin(axis=1) if members else []
        for m, j in zip(members, choice):
            h = heads[j]
            if send(m, h, bs, k, params, ledger):
                inbox[h.id] += 1
        for h in heads:
            if not h.alive:
                continue
            signals = inbox[h.id] + 1
            ledger.aggregations.append((h.id, signals))
            if charge(h, agg_energy(params, k, signals), ledger, "agg"):
                send(h, None, bs, k, params, ledger)
    else:
        for m in members:
            send(m, None, bs, k, params, ledger)
    return ledger


def _check_run_args(config: NetworkConfig, protocol: str, max_rounds: int) -> None:
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    if config.node_count < 1:
        raise ValueError("zero-node configuration")


def run(config: NetworkConfig, protocol: str = "proposed", max_rounds: int = DEFAULT_MAX_ROUNDS,
        *, keep_ledgers: bool = False, coverage: bool = True,
        on_round: Callable[[int, RoundLedger], None] | None = None) -> RunResult:
    """Simulate until every node is dead or ``max_rounds`` rounds have run.

    Deployment uses ``config.rng_seed`` directly, so both protocols see the
    same node positions for a given seed; LEACH draws from an independent
    child stream of the same seed.
    """
    _check_run_args(config, protocol, max_rounds)
    params = config.radio
    topology = build_topology(config)
    nodes = deploy_nodes(config, topology, np.random.default_rng(config.rng_seed))
    by_region = group_by_region(nodes)
    tracker = None
    if coverage:
        disks = [SensorDisk(n.x, n.y, config.sensing_radius) for n in nodes]
        tracker = CoverageTracker(disks, config.radius, config.grid_res)
    leach_rng = np.random.default_rng(np.random.SeedSequence([config.rng_seed, 1]))
    leach_state = LeachState(len(nodes), config.leach_p)

    metrics: list[RoundMetrics] = []
    ledgers: list[RoundLedger] = []
    death_round: dict[int, int] = {}
    round_totals: list[float] = []
    alive_ids = [n.id for n in nodes]

    for r in range(1, max_rounds + 1):
        if protocol == "proposed":
            election = elect_round(topology, nodes, r, by_region)
            ledger = execute_round(nodes, election, topology, params, config.packet_bits,
                                   config.bs_position)
        else:
            ledger = leach_round(nodes, config, leach_rng, r - 1, leach_state, params)
        ledger.round_index = r
        round_totals.append(ledger.total_energy)
        still = []
        for nid in alive_ids:
            if nodes[nid].alive:
                still.append(nid)
            else:
                death_round[nid] = r
                if tracker is not None:
                    tracker.remove(nid)
        alive_ids = still
        metrics.append(RoundMetrics(
            r, protocol, len(alive_ids), math.fsum(n.residual_energy for n in nodes),
            ledger.packets_delivered_to_bs, tracker.rate if tracker is not None else math.nan,
        ))
        if keep_ledgers:
            ledgers.append(ledger)
        if on_round is not None:
            on_round(r, ledger)
        if not alive_ids:
            break

    return RunResult(protocol, config, metrics, summarize(metrics, len(nodes)), nodes,
                     death_round, math.fsum(round_totals), ledgers)


def summarize(metrics: Sequence[RoundMetrics], node_count: int) -> LifetimeSummary:
    fnd = half = adt = None
    for m in metrics:
        if fnd is None and m.alive < node_count:
            fnd = m.round
        if half is None and m.alive <= node_count / 2:
            half = m.round
        if adt is None and m.alive == 0:
            adt = m.round
    return LifetimeSummary(fnd, half, adt, len(metrics))


METRICS_HEADER = ["round", "protocol", "alive", "residual_j", "packets_bs", "coverage_rate"]


def write_metrics_csv(path, metrics: Sequence[RoundMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for m in metrics:
            w.writerow([m.round, m.protocol, m.alive, repr(m.residual_j), m.packets_bs,
                        repr(m.coverage_rate)])


def summary_dict(summary: LifetimeSummary) -> dict:
    d = asdict(summary)
    d["stability_period"] = summary.stability_period
    d["instability_period"] = summary.instability_period
    return d


def write_summary_json(path, summary: LifetimeSummary) -> None:
    with open(path, "w") as fh:
        json.dump(summary_dict(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


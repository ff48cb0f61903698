"""Circular field geometry: coronas, angular sensing regions and deployment."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .radio import E_AGG, E_ELEC, EPS_FS, EPS_MP, RadioParams

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class NetworkConfig:
    diameter: float = 300.0
    node_count: int = 100
    corona_count: int | None = None
    sectors_per_corona: int = 4
    initial_energy: float = 0.5
    packet_bits: int = 4000
    sensing_radius: float = 15.0
    bs_x: float = 0.0
    bs_y: float = 0.0
    rng_seed: int = 0
    deployment_fraction_inner: float = 0.20
    e_elec: float = E_ELEC
    eps_fs: float = EPS_FS
    eps_mp: float = EPS_MP
    e_agg: float = E_AGG
    d_o: float | None = None
    leach_p: float = 0.05
    grid_res: float = 0.5

    def __post_init__(self) -> None:
        if not self.diameter > 0:
            raise ValueError("diameter must be positive")
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if self.corona_count is not None and self.corona_count < 1:
            raise ValueError("corona_count must be >= 1")
        if self.node_count < self.coronas:
            raise ValueError("node_count must be at least the corona count")
        if self.sectors_per_corona < 1:
            raise ValueError("sectors_per_corona must be >= 1")
        if not 0 < self.deployment_fraction_inner < 1:
            raise ValueError("deployment_fraction_inner must lie in (0, 1)")
        if not (self.initial_energy > 0 and self.packet_bits > 0 and self.sensing_radius > 0):
            raise ValueError("initial_energy, packet_bits and sensing_radius must be positive")
        if not 0 < self.leach_p <= 1:
            raise ValueError("leach_p must lie in (0, 1]")
        if not self.grid_res > 0:
            raise ValueError("grid_res must be positive")

    @property
    def coronas(self) -> int:
        if self.corona_count is not None:
            return self.corona_count
        return corona_count(self.diameter, self.node_count)

    @property
    def radius(self) -> float:
        return self.diameter / 2.0

    @property
    def bs_position(self) -> tuple[float, float]:
        return (self.bs_x, self.bs_y)

    @property
    def radio(self) -> RadioParams:
        return RadioParams(self.e_elec, self.eps_fs, self.eps_mp, self.e_agg, self.d_o)

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)


def _parse_value(raw: str, annotation: str):
    if raw.lower() in ("none", ""):
        if "None" in annotation:
            return None
        raise ValueError(f"value required, got {raw!r}")
    if annotation.startswith("int"):
        return int(raw)
    return float(raw)


def load_config(path: str | Path) -> NetworkConfig:
    """Read a flat ``key=value`` config file (``#`` starts a comment)."""
    types = {f.name: str(f.type) for f in dataclasses.fields(NetworkConfig)}
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(raw, types[key])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return NetworkConfig(**values)


def dump_config(config: NetworkConfig) -> str:
    return "".join(f"{f.name}={getattr(config, f.name)}\n" for f in dataclasses.fields(config))


def corona_count(diameter: float, node_count: int) -> int:
    """Number of coronas, ``round(D / L)`` clamped to at least one."""
    if not (diameter > 0 and node_count > 0):
        raise ValueError("diameter and node_count must be positive")
    return max(1, math.floor(diameter / node_count + 0.5))


@dataclass(frozen=True)
class Region:
    id: int
    corona: int
    angle_start: float
    angle_end: float
    r_inner: float
    r_outer: float
    centroid: tuple[float, float]

    @property
    def span(self) -> float:
        return self.angle_end - self.angle_start

    @property
    def area(self) -> float:
        return 0.5 * self.span * (self.r_outer**2 - self.r_inner**2)

    def contains(self, x: float, y: float) -> bool:
        r2 = x * x + y * y
        if self.corona == 1:
            return r2 <= self.r_outer**2
        if not (self.r_inner**2 < r2 <= self.r_outer**2):
            return False
        return (math.atan2(y, x) - self.angle_start) % TWO_PI < self.span


@dataclass(frozen=True)
class Topology:
    radius: float
    coronas: tuple[tuple[float, float], ...]
    regions: tuple[Region, ...]
    adjacency: dict[int, tuple[int, ...]]
    reverse_adjacency: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def region(self, region_id: int) -> Region:
        return self.regions[region_id - 1]

    def in_corona(self, alpha: int) -> list[Region]:
        return [r for r in self.regions if r.corona == alpha]

    def region_of(self, x: float, y: float) -> int | None:
        """Region id containing ``(x, y)``, or None outside the field."""
        r = math.hypot(x, y)
        if r > self.radius:
            return None
        width = self.radius / len(self.coronas)
        alpha = min(len(self.coronas), max(1, math.ceil(r / width)))
        # boundary points may round into the neighbouring ring
        for a in (alpha, alpha - 1, alpha + 1):
            for reg in self.in_corona(a):
                if reg.contains(x, y):
                    return reg.id
        return None

    @property
    def total_area(self) -> float:
        return sum(r.area for r in self.regions)


def _sector_centroid(r1: float, r2: float, start: float, span: float) -> tuple[float, float]:
    if span >= TWO_PI - 1e-12 and r1 == 0:
        return (0.0, 0.0)
    radial = (2.0 / 3.0) * (r2**3 - r1**3) / (r2**2 - r1**2)
    half = span / 2.0
    rc = radial * math.sin(half) / half
    mid = start + half
    return (rc * math.cos(mid), rc * math.sin(mid))


def build_topology(config: NetworkConfig) -> Topology:
    """Equal-width coronas; every corona past the first is cut into equal
    sectors, each ring rotated by half a sector against the ring below so an
    upper sector borders exactly two lower ones."""
    eta = config.coronas
    R = config.radius
    width = R / eta
    sectors = config.sectors_per_corona
    step = TWO_PI / sectors
    coronas = tuple((a * width, R if a == eta - 1 else (a + 1) * width) for a in range(eta))

    regions: list[Region] = [Region(1, 1, 0.0, TWO_PI, 0.0, coronas[0][1], (0.0, 0.0))]
    for alpha in range(2, eta + 1):
        r1, r2 = coronas[alpha - 1]
        offset = -(alpha - 2) * step / 2.0
        for j in range(sectors):
            start = (offset + j * step) % TWO_PI
            regions.append(
                Region(len(regions) + 1, alpha, start, start + step, r1, r2,
                       _sector_centroid(r1, r2, start, step))
            )

    adjacency: dict[int, tuple[int, ...]] = {}
    for reg in regions:
        if reg.corona == 2:
            adjacency[reg.id] = (1,)
        elif reg.corona >= 3:
            adjacency[reg.id] = tuple(
                low.id for low in regions if low.corona == reg.corona - 1 and _overlaps(reg, low)
            )
    reverse: dict[int, list[int]] = {reg.id: [] for reg in regions}
    for up, lows in adjacency.items():
        for low in lows:
            reverse[low].append(up)
    return Topology(R, coronas, tuple(regions), adjacency,
                    {k: tuple(v) for k, v in reverse.items()})


def _overlaps(a: Region, b: Region) -> bool:
    # positive-length angular overlap on the circle
    shift = (b.angle_start - a.angle_start) % TWO_PI
    if shift < a.span - 1e-12:
        return True
    return (a.angle_start - b.angle_start) % TWO_PI < b.span - 1e-12


class Role(str, Enum):
    NORMAL = "normal"
    CLUSTER_HEAD = "cluster_head"
    DEAD = "dead"


@dataclass(slots=True)
class NodeState:
    id: int
    x: float
    y: float
    residual_energy: float
    region_id: int
    role: Role = Role.NORMAL

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def alive(self) -> bool:
        return self.role is not Role.DEAD


def apportion(config: NetworkConfig, topology: Topology) -> list[int]:
    """Per-region node counts by largest remainder (ties go to the lower region id)."""
    L = config.node_count
    n = len(topology.regions)
    if n == 1:
        return [L]
    inner = config.deployment_fraction_inner
    quotas = [inner * L] + [(1.0 - inner) * L / (n - 1)] * (n - 1)
    counts = [math.floor(q) for q in quotas]
    order = sorted(range(n), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: L - sum(counts)]:
        counts[i] += 1
    return counts


def sample_in_region(region: Region, rng: np.random.Generator) -> tuple[float, float]:
    """Uniform point in ``region``: inverse-CDF in polar coordinates, redrawn
    in the rare case rounding lands it on the wrong side of a boundary."""
    while True:
        u, v = rng.random(2)
        r = math.sqrt(region.r_inner**2 + u * (region.r_outer**2 - region.r_inner**2))
        theta = region.angle_start + v * region.span
        x, y = r * math.cos(theta), r * math.sin(theta)
        if region.contains(x, y):
            return x, y


def deploy_nodes(config: NetworkConfig, topology: Topology,
                 rng: np.random.Generator | None = None) -> list[NodeState]:
    """Scatter nodes uniformly inside their regions; node ids run region by region."""
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    counts = apportion(config, topology)
    if any(c == 0 for c in counts):
        log.warning("some regions received no nodes (L=%d < %d regions)",
                    config.node_count, len(topology.regions))
    nodes: list[NodeState] = []
    for reg, count in zip(topology.regions, counts):
        for _ in range(count):
            x, y = sample_in_region(reg, rng)
            nodes.append(NodeState(len(nodes), x, y, config.initial_energy, reg.id))
    return nodes

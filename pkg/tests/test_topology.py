import itertools
import math

import numpy as np
import pytest
from scipy import stats

from corona_sim.topology import (
    NetworkConfig,
    apportion,
    build_topology,
    corona_count,
    deploy_nodes,
    dump_config,
    load_config,
    sample_in_region,
)


@pytest.mark.parametrize("D, L, expected", [(300, 100, 3), (300, 300, 1), (300, 10000, 1)])
def test_corona_count(D, L, expected):
    assert corona_count(D, L) == expected


def test_corona_override():
    assert NetworkConfig(node_count=1000, corona_count=4).coronas == 4


@pytest.fixture(scope="module")
def default_topo():
    return build_topology(NetworkConfig())


def test_default_layout(default_topo):
    t = default_topo
    assert [c for c in t.coronas] == [(0.0, 50.0), (50.0, 100.0), (100.0, 150.0)]
    assert len(t.regions) == 9
    assert [r.corona for r in t.regions] == [1, 2, 2, 2, 2, 3, 3, 3, 3]
    assert t.region(1).span == pytest.approx(2 * math.pi)


def test_region_areas(default_topo):
    assert default_topo.region(2).area == pytest.approx(5890.486, abs=1e-3)
    assert default_topo.total_area == pytest.approx(70685.83, abs=1e-2)


def test_areas_against_grid_count(default_topo):
    # independent check: count lattice points falling in each region
    res = 1.0
    ax = np.arange(-150 + res / 2, 150, res)
    counts = dict.fromkeys(range(1, 10), 0)
    for x in ax:
        for y in ax:
            rid = default_topo.region_of(x, y)
            if rid is not None:
                counts[rid] += 1
    for reg in default_topo.regions:
        assert counts[reg.id] * res**2 == pytest.approx(reg.area, rel=0.01)


def test_upper_region_borders_two_lower(default_topo):
    t = default_topo
    for reg in t.in_corona(3):
        assert len(t.adjacency[reg.id]) == 2
        assert all(t.region(low).corona == 2 for low in t.adjacency[reg.id])
    # ring 3 is rotated so that R7 sits over R2 and R3
    assert set(t.adjacency[7]) == {2, 3}


def test_adjacency_symmetry(default_topo):
    t = default_topo
    for up, lows in t.adjacency.items():
        for low in lows:
            assert up in t.reverse_adjacency[low]


def test_angular_spans_partition_each_corona(default_topo):
    for alpha in (2, 3):
        regs = default_topo.in_corona(alpha)
        assert sum(r.span for r in regs) == pytest.approx(2 * math.pi)
        # every probe angle falls in exactly one sector
        for theta in np.linspace(0, 2 * math.pi, 721)[:-1]:
            r = (regs[0].r_inner + regs[0].r_outer) / 2
            hits = [g.id for g in regs if g.contains(r * math.cos(theta), r * math.sin(theta))]
            assert len(hits) == 1


def test_single_corona_topology():
    t = build_topology(NetworkConfig(node_count=1000))
    assert len(t.regions) == 1
    assert t.adjacency == {}


@pytest.mark.parametrize("seed", range(100))
def test_partition_identity_random_configs(seed):
    rng = np.random.default_rng(seed)
    eta = int(rng.integers(1, 7))
    cfg = NetworkConfig(
        diameter=float(rng.uniform(10, 2000)),
        node_count=int(rng.integers(eta, 500)),
        corona_count=eta,
        sectors_per_corona=int(rng.integers(1, 9)),
    )
    t = build_topology(cfg)
    assert abs(t.total_area - math.pi * cfg.radius**2) <= 1e-9 * math.pi * cfg.radius**2
    edges = [c for pair in t.coronas for c in pair]
    assert edges[0] == 0 and edges[-1] == cfg.radius
    for (a0, a1), (b0, b1) in zip(t.coronas, t.coronas[1:]):
        assert a1 == b0


def test_default_deployment_counts(default_topo):
    assert apportion(NetworkConfig(), default_topo) == [20] + [10] * 8


def _hamilton_oracle(quotas, total):
    """Brute-force largest-remainder: try every floor/ceil pattern."""
    floors = [math.floor(q) for q in quotas]
    best = None
    for bits in itertools.product((0, 1), repeat=len(quotas)):
        counts = [f + b for f, b in zip(floors, bits)]
        if sum(counts) != total:
            continue
        dev = sum(abs(c - q) for c, q in zip(counts, quotas))
        if best is None or dev < best[0] - 1e-12:
            best = (dev, counts)
    return best[1]


@pytest.mark.parametrize("L", [9, 10, 17, 23, 55, 100, 101, 250])
def test_apportion_matches_bruteforce(L, default_topo):
    cfg = NetworkConfig(node_count=L, corona_count=3)
    got = apportion(cfg, default_topo)
    quotas = [0.2 * L] + [0.8 * L / 8] * 8
    want = _hamilton_oracle(quotas, L)
    assert sum(got) == L
    assert sum(abs(g - q) for g, q in zip(got, quotas)) == pytest.approx(
        sum(abs(w - q) for w, q in zip(want, quotas)))


def test_nine_nodes_cover_every_region(default_topo):
    counts = apportion(NetworkConfig(node_count=9, corona_count=3), default_topo)
    assert all(c >= 1 for c in counts)


def test_deployed_nodes_inside_their_regions(default_topo):
    cfg = NetworkConfig(rng_seed=3)
    nodes = deploy_nodes(cfg, default_topo)
    assert len(nodes) == 100
    for n in nodes:
        assert default_topo.region(n.region_id).contains(n.x, n.y)
        assert default_topo.region_of(n.x, n.y) == n.region_id
        assert n.residual_energy == cfg.initial_energy and n.alive


def test_deployment_deterministic(default_topo):
    a = deploy_nodes(NetworkConfig(rng_seed=11), default_topo)
    b = deploy_nodes(NetworkConfig(rng_seed=11), default_topo)
    assert [(n.x, n.y) for n in a] == [(n.x, n.y) for n in b]
    c = deploy_nodes(NetworkConfig(rng_seed=12), default_topo)
    assert [(n.x, n.y) for n in a] != [(n.x, n.y) for n in c]


@pytest.mark.parametrize("region_id", [1, 2, 7])
def test_sampling_uniformity(default_topo, region_id):
    reg = default_topo.region(region_id)
    rng = np.random.default_rng(2024)
    pts = np.array([sample_in_region(reg, rng) for _ in range(10_000)])
    r2 = (pts**2).sum(axis=1)
    theta = (np.arctan2(pts[:, 1], pts[:, 0]) - reg.angle_start) % (2 * math.pi)
    # 4 x 5 equal-area cells in (r^2, angle)
    ri = np.minimum(((r2 - reg.r_inner**2) / (reg.r_outer**2 - reg.r_inner**2) * 4).astype(int), 3)
    ti = np.minimum((theta / reg.span * 5).astype(int), 4)
    observed = np.bincount(ri * 5 + ti, minlength=20)
    assert stats.chisquare(observed).pvalue > 0.01


def test_config_file_roundtrip(tmp_path):
    cfg = NetworkConfig(node_count=50, rng_seed=7, corona_count=2, d_o=80.0)
    path = tmp_path / "net.cfg"
    path.write_text("# comment line\n" + dump_config(cfg))
    assert load_config(path) == cfg


def test_config_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("node_count = 10\nwarp_drive = 1\n")
    with pytest.raises(ValueError, match="unknown key"):
        load_config(path)


@pytest.mark.parametrize("kwargs", [dict(diameter=0), dict(node_count=0),
                                    dict(deployment_fraction_inner=1.0), dict(initial_energy=-1),
                                    dict(node_count=2, corona_count=3)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        NetworkConfig(**kwargs)

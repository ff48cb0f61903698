import math

import numpy as np
import pytest

from corona_sim.engine import LeachState, leach_round, run, summarize, write_metrics_csv, write_summary_json
from corona_sim.topology import NetworkConfig, Role, build_topology, deploy_nodes

CFG = NetworkConfig()


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        run(CFG, "teen")
    with pytest.raises(ValueError):
        run(CFG, max_rounds=0)


@pytest.mark.parametrize("protocol", ["proposed", "leach"])
def test_single_round(protocol):
    res = run(CFG, protocol, max_rounds=1)
    assert len(res.metrics) == 1 and res.metrics[0].round == 1
    assert res.metrics[0].alive == 100
    assert res.summary.first_node_death_round is None
    assert res.summary.stability_period == 1
    if protocol == "proposed":
        assert res.metrics[0].packets_bs == 24


@pytest.mark.parametrize("protocol", ["proposed", "leach"])
def test_deterministic(protocol):
    a = run(CFG.replace(rng_seed=4), protocol, 300)
    b = run(CFG.replace(rng_seed=4), protocol, 300)
    assert a.metrics == b.metrics


@pytest.mark.parametrize("protocol", ["proposed", "leach"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_whole_run_conservation(protocol, seed):
    cfg = CFG.replace(rng_seed=seed, initial_energy=0.05)
    res = run(cfg, protocol, coverage=False)
    assert res.metrics[-1].alive == 0
    initial = cfg.initial_energy * cfg.node_count
    final = math.fsum(n.residual_energy for n in res.nodes)
    assert final == 0.0
    assert abs(res.energy_spent - (initial - final)) <= 1e-12 * initial


def test_summary_recomputed_from_trace():
    res = run(CFG.replace(initial_energy=0.05), "proposed", coverage=False)
    deaths = sorted(res.death_round.values())
    assert len(deaths) == 100
    assert res.summary.first_node_death_round == deaths[0]
    assert res.summary.half_node_death_round == deaths[49]
    assert res.summary.all_node_death_round == deaths[-1]
    alive = [m.alive for m in res.metrics]
    assert alive == sorted(alive, reverse=True)
    assert res.summary.instability_period == deaths[-1] - deaths[0]


def test_summary_when_nobody_dies():
    res = run(CFG, "proposed", max_rounds=5, coverage=False)
    s = res.summary
    assert (s.first_node_death_round, s.all_node_death_round, s.rounds_simulated) == (None, None, 5)
    assert s.instability_period == 0


def test_closed_form_direct_to_bs():
    # one ring, no amplifier energy: every node pays k*E_elec per round
    cfg = CFG.replace(corona_count=1, eps_fs=0.0, eps_mp=0.0)
    res = run(cfg, "proposed", coverage=False)
    per_round = cfg.packet_bits * cfg.e_elec
    expected = cfg.initial_energy / per_round
    assert expected == pytest.approx(2500)
    assert abs(res.summary.first_node_death_round - expected) <= 1
    assert abs(res.summary.all_node_death_round - expected) <= 1
    assert res.metrics[0].packets_bs == 100


def test_closed_form_leach_all_heads():
    # p = 1: everyone heads every round, fuses its own reading and sends
    cfg = CFG.replace(leach_p=1.0, eps_fs=0.0, eps_mp=0.0)
    res = run(cfg, "leach", coverage=False)
    expected = cfg.initial_energy / (cfg.packet_bits * (cfg.e_elec + cfg.e_agg))
    assert expected == pytest.approx(2272.7, abs=0.1)
    assert res.summary.first_node_death_round == math.ceil(expected)
    assert res.summary.all_node_death_round == math.ceil(expected)


def test_leach_threshold_and_eligibility():
    s = LeachState(10, 0.05)
    assert s.period == 20
    assert s.threshold(0) == pytest.approx(0.05)
    assert s.threshold(19) == pytest.approx(1.0)
    s.last_ch[3] = 4
    assert not s.eligible(3, 23)
    assert s.eligible(3, 24)


def test_leach_ch_fraction_and_window():
    cfg = CFG.replace(node_count=1000, corona_count=3, initial_energy=1e6)
    topo = build_topology(cfg)
    nodes = deploy_nodes(cfg, topo)
    state = LeachState(len(nodes), cfg.leach_p)
    rng = np.random.default_rng(77)
    served = np.zeros(len(nodes), dtype=int)
    fractions = []
    for r in range(200):
        leach_round(nodes, cfg, rng, r, state)
        heads = [n.id for n in nodes if n.role is Role.CLUSTER_HEAD]
        fractions.append(len(heads) / len(nodes))
        for h in heads:
            served[h] += 1
        # nobody heads twice within one epoch
        if r % 20 == 19:
            assert served.max() <= (r + 1) // 20
    assert np.mean(fractions) == pytest.approx(0.05, abs=0.005)
    # within each 20-round epoch every node heads exactly once
    assert np.all(served == 10)


def test_leach_without_heads_sends_direct():
    cfg = CFG.replace(node_count=10, corona_count=1)
    nodes = deploy_nodes(cfg, build_topology(cfg))
    state = LeachState(10, 0.05)
    for n in nodes:
        state.last_ch[n.id] = 0   # nobody eligible
    led = leach_round(nodes, cfg, np.random.default_rng(0), 1, state)
    assert led.packets_delivered_to_bs == 10 and not led.aggregations


def test_coverage_tracks_deaths():
    res = run(CFG.replace(initial_energy=0.02), "leach")
    rates = [m.coverage_rate for m in res.metrics]
    assert rates[0] > 0.5
    assert all(b <= a for a, b in zip(rates, rates[1:]))
    assert rates[-1] == 0.0


def test_writers(tmp_path):
    res = run(CFG, "proposed", max_rounds=3)
    write_metrics_csv(tmp_path / "m.csv", res.metrics)
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "round,protocol,alive,residual_j,packets_bs,coverage_rate"
    assert len(lines) == 4 and lines[1].startswith("1,proposed,100,")
    write_summary_json(tmp_path / "s.json", res.summary)
    assert '"rounds_simulated": 3' in (tmp_path / "s.json").read_text()


def test_summarize_empty():
    assert summarize([], 10).rounds_simulated == 0

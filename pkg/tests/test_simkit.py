import numpy as np
import pytest
from scipy import stats

from cogroute import router, simkit
from cogroute.grid import build_grid
from cogroute.router import RelayModel


def test_uniforms_deterministic_and_in_range():
    a = simkit.uniforms(7, np.arange(1000), 3, 2)
    b = simkit.uniforms(7, np.arange(1000), 3, 2)
    assert np.array_equal(a, b)
    assert a.min() >= 0 and a.max() < 1
    assert not np.array_equal(a, simkit.uniforms(8, np.arange(1000), 3, 2))
    assert not np.array_equal(a, simkit.uniforms(7, np.arange(1000), 3, 1))


def test_uniforms_order_independent():
    ids = np.arange(500)
    rev = simkit.uniforms(1, ids[::-1], 0, 0)[::-1]
    assert np.array_equal(simkit.uniforms(1, ids, 0, 0), rev)
    assert simkit.uniforms(1, 123, 0, 0) == simkit.uniforms(1, ids, 0, 0)[123]


def test_uniforms_pass_ks():
    u = simkit.uniforms(2024, np.arange(100_000), 5, 9)
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_trivial_simulation_exact():
    mc = simkit.run_monte_carlo(build_grid(1, 1.0), RelayModel(1.0), 1000, seed=3)
    assert (mc.mean_hops, mc.p_D, mc.p_nr) == (1.0, 1.0, 0.0)


def test_single_episode_replay_matches_batch(grid2):
    model = RelayModel(0.6, 0.9, 0.95)
    n = 300
    eps = [simkit.simulate_episode(grid2, model, 11, k) for k in range(n)]
    batch = simkit.run_monte_carlo(grid2, model, n, seed=11)
    assert sum(e.hops for e in eps) / n == pytest.approx(batch.mean_hops, abs=1e-12)
    assert sum(e.reached for e in eps) / n == pytest.approx(batch.p_D, abs=1e-12)
    hops = np.bincount([e.hops for e in eps], minlength=len(batch.hop_counts))
    assert np.array_equal(hops, batch.hop_counts)


def test_episode_trace_walks_neighbours(grid4):
    model = RelayModel(0.8, 0.95, 0.95)
    for k in range(50):
        ep = simkit.simulate_episode(grid4, model, 5, k)
        for a, b in zip(ep.trace, ep.trace[1:]):
            assert b in grid4.neighbors[a]
        assert ep.outcome == ("D" if ep.trace[-1] == 0 else "nr")
        assert ep.hops == len(ep.draws)


def test_reverse_order_replay(grid2):
    model = RelayModel(0.5, 0.9, 0.9)
    fwd = [simkit.simulate_episode(grid2, model, 4, k).trace for k in range(30)]
    back = [simkit.simulate_episode(grid2, model, 4, k).trace for k in reversed(range(30))]
    assert fwd == back[::-1]


@pytest.mark.parametrize("H, p, pa, xi, mode", [
    (2, 0.5, 0.9, 0.95, router.SAPR),
    (3, 0.7, 1.0, 0.9, router.SAPR),
    (2, 0.8, 0.95, 0.95, router.SECPR),
])
def test_simulation_agrees_with_chain(H, p, pa, xi, mode):
    g = build_grid(H, 1.0)
    model = RelayModel(p, pa, xi, mode, reputation=0.85)
    _, tau, pD, _ = router.solve(g, model)
    mc = simkit.run_monte_carlo(g, model, 100_000, seed=99)
    assert abs(mc.mean_hops - tau) <= 3 * mc.hops_se
    assert abs(mc.p_D - pD) <= 3 * mc.p_D_se


def test_position_frequencies(grid2):
    model = RelayModel(0.5, 0.9, 0.95)
    mc = simkit.run_monte_carlo(grid2, model, 100_000, seed=21)
    for deg in (3, 4, 6):
        tries = mc.position_counts[deg].sum()
        assert tries > 0
        for m in range(1, deg + 1):
            p = router.relay_prob(model, m)
            se = np.sqrt(p * (1 - p) / tries)
            assert abs(mc.position_counts[deg, m] / tries - p) <= 4 * se


def test_hop_count_follows_phase_type(grid2):
    model = RelayModel(0.6, 0.9, 0.95)
    chain = router.build_chain(grid2, model)
    mc = simkit.run_monte_carlo(grid2, model, 100_000, seed=2024)
    pmf = router.hop_distribution(chain, 60)
    expected = pmf * mc.episodes
    observed = np.zeros(60)
    counts = mc.hop_counts[1:61]
    observed[:len(counts)] = counts
    # pool the tail so every expected cell holds at least 5
    k = int(np.nonzero(expected >= 5)[0].max())
    exp_cells = np.append(expected[:k], mc.episodes - expected[:k].sum())
    obs_cells = np.append(observed[:k], mc.episodes - observed[:k].sum())
    assert stats.chisquare(obs_cells, exp_cells).pvalue > 0.01


def test_monte_carlo_is_deterministic(grid2):
    model = RelayModel(0.5, 0.9, 0.9)
    a = simkit.run_monte_carlo(grid2, model, 5000, seed=8)
    b = simkit.run_monte_carlo(grid2, model, 5000, seed=8)
    assert a.row() == b.row()
    assert np.array_equal(a.position_counts, b.position_counts)


def test_needs_episodes(grid2):
    with pytest.raises(ValueError):
        simkit.run_monte_carlo(grid2, RelayModel(0.5), 0)


def test_scenario_mean_closed_form():
    sc = simkit.ReputationScenario()
    assert sc.mean_current() == pytest.approx(0.15 + 0.85 * 1.4 / 1.8)
    rng = np.random.default_rng(0)
    draws = np.array([min(sc.draw(rng) / 0.9, 1.0) for _ in range(100_000)])
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    assert abs(draws.mean() - sc.mean_current()) <= 3 * se


def test_protocol_mode_reports_total_relay_probability():
    sc = simkit.ReputationScenario(mode="protocol", delivered_prob=1.0)
    assert sc.draw(np.random.default_rng(0)) == pytest.approx(1 - 0.1**6)


def test_reputation_trajectory_shape():
    traj = simkit.simulate_reputation(simkit.ReputationScenario(), 50, 0.2, seed=1)
    assert [t for t, _, _ in traj] == list(range(1, 51))
    assert traj[0][1] == traj[0][2]
    assert traj == simkit.simulate_reputation(simkit.ReputationScenario(), 50, 0.2, seed=1)

"""Acceptance criteria 1-10; each test records one PASS/FAIL line for the session summary."""

import io
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from cogroute import cli, experiments, market, qos, router, simkit
from cogroute.config import ExperimentConfig
from cogroute.grid import build_grid
from cogroute.router import RelayModel
from cogroute.security import SecurityEnv, interception, robustness
from cogroute.spectrum import PrimaryTraffic, free_channel_pmf

from conftest import ACCEPTANCE_LINES, REFERENCE
from test_spectrum import birth_death_pmf

SUITE_START = time.perf_counter()
SEED = 2024


def record(n, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def nonincreasing(xs):
    return all(a >= b - 1e-12 for a, b in zip(xs, xs[1:]))


def nondecreasing(xs):
    return all(a <= b + 1e-12 for a, b in zip(xs, xs[1:]))


def test_criterion_01_queueing_oracle():
    start = time.perf_counter()
    worst, mass = 0.0, 0.0
    for c in (2, 5, 10):
        for lam, mu in ((1.0, 4.0), (1.0, 1.0), (0.5 * c, 1.0)):
            pmf = free_channel_pmf(PrimaryTraffic(lam, mu, c))
            worst = max(worst, float(np.max(np.abs(pmf - birth_death_pmf(lam, mu, c)))))
            mass = max(mass, abs(pmf.sum() - 1))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and mass < 1e-12 and elapsed < 1.0
    record(1, "queueing oracle", ok, f"max |diff| {worst:.2e}, |sum-1| {mass:.1e}, {elapsed:.2f}s")


MC_CONFIGS = [
    (1, 0.5, 1.0, 1.0),
    (2, 0.5, 0.9, 0.95),
    (2, 0.75, 1.0, 1.0),
    (4, 0.75, 0.95, 0.9),
    (4, 1.0, 0.9, 0.95),
    (4, 0.5, 1.0, 1.0),
]


def test_criterion_02_markov_monte_carlo():
    parts, ok = [], True
    for H, p, pa, xi in MC_CONFIGS:
        start = time.perf_counter()
        g = build_grid(H, 1.0)
        model = RelayModel(p, pa, xi)
        _, tau, pD, _ = router.solve(g, model)
        mc = simkit.run_monte_carlo(g, model, 100_000, SEED)
        elapsed = time.perf_counter() - start
        zt = abs(mc.mean_hops - tau) / mc.hops_se
        zd = abs(mc.p_D - pD) / mc.p_D_se
        good = zt <= 3 and zd <= 3 and elapsed < 30
        ok &= good
        parts.append(f"H={H},p={p}: z_tau {zt:.2f} z_pD {zd:.2f} {elapsed:.2f}s")
    record(2, "Markov/Monte Carlo equivalence", ok, "; ".join(parts))


def test_criterion_03_trivial_exactness():
    _, tau, pD, pnr = router.solve(build_grid(1, 1.0), RelayModel(1.0, 1.0, 1.0))
    ok = tau == 1.0 and pD == 1.0 and pnr == 0.0
    record(3, "trivial exactness", ok, f"tau={tau!r} p_D={pD!r} p_nr={pnr!r}")


def test_criterion_04_security_closed_form():
    env = SecurityEnv.from_fraction(0.1, 61, channels=10, observation_hours=8.0)
    _, p_nd = interception(*robustness(env), 3.5)
    ok = env.eavesdroppers == 6 and 0.985 <= p_nd <= 0.992
    record(4, "security closed form", ok, f"k={env.eavesdroppers}, p_nd={p_nd:.5f} (want [0.985, 0.992])")


def test_criterion_05_reputation_dynamics(reference):
    scenario = reference.reputation_scenario
    window = reference["reputation"]["window"]
    oracle = scenario.mean_current()
    slow = [s for _, _, s in simkit.simulate_reputation(scenario, window, 0.02, SEED)]
    fast = [s for _, _, s in simkit.simulate_reputation(scenario, window, 0.5, SEED)]
    var_slow, var_fast = float(np.var(slow)), float(np.var(fast))
    ok = abs(slow[-1] - oracle) <= 0.05 and var_fast > var_slow
    record(5, "reputation dynamics", ok,
           f"endpoint {slow[-1]:.4f} vs mean {oracle:.4f}; var(0.5)={var_fast:.2e} > var(0.02)={var_slow:.2e}")


def test_criterion_06_calibrated_targets(reference):
    scale, (low, high) = experiments.calibrate(reference, "fig4-90pct-4ch")
    cfg = reference.replace("traffic.arrival_scale", scale)
    w_min = qos.min_backup_channels(cfg.traffic, experiments.demand_for_ratio(cfg, 4), 0.90)
    want = {8: 2, 6: 3, 4: 4}
    got = {}
    for ratio in want:
        d = experiments.demand_for_ratio(cfg, ratio)
        wm = qos.min_backup_channels(cfg.traffic, d, 0.90)
        got[ratio] = qos.optimal_channels_for_delay(cfg.grid, cfg.traffic, d, 1.0, cfg.qos.delay_max, wm,
                                                   cfg.sources, **cfg.model_kw())
    ok = w_min == 4 and all(abs(got[r] - want[r]) <= 1 for r in want)
    record(6, "calibrated w_min and w* targets", ok,
           f"scale {scale:.4f} in [{low:.3f}, {high:.3f}], w_min={w_min}; "
           f"w* for mu_S=8,6,4: {got[8]},{got[6]},{got[4]} (want 2,3,4 +/-1)")


def test_criterion_07_trends(reference):
    cfg = reference
    verdicts = {}

    ratios = (2, 4, 6, 8)
    wm = {(xi, r): qos.min_backup_channels(cfg.traffic, experiments.demand_for_ratio(cfg, r), xi)
          for xi in experiments.XI_SWEEP for r in ratios}
    verdicts["w_min down in mu_S"] = all(nonincreasing([wm[xi, r] for r in ratios]) for xi in experiments.XI_SWEEP)
    verdicts["w_min up in xi_min"] = all(nondecreasing([wm[xi, r] for xi in experiments.XI_SWEEP]) for r in ratios)

    _, fig9 = experiments.fig9(cfg)
    tau_by_w = {}
    for w, p, tau, thr, _, p_nd in fig9:
        tau_by_w.setdefault(w, []).append((p, tau, thr, p_nd))
    verdicts["tau down in p"] = all(nonincreasing([t for _, t, _, _ in v]) for v in tau_by_w.values())

    _, fig8 = experiments.fig8(cfg)
    by_xi, by_p = {}, {}
    for p, xi, w, tau, p_nd in fig8:
        by_xi.setdefault(xi, []).append((p, p_nd))
        by_p.setdefault(p, []).append((w, p_nd))
    verdicts["p_nd up in p"] = all(nondecreasing([v for _, v in sorted(rows)]) for rows in by_xi.values())
    verdicts["p_nd up in w_min"] = all(nondecreasing([v for _, v in sorted(rows)]) for rows in by_p.values())

    # throughput drop when the purchased minimum grows by 2 from the plan's w_min,
    # averaged over the availability sweep used for fig9
    base = experiments.plan(cfg).backup_channels
    mean_thr = lambda w: np.mean([market.evaluate_route(cfg.grid, cfg.traffic, cfg.demand, p, cfg.security,
                                                        cfg.pricing, w, cfg.link_sinr, cfg.sources,
                                                        **cfg.model_kw()).throughput
                                  for p in experiments.P_SWEEP])
    drop = 1 - mean_thr(base + 2) / mean_thr(base)
    verdicts[f"T drop {base}->{base + 2} = {100 * drop:.1f}% in [5, 25]%"] = 0.05 <= drop <= 0.25

    ok = all(verdicts.values())
    record(7, "trend suite", ok, "; ".join(f"{k} {'ok' if v else 'NO'}" for k, v in verdicts.items()))


def test_criterion_08_optimisation_oracles(reference, grid4):
    cfg = reference
    parts, ok = [], True

    worst = 0.0
    for ratio in (2, 4, 6, 8):
        d = experiments.demand_for_ratio(cfg, ratio)
        coarse = qos.optimal_switch_time(cfg.traffic, d, 0.9)
        fine = qos.optimal_switch_time(cfg.traffic, d, 0.9, points=100 * qos.SWITCH_GRID_POINTS)
        worst = max(worst, abs(coarse - fine) / d.service_time)
    ok &= worst <= 1e-3
    parts.append(f"t_w* refinement shift {worst:.1e} t_S")

    mismatches = 0
    for ratio in (2, 4, 6, 8):
        d = experiments.demand_for_ratio(cfg, ratio)
        w_min = qos.min_backup_channels(cfg.traffic, d, 0.9)
        for p in (0.6, 1.0):
            losses = {}
            for w in range(w_min, cfg.traffic.channels + 1):
                m = qos.relay_model_for_channels(cfg.traffic, d, p, w)
                losses[w] = (cfg.qos.delay_max - router.solve(cfg.grid, m, cfg.sources)[1]) ** 2
            brute = min(w for w, v in losses.items() if v == min(losses.values()))
            mismatches += brute != qos.optimal_channels_for_delay(
                cfg.grid, cfg.traffic, d, p, cfg.qos.delay_max, w_min, cfg.sources)
    ok &= mismatches == 0
    parts.append(f"w* enumeration mismatches {mismatches}")

    mismatches = 0
    for p in experiments.P_SWEEP:
        for w_lo in (2, 4, 6):
            w_best, _, _ = market.optimize_purchase(cfg.grid, cfg.traffic, cfg.demand, p, cfg.security,
                                                    cfg.pricing, w_lo, cfg.link_sinr, cfg.sources)
            utils = {w: market.evaluate_route(cfg.grid, cfg.traffic, cfg.demand, p, cfg.security, cfg.pricing,
                                              w, cfg.link_sinr, cfg.sources).utility
                     for w in range(w_lo, cfg.traffic.channels + 1)}
            brute = min(w for w, u in utils.items() if u == max(utils.values()))
            mismatches += brute != w_best
    ok &= mismatches == 0
    parts.append(f"w_R* enumeration mismatches {mismatches}")
    record(8, "optimisation oracles", ok, "; ".join(parts))


def _cli_output(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.run(argv)
    return code, buf.getvalue()


def test_criterion_09_determinism():
    commands = [["analyze"], ["mc"], ["plan"], ["sweep"], ["calibrate", "fig4-90pct-4ch"]]
    commands += [["reproduce", f] for f in experiments.FIGURES]
    diffs = []
    for cmd in commands:
        argv = ["--config", str(REFERENCE), "--seed", str(SEED)] + cmd
        a, b = _cli_output(argv), _cli_output(argv)
        if a != b or a[0] != 0 or not a[1]:
            diffs.append(" ".join(cmd))
    record(9, "determinism", not diffs,
           f"{len(commands) - len(diffs)}/{len(commands)} subcommands byte-identical" +
           (f"; differing: {', '.join(diffs)}" if diffs else ""))


def test_criterion_10_scale():
    start = time.perf_counter()
    cfg = ExperimentConfig.load(REFERENCE)
    experiments.analyze(cfg)
    pipeline = time.perf_counter() - start
    suite = time.perf_counter() - SUITE_START
    ok = len(cfg.grid) == 61 and pipeline < 1.0 and suite < 300
    record(10, "scale", ok, f"H=4 closed-form pipeline {pipeline:.3f}s; acceptance suite so far {suite:.1f}s")

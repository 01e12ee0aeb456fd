"""Experiment drivers behind the CLI: analysis, planning, sweeps, figures, calibration.

Every driver returns ``(header, rows)`` ready for CSV output.
"""

from __future__ import annotations

import math

import numpy as np

from . import market, qos, router, simkit
from .config import ExperimentConfig
from .security import interception, robustness
from .spectrum import SecondaryDemand, link_reliability


class CalibrationError(RuntimeError):
    pass


CALIBRATION_TARGETS = ("fig4-90pct-4ch", "fig5-wstar-ladder")
FIGURES = tuple(f"fig{n}" for n in range(3, 11))

# secondary service rate as multiples of lambda_p used by each figure
FIG3_RATIOS = (2, 4, 6, 8)
FIG4_RATIOS = (2, 4, 8)
FIG5_RATIOS = (8, 6, 4, 2)
XI_SWEEP = (0.80, 0.85, 0.87, 0.90, 0.93, 0.95)
P_SWEEP = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


def demand_for_ratio(cfg: ExperimentConfig, ratio: float) -> SecondaryDemand:
    return SecondaryDemand(ratio * cfg.traffic.arrival_rate, cfg.traffic.service_rate)


def _xi_min(cfg: ExperimentConfig) -> float:
    return cfg.qos.link_target()


def plan(cfg: ExperimentConfig, demand=None, p=None) -> qos.SwitchPlan:
    return qos.plan(
        cfg.grid, cfg.traffic, demand or cfg.demand, cfg.availability if p is None else p,
        cfg.qos, cfg.sources, **cfg.model_kw(),
    )


def plan_table(cfg: ExperimentConfig):
    sp = plan(cfg)
    return qos.SwitchPlan.CSV_HEADER, [(
        _xi_min(cfg), cfg.qos.delay_max, sp.switching_time, sp.switch_count,
        sp.backup_channels, sp.delay_channels, sp.purchase_count,
    )]


def analyze(cfg: ExperimentConfig):
    """Plan, then buy the utility-optimal channel count; one RouteReport row."""
    sp = plan(cfg)
    _, best, _ = market.optimize_purchase(
        cfg.grid, cfg.traffic, cfg.demand, cfg.availability, cfg.security, cfg.pricing,
        sp.purchase_count, cfg.link_sinr, cfg.sources, **cfg.model_kw(),
    )
    header = ("w_min", "w_star", "w_R_min") + market.RouteReport.CSV_HEADER
    return header, [(sp.backup_channels, sp.delay_channels, sp.purchase_count) + best.row()]


def mc_model(cfg: ExperimentConfig) -> router.RelayModel:
    w = cfg["relay"]["channels"]
    if w is None:
        w = plan(cfg).delay_channels
    return qos.relay_model_for_channels(cfg.traffic, cfg.demand, cfg.availability, w, **cfg.model_kw())


def monte_carlo(cfg: ExperimentConfig):
    """Simulation vs closed form for tau, p_D and p_nr."""
    model = mc_model(cfg)
    mc = cfg["montecarlo"]
    _, tau, pD, pnr = router.solve(cfg.grid, model, cfg.sources)
    est = simkit.run_monte_carlo(cfg.grid, model, mc["episodes"], mc["seed"], cfg.sources)
    rows = []
    for name, exact, hat, se in (
        ("tau", tau, est.mean_hops, est.hops_se),
        ("p_D", pD, est.p_D, est.p_D_se),
        ("p_nr", pnr, est.p_nr, est.p_nr_se),
    ):
        dev = abs(hat - exact)
        z = dev / se if se > 0 else (0.0 if dev == 0 else math.inf)
        rows.append((name, exact, hat, se, z, int(dev <= 3 * se)))
    return ("metric", "analytic", "estimate", "std_error", "z", "within_3se"), rows


def sweep(cfg: ExperimentConfig):
    axis = cfg["sweep"]["axis"]
    header = None
    rows = []
    for value in cfg["sweep"]["values"]:
        point = cfg.replace(axis, value)
        try:
            h, (row,) = analyze(point)
            header = h
            rows.append((value, "ok") + row)
        except qos.InfeasibleQoS:
            rows.append((value, "infeasible"))
    if header is None:
        header = ("w_min", "w_star", "w_R_min") + market.RouteReport.CSV_HEADER
    width = len(header) + 2
    rows = [r + ("",) * (width - len(r)) for r in rows]
    return (axis.replace(".", "_"), "status") + header, rows


# --- figures -----------------------------------------------------------------


def fig3(cfg):
    xi_min = _xi_min(cfg)
    rows = []
    for ratio in FIG3_RATIOS:
        d = demand_for_ratio(cfg, ratio)
        u = np.arange(1, 201) / 200
        t = u * d.service_time
        obj = qos.switch_objective(cfg.traffic, t, xi_min)
        rows += [(ratio, float(a), float(b), float(c)) for a, b, c in zip(u, t, obj)]
    return ("mu_s_ratio", "tw_over_ts", "tw", "objective"), rows


def fig4(cfg):
    rows = []
    for xi in np.round(np.arange(0.80, 0.9501, 0.01), 2):
        for ratio in FIG4_RATIOS:
            try:
                w = qos.min_backup_channels(cfg.traffic, demand_for_ratio(cfg, ratio), float(xi))
            except qos.InfeasibleQoS:
                w = ""
            rows.append((float(xi), ratio, w))
    return ("xi_min", "mu_s_ratio", "w_min"), rows


def fig5(cfg, p: float = 1.0):
    xi_min = _xi_min(cfg)
    rows = []
    for ratio in FIG5_RATIOS:
        d = demand_for_ratio(cfg, ratio)
        w_min = qos.min_backup_channels(cfg.traffic, d, xi_min)
        ws = range(w_min, cfg.traffic.channels + 1)
        taus = qos.delay_curve(cfg.grid, cfg.traffic, d, p, ws, cfg.sources, **cfg.model_kw())
        if not ws:
            continue
        best = min(ws, key=lambda w: ((cfg.qos.delay_max - taus[w]) ** 2, w))
        for w in ws:
            rows.append((ratio, w_min, w, taus[w], (cfg.qos.delay_max - taus[w]) ** 2, int(w == best)))
    return ("mu_s_ratio", "w_min", "w", "tau", "loss", "is_optimum"), rows


def fig6(cfg):
    rep = cfg["reputation"]
    rows = []
    for a in rep["weights"]:
        traj = simkit.simulate_reputation(cfg.reputation_scenario, rep["window"], a, cfg["montecarlo"]["seed"])
        rows += [(a,) + step for step in traj]
    return ("alpha", "episode", "s_current", "s_reputation"), rows


def fig7(cfg, ps=(0.6, 0.8, 1.0)):
    """Mean route length when every relay is weighted by the running reputation."""
    rep = cfg["reputation"]
    w = plan(cfg).delay_channels
    rows = []
    for a in rep["weights"]:
        traj = simkit.simulate_reputation(cfg.reputation_scenario, rep["window"], a, cfg["montecarlo"]["seed"])
        for p in ps:
            base = qos.relay_model_for_channels(cfg.traffic, cfg.demand, p, w)
            taus = []
            for _, _, s in traj:
                model = router.RelayModel(p, base.channel_availability, base.link_reliability, router.SECPR, s)
                taus.append(router.solve(cfg.grid, model, cfg.sources)[1])
            rows.append((a, p, float(np.mean(taus)), float(np.min(taus)), float(np.max(taus))))
    return ("alpha", "p", "tau_mean", "tau_min", "tau_max"), rows


def fig8(cfg, ps=(0.6, 0.8, 1.0)):
    sig = robustness(cfg.security)
    rows = []
    for p in ps:
        for xi in XI_SWEEP:
            w = qos.min_backup_channels(cfg.traffic, cfg.demand, xi)
            if w > cfg.traffic.channels:
                continue
            model = qos.relay_model_for_channels(cfg.traffic, cfg.demand, p, w, **cfg.model_kw())
            tau = router.solve(cfg.grid, model, cfg.sources)[1]
            rows.append((p, xi, w, tau, interception(*sig, tau)[1]))
    return ("p", "xi_min", "w_min", "tau", "p_nd"), rows


def fig9(cfg, w_routes=(2, 4, 6, 8)):
    rows = []
    for w in w_routes:
        for p in P_SWEEP:
            r = market.evaluate_route(cfg.grid, cfg.traffic, cfg.demand, p, cfg.security, cfg.pricing,
                                      w, cfg.link_sinr, cfg.sources, **cfg.model_kw())
            rows.append((w, p, r.hops, r.throughput, r.secure_throughput, r.p_nd))
    return ("w_R_min", "p", "tau", "T", "T_s", "p_nd"), rows


def fig10(cfg, ps=(0.6, 0.8, 1.0)):
    rows = []
    for p in ps:
        for xi in XI_SWEEP:
            point = cfg.replace("qos.link_reliability_min", xi)
            try:
                sp = plan(point, p=p)
                w_star, best, _ = market.optimize_purchase(
                    cfg.grid, cfg.traffic, cfg.demand, p, cfg.security, cfg.pricing,
                    sp.purchase_count, cfg.link_sinr, cfg.sources, **cfg.model_kw(),
                )
            except qos.InfeasibleQoS:
                continue
            rows.append((p, xi, sp.purchase_count, w_star, best.hops, best.utility,
                         int(best.hops <= cfg.qos.delay_max)))
    return ("p", "xi_min", "w_R_min", "w_R_star", "tau", "U", "meets_delay"), rows


def reproduce(cfg: ExperimentConfig, figure: str):
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    return globals()[figure](cfg)


# --- calibration ---------------------------------------------------------------


def _target_value(cfg: ExperimentConfig, target: str, scale: float, ratio: float = 4):
    point = cfg.replace("traffic.arrival_scale", float(scale))
    d = demand_for_ratio(point, ratio)
    try:
        w_min = qos.min_backup_channels(point.traffic, d, 0.90)
    except qos.InfeasibleQoS:
        return None
    if target == "fig4-90pct-4ch":
        return w_min
    if w_min > point.traffic.channels:
        return None
    return qos.optimal_channels_for_delay(point.grid, point.traffic, d, 1.0, point.qos.delay_max,
                                          w_min, point.sources, **point.model_kw())


def _edge(pred, inside: float, outside: float, iters: int = 40) -> float:
    # geometric bisection between a point satisfying pred and one that does not
    for _ in range(iters):
        mid = math.sqrt(inside * outside)
        if pred(mid):
            inside = mid
        else:
            outside = mid
    return inside


def calibrate(cfg: ExperimentConfig, target: str, bracket=(0.01, 100.0), points: int = 121):
    """Find the PU-return rate scale at which the named target holds.

    Scans the bracket on a log grid for the first plateau where the integer
    target equals 4 (the staircase is not monotone over the whole bracket,
    since the truncated return sum falls again for very long intervals), then
    bisects both plateau edges. Returns ``(scale, (low, high))`` with
    ``scale`` the geometric midpoint of the plateau.
    """
    if target not in CALIBRATION_TARGETS:
        raise CalibrationError(f"unknown target {target!r}")
    want = 4
    grid = np.geomspace(bracket[0], bracket[1], points)
    values = [_target_value(cfg, target, s) for s in grid]
    hits = [k for k, v in enumerate(values) if v == want]
    if not hits:
        raise CalibrationError(f"no scale in [{bracket[0]}, {bracket[1]}] gives {target} = {want}; "
                               f"scan saw {sorted(set(v for v in values if v is not None))}")
    first = hits[0]
    last = first
    while last + 1 < points and values[last + 1] == want:
        last += 1
    pred = lambda s: _target_value(cfg, target, s) == want
    low = grid[0] if first == 0 else _edge(pred, grid[first], grid[first - 1])
    high = grid[-1] if last == points - 1 else _edge(pred, grid[last], grid[last + 1])
    return math.sqrt(low * high), (low, high)


def calibration_report(cfg: ExperimentConfig, target: str):
    scale, (low, high) = calibrate(cfg, target)
    point = cfg.replace("traffic.arrival_scale", scale)
    xi_min = _xi_min(point)
    rows = [("scale", "", scale), ("scale_low", "", low), ("scale_high", "", high)]
    for ratio in FIG5_RATIOS:
        d = demand_for_ratio(point, ratio)
        try:
            tw = qos.optimal_switch_time(point.traffic, d, xi_min)
            w_min = qos.min_backup_channels(point.traffic, d, xi_min)
        except qos.InfeasibleQoS:
            rows.append(("w_min", ratio, ""))
            continue
        rows.append(("tw_star_over_ts", ratio, tw / d.service_time))
        rows.append(("xi_at_tw_star", ratio, float(link_reliability(point.traffic, tw))))
        rows.append(("w_min", ratio, w_min))
        if w_min <= point.traffic.channels:
            w_star = qos.optimal_channels_for_delay(point.grid, point.traffic, d, 1.0, point.qos.delay_max,
                                                    w_min, point.sources, **point.model_kw())
            rows.append(("w_star", ratio, w_star))
    return ("key", "mu_s_ratio", "value"), rows

"""
Table builders behind each CLI command. Each returns plot-ready rows plus a
meta dictionary; writing them out is left to experiments.output.
"""
import logging
import warnings
from typing import Dict, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from .. import config
from ..errors import ConfigError
from ..model.dist import Poisson, Regular
from ..model.game import (ConstantCost, adoption_curve, best_response_dynamics, find_equilibria,
                          gamma_scan, max_stable_adoption, price_of_anarchy_case1,
                          price_of_anarchy_case2, tipping_threshold)
from ..model.lmf import lmf_curve, lmf_solution, solve_rde_grid
from ..network.graphs import Graph, read_edge_list
from ..network.netgen import gen_config, gen_er
from ..network.sim import SimConfig, exact_tiny, run_epidemic
from .params import ExperimentConfig

logger = logging.getLogger(__name__)

Table = Tuple[pd.DataFrame, dict]


def _meta(cfg: ExperimentConfig, command: str, **extra) -> dict:
    meta = {"command": command, "config": cfg.to_dict()}
    meta.update(extra)
    return meta


def lmf_table(cfg: ExperimentConfig) -> Table:
    """h, p_N, p_S and c^gamma over a gamma grid."""
    params, econ = cfg.epidemic(), cfg.economy()
    sec = cfg.section("lmf")
    gammas = np.asarray(sec["gammas"] if sec["gammas"] is not None else np.linspace(0.0, 1.0, sec["points"]))
    if np.any(gammas < 0) or np.any(gammas > 1):
        raise ConfigError("lmf.gammas: values must lie in [0, 1]")
    frame = lmf_curve(params, econ, gammas).to_frame()
    frame["mean_loss"] = frame["gamma"] * frame["p_S"] + (1.0 - frame["gamma"]) * frame["p_N"]
    return frame, _meta(cfg, "lmf-solve")


def lambda_q_sweep(cfg: ExperimentConfig) -> Table:
    """h* = h(0) for Poisson degrees as lambda q+ runs over [0, sweep_max]."""
    params = cfg.epidemic()
    sec = cfg.section("lmf")
    if params.q_plus <= 0:
        raise ConfigError("epidemic.q_plus: must be > 0 to sweep lambda q+")
    rows = []
    for lam_q in np.linspace(0.0, sec["sweep_max"], sec["sweep_points"]):
        lam = lam_q / params.q_plus
        degree = Poisson(lam) if lam > 0 else Regular(0)
        point = params.replace(degree=degree)
        h = float(solve_rde_grid(point, [0.0])[0])
        rows.append({"lambda_q": float(lam_q), "lambda": float(lam), "h_star": h})
    return pd.DataFrame(rows), _meta(cfg, "lmf-solve", sweep="lambda_q")


def equilibria_table(cfg: ExperimentConfig) -> Table:
    """Equilibria with stability, the social optimum and the price of anarchy."""
    params, econ, cost = cfg.epidemic(), cfg.economy(), cfg.cost()
    scan = gamma_scan(params, econ)
    report = find_equilibria(params, econ, cost, include_unstable=cfg.include_unstable, scan=scan)
    extra = {
        "social_opt_gamma": report.social_opt_gamma,
        "social_opt_cost": report.social_opt_cost,
        "price_of_anarchy": report.price_of_anarchy,
        "c_0": float(scan.c_gamma[0]),
        "c_1": float(scan.c_gamma[-1]),
        "c_1_left": scan.c_left,
        "regime": "strong" if params.is_strong else ("weak" if params.is_weak else "general"),
    }
    if isinstance(cost, ConstantCost) and econ.is_risk_neutral:
        if params.is_strong:
            extra["poa_case1"] = price_of_anarchy_case1(params, econ, cost, scan=scan)
        if params.is_weak:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                comparison = price_of_anarchy_case2(params, econ, cost, cfg.include_unstable, scan=scan)
            extra["poa_case2"] = comparison.to_dict()
            extra["poa_case2_warning"] = str(caught[0].message) if caught else None
    return report.to_frame(), _meta(cfg, "equilibria", **extra)


def adoption_table(cfg: ExperimentConfig) -> Table:
    """Adoption curves: every equilibrium for each (q-, c / l) cell."""
    params, econ = cfg.epidemic(), cfg.economy()
    sec = cfg.section("adoption")
    grid = np.linspace(0.0, 1.0, sec["cost_points"])
    frame = adoption_curve(params, econ, sec["q_minus"], grid, cfg.include_unstable)
    return frame, _meta(cfg, "adoption-curve")


def non_monotone_witnesses(frame: pd.DataFrame) -> pd.DataFrame:
    """
    Cells where some q- > 0 reaches a strictly higher maximal stable adoption
    than a smaller q- at the same cost.
    """
    best = max_stable_adoption(frame).pivot(index="cost_ratio", columns="q_minus", values="gamma")
    rows = []
    qs = sorted(best.columns)
    for ratio, row in best.iterrows():
        for i, better in enumerate(qs):
            for worse in qs[i + 1:]:
                if pd.notna(row[better]) and pd.notna(row[worse]) and row[worse] > row[better] + 1e-9:
                    rows.append({"cost_ratio": ratio, "q_minus_low": better, "q_minus_high": worse,
                                 "gamma_low": row[better], "gamma_high": row[worse]})
    return pd.DataFrame(rows, columns=["cost_ratio", "q_minus_low", "q_minus_high", "gamma_low", "gamma_high"])


def poa_table(cfg: ExperimentConfig) -> Table:
    """Price of anarchy over a c / l grid; the formula column is filled in the weak case."""
    params, econ = cfg.epidemic(), cfg.economy()
    sec = cfg.section("poa")
    case = cfg.case
    scan = gamma_scan(params, econ)
    rows = []
    disagreements = 0
    for ratio in np.linspace(sec["cost_min"], sec["cost_max"], sec["points"]):
        cost = ConstantCost(float(ratio) * econ.loss, econ.loss)
        row = {"cost_ratio": float(ratio)}
        if case == "strong":
            row["poa"] = price_of_anarchy_case1(params, econ, cost, scan=scan)
        elif case == "weak":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                cmp = price_of_anarchy_case2(params, econ, cost, cfg.include_unstable, scan=scan)
            row.update({"poa": cmp.value, "poa_formula": cmp.formula, "difference": cmp.difference})
            disagreements += cmp.difference > 1e-6
        else:
            row["poa"] = find_equilibria(params, econ, cost, cfg.include_unstable, scan=scan).price_of_anarchy
        rows.append(row)
    if disagreements:
        logger.warning("closed-form price of anarchy disagrees with the equilibrium ratio on %d rows",
                       disagreements)
    return pd.DataFrame(rows), _meta(cfg, "poa-curve", case=case, disagreements=int(disagreements))


def tipping_table(cfg: ExperimentConfig) -> Table:
    """Tipping threshold with trajectories seeded just below and just above it."""
    params, econ, cost = cfg.epidemic(), cfg.economy(), cfg.cost()
    report = find_equilibria(params, econ, cost, include_unstable=cfg.include_unstable)
    threshold = tipping_threshold(params, econ, cost, report)
    target = max(report.gammas("stable"), default=None)
    rows = []
    if threshold is not None:
        delta = 1e-4
        for label, g0 in (("below", max(0.0, threshold - delta)), ("above", min(1.0, threshold + delta))):
            result = best_response_dynamics(params, econ, cost, g0)
            for step, gamma in enumerate(result.trajectory):
                rows.append({"start": label, "gamma0": g0, "step": step, "gamma": gamma,
                             "converged": result.converged})
    meta = _meta(cfg, "tipping", threshold=threshold, target_equilibrium=target,
                 equilibria=[e.to_dict() for e in report.equilibria])
    return pd.DataFrame(rows, columns=["start", "gamma0", "step", "gamma", "converged"]), meta


def load_graph(cfg: ExperimentConfig, seed: int = None) -> Graph:
    sec = cfg.section("graph")
    seed = cfg.seed if seed is None else seed
    if sec["kind"] == "file":
        if not sec["path"]:
            raise ConfigError("graph.path: required when graph.kind = \"file\"")
        return read_edge_list(sec["path"])
    degree = cfg.epidemic().degree
    if sec["kind"] == "er":
        if not isinstance(degree, Poisson):
            raise ConfigError("epidemic.degree: an Erdos-Renyi graph needs a poisson degree law")
        return gen_er(sec["n"], degree.lam, seed)
    return gen_config(sec["n"], degree, seed)


def simulate_table(cfg: ExperimentConfig, graph: Graph = None) -> Table:
    """One Monte Carlo run; rows are per-node infection frequencies."""
    graph = load_graph(cfg) if graph is None else graph
    sec = cfg.section("sim")
    if sec["investment"] is not None:
        sim_cfg = SimConfig(cfg.epidemic(), investment=sec["investment"], trials=sec["trials"], seed=cfg.seed)
    else:
        sim_cfg = SimConfig(cfg.epidemic(), gamma=sec["gamma"], trials=sec["trials"], seed=cfg.seed)
    outcome = run_epidemic(graph, sim_cfg)
    frame = pd.DataFrame({"node": np.arange(graph.n), "rate": outcome.node_rates, "se": outcome.node_se})
    summary = outcome.to_dict()
    summary.pop("node_rates")
    summary.pop("node_se")
    return frame, _meta(cfg, "simulate", outcome=summary, edges=graph.m)


def validate_table(cfg: ExperimentConfig) -> Tuple[pd.DataFrame, dict, bool]:
    """Simulation vs local mean field over a ladder of graph sizes."""
    params, econ = cfg.epidemic(), cfg.economy()
    sec = cfg.section("validate")
    gamma = sec["gamma"]
    target = lmf_solution(params, econ, gamma).mean_loss
    rows = []
    for i, n in enumerate(sec["n_values"]):
        if isinstance(params.degree, Poisson):
            graph = gen_er(n, params.degree.lam, cfg.seed + i)
        else:
            graph = gen_config(n, params.degree, cfg.seed + i)
        outcome = run_epidemic(graph, SimConfig(params, gamma=gamma, trials=sec["trials"], seed=cfg.seed + i))
        rows.append({"n": n, "empirical": outcome.mean_infected, "se": outcome.se_infected,
                     "lmf": target, "gap": abs(outcome.mean_infected - target)})
    frame = pd.DataFrame(rows)
    gaps = frame["gap"].to_numpy()
    decreasing = bool(np.all(np.diff(gaps) < 0)) if gaps.size > 1 else True
    passed = decreasing and bool(gaps[-1] < sec["threshold"])
    meta = _meta(cfg, "validate", mode="lmf", decreasing=decreasing, passed=passed)
    return frame, meta, passed


def _random_tiny_case(rng: np.random.Generator, max_nodes: int, budget_bits: int = config.EXACT_BUDGET_BITS) -> Dict:
    n = int(rng.integers(1, max_nodes + 1))
    g = nx.gnp_random_graph(n, 0.6, seed=int(rng.integers(2**32)))
    graph = Graph.from_networkx(g)
    while graph.n + 2 * graph.m > budget_bits:
        graph = Graph(graph.n, graph.edges[:-1])
    p_plus, q_plus = rng.uniform(0.05, 0.95, size=2)
    p_minus, q_minus = rng.uniform(0.0, 1.0, size=2) * (p_plus, q_plus)
    investment = rng.integers(0, 2, size=graph.n)
    return {"graph": graph, "p": (p_plus, p_minus, q_plus, q_minus), "investment": investment}


def validate_tiny_table(cfg: ExperimentConfig) -> Tuple[pd.DataFrame, dict, bool]:
    """Monte Carlo against exact enumeration on random tiny graphs."""
    sec = cfg.section("validate")
    base = cfg.epidemic()
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for k in range(sec["tiny_graphs"]):
        case = _random_tiny_case(rng, sec["tiny_max_nodes"])
        p_plus, p_minus, q_plus, q_minus = (float(v) for v in case["p"])
        params = base.replace(p_plus=p_plus, p_minus=p_minus, q_plus=q_plus, q_minus=q_minus)
        exact = exact_tiny(case["graph"], params, case["investment"])
        sim_cfg = SimConfig(params, investment=case["investment"], trials=sec["tiny_trials"], seed=cfg.seed + k)
        outcome = run_epidemic(case["graph"], sim_cfg)
        for node in range(case["graph"].n):
            se = float(np.sqrt(max(exact[node] * (1.0 - exact[node]), 1e-12) / sec["tiny_trials"]))
            z = abs(outcome.node_rates[node] - exact[node]) / se
            rows.append({"graph": k, "n": case["graph"].n, "m": case["graph"].m, "node": node,
                         "exact": float(exact[node]), "estimate": float(outcome.node_rates[node]),
                         "se": se, "z": float(z)})
    frame = pd.DataFrame(rows)
    passed = bool((frame["z"] <= sec["tiny_se"]).all())
    return frame, _meta(cfg, "validate", mode="tiny", passed=passed), passed


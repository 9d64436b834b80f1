"""
Security-investment game on top of the local mean field.

A fraction gamma of agents invests; an agent invests iff its cost is below
the critical cost c^gamma. Equilibria are the fixed points of the
best-response map gamma -> P(c <= c^gamma).
"""
import dataclasses
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.optimize import brentq, minimize_scalar

from .. import config
from ..errors import ConvergenceError, DomainError, RegimeError
from .econ import AgentEconomy, willingness_to_pay
from .lmf import EpidemicParams, critical_cost, lmf_curve, lmf_solution, loss_probs, solve_rde

logger = logging.getLogger(__name__)

DEDUP_TOL = 1e-7
EXACT_TOL = 1e-12
POA_WARN_TOL = 1e-6


# -- Cost models -------------------------------------------------------------

@dataclass(frozen=True)
class ConstantCost:
    """Every agent pays c to invest and loses loss when hit."""

    c: float
    loss: float = 1.0
    kind = "constant"

    def __post_init__(self):
        if not 0.0 <= self.c <= self.loss:
            raise DomainError(f"constant cost must satisfy 0 <= c <= loss (got c={self.c}, loss={self.loss})")

    def adoption(self, threshold: float) -> float:
        return 1.0 if self.c < threshold else 0.0

    def mean_investor_cost(self, gamma: float) -> float:
        return self.c

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": self.c, "loss": self.loss}


@dataclass(frozen=True)
class DistributedCost:
    """
    Heterogeneous costs with a common loss.

    The cdf of c / loss is piecewise linear through (knots[i], cdf[i]) with
    knots running from 0 to 1.
    """

    knots: Tuple[float, ...]
    cdf: Tuple[float, ...]
    loss: float = 1.0
    kind = "distribution"

    def __post_init__(self):
        knots = tuple(float(t) for t in self.knots)
        cdf = tuple(float(v) for v in self.cdf)
        if len(knots) < 2 or len(knots) != len(cdf):
            raise DomainError("cost distribution needs matching knots and cdf values (at least two)")
        if knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            raise DomainError("cost distribution knots must increase strictly from 0 to 1")
        if cdf[0] < 0.0 or np.any(np.diff(cdf) < 0) or abs(cdf[-1] - 1.0) > EXACT_TOL:
            raise DomainError("cost cdf must be non-decreasing, start >= 0 and end at 1")
        if self.loss <= 0:
            raise DomainError(f"loss must be > 0 for a cost distribution (got {self.loss})")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "cdf", cdf[:-1] + (1.0,))

    @classmethod
    def uniform(cls, loss: float = 1.0) -> "DistributedCost":
        return cls((0.0, 1.0), (0.0, 1.0), loss)

    def adoption(self, threshold: float) -> float:
        """P(c <= threshold)."""
        return float(np.interp(threshold / self.loss, self.knots, self.cdf))

    def quantile(self, u: float) -> float:
        """Smallest t with F(t) >= u, in units of the loss."""
        cdf = np.asarray(self.cdf)
        i = int(np.searchsorted(cdf, u, side="left"))
        if i == 0:
            return self.knots[0]
        i = min(i, len(cdf) - 1)
        t0, t1 = self.knots[i - 1], self.knots[i]
        f0, f1 = cdf[i - 1], cdf[i]
        return t0 + (u - f0) / (f1 - f0) * (t1 - t0)

    def mean_investor_cost(self, gamma: float) -> float:
        """Mean cost of the cheapest gamma fraction of agents."""
        if gamma <= 0.0:
            return 0.0
        t_star = self.quantile(gamma)
        knots = np.asarray(self.knots)
        ts = np.append(knots[knots < t_star], t_star)
        area = trapezoid(np.interp(ts, self.knots, self.cdf), ts) if ts.size > 1 else 0.0
        return self.loss * (gamma * t_star - area) / gamma

    def to_dict(self) -> dict:
        return {"kind": self.kind, "knots": list(self.knots), "cdf": list(self.cdf), "loss": self.loss}


CostModel = Union[ConstantCost, DistributedCost]


# -- Reports -----------------------------------------------------------------

@dataclass(frozen=True)
class Equilibrium:
    gamma: float
    h: float
    p_N: float
    p_S: float
    c_gamma: float
    per_capita_cost: float
    stability: str
    kind: str
    branch: str = "minimal"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class EquilibriumReport:
    equilibria: List[Equilibrium]
    social_opt_gamma: float
    social_opt_cost: float
    price_of_anarchy: float
    include_unstable: bool = False

    def gammas(self, stability: Optional[str] = None) -> List[float]:
        return [e.gamma for e in self.equilibria if stability is None or e.stability == stability]

    @property
    def exact(self) -> List[Equilibrium]:
        return [e for e in self.equilibria if e.kind != "limit"]

    def to_dict(self) -> dict:
        return {
            "equilibria": [e.to_dict() for e in self.equilibria],
            "social_opt_gamma": self.social_opt_gamma,
            "social_opt_cost": self.social_opt_cost,
            "price_of_anarchy": self.price_of_anarchy,
            "include_unstable": self.include_unstable,
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([e.to_dict() for e in self.equilibria])


@dataclass(frozen=True)
class PoaComparison:
    value: float
    formula: float
    difference: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class DynamicsResult:
    trajectory: Tuple[float, ...]
    converged: bool
    cycle: Optional[Tuple[float, float]] = None

    @property
    def limit(self) -> Optional[float]:
        return self.trajectory[-1] if self.converged else None

    def to_dict(self) -> dict:
        return {"trajectory": list(self.trajectory), "converged": self.converged,
                "cycle": list(self.cycle) if self.cycle else None}


@dataclass(frozen=True)
class GammaScan:
    """Minimal-branch LMF quantities on a gamma grid plus the left limit at gamma = 1."""

    gammas: np.ndarray
    h: np.ndarray
    p_N: np.ndarray
    p_S: np.ndarray
    c_gamma: np.ndarray
    wtp_N: np.ndarray
    wtp_S: np.ndarray
    c_left: float
    params: EpidemicParams = field(repr=False)
    econ: AgentEconomy = field(repr=False)

    @property
    def c_scan(self) -> np.ndarray:
        """Critical costs with the value at gamma = 1 replaced by its left limit."""
        values = self.c_gamma.copy()
        values[-1] = self.c_left
        return values


# -- Helpers -----------------------------------------------------------------

def _check_cost(econ: AgentEconomy, cost: CostModel) -> None:
    if abs(cost.loss - econ.loss) > EXACT_TOL * max(1.0, econ.loss):
        raise DomainError(f"cost model loss {cost.loss} differs from the economy loss {econ.loss}")
    if isinstance(cost, ConstantCost):
        # re-validates wealth - loss - c against the utility domain
        dataclasses.replace(econ, cost=cost.c)


def _branch_at(params: EpidemicParams, gamma: float) -> str:
    """Branch used when scanning: the left limit at gamma = 1."""
    return "maximal" if gamma >= 1.0 and params.p_plus > 0.0 else "minimal"


def gamma_scan(params: EpidemicParams, econ: AgentEconomy, points: int = None) -> GammaScan:
    points = config.GAMMA_GRID if points is None else points
    gammas = np.linspace(0.0, 1.0, points + 1)
    curve = lmf_curve(params, econ, gammas)
    wtp_N = np.array([willingness_to_pay(econ, float(p)) for p in curve.p_N])
    wtp_S = np.array([willingness_to_pay(econ, float(p)) for p in curve.p_S])
    c_left = critical_cost(params, econ, 1.0, _branch_at(params, 1.0))
    return GammaScan(gammas, curve.h, curve.p_N, curve.p_S, curve.c_gamma, wtp_N, wtp_S,
                     c_left, params, econ)


def response_threshold(params: EpidemicParams, econ: AgentEconomy, gamma: float) -> float:
    """
    Critical cost the best-response map compares costs against.

    Below gamma = 1 this is c^gamma on the minimal branch. At gamma = 1 a
    population stays invested when either c^1 or its left limit allows it,
    which matches how find_equilibria reports boundary and limit equilibria.
    """
    threshold = critical_cost(params, econ, gamma)
    if gamma >= 1.0 and params.p_plus > 0.0:
        threshold = max(threshold, critical_cost(params, econ, 1.0, _branch_at(params, 1.0)))
    return threshold


def best_response_map(params: EpidemicParams, econ: AgentEconomy, cost: CostModel,
                      gamma: float, branch: Optional[str] = None) -> float:
    """B(gamma) = P(c <= c^gamma); branch=None uses response_threshold."""
    if branch is None:
        return cost.adoption(response_threshold(params, econ, gamma))
    return cost.adoption(critical_cost(params, econ, gamma, branch))


def social_cost(params: EpidemicParams, econ: AgentEconomy, cost: CostModel,
                gamma: float, branch: str = "minimal") -> float:
    """Per-capita expected cost when the cheapest gamma fraction invests."""
    _check_cost(econ, cost)
    p_N, p_S = loss_probs(params, gamma, branch)
    invest = cost.mean_investor_cost(gamma) + willingness_to_pay(econ, p_S) if gamma > 0 else 0.0
    exposed = willingness_to_pay(econ, p_N) if gamma < 1 else 0.0
    return gamma * invest + (1.0 - gamma) * exposed


def _scan_social(scan: GammaScan, cost: CostModel) -> np.ndarray:
    if isinstance(cost, ConstantCost):
        inv = np.full_like(scan.gammas, cost.c)
    else:
        inv = np.array([cost.mean_investor_cost(float(g)) for g in scan.gammas])
    return scan.gammas * (inv + scan.wtp_S) + (1.0 - scan.gammas) * scan.wtp_N


def _social_optimum(scan: GammaScan, cost: CostModel, extra: Sequence[float] = ()) -> Tuple[float, float]:
    params, econ = scan.params, scan.econ
    values = _scan_social(scan, cost)
    i = int(np.argmin(values))
    best_gamma, best_cost = float(scan.gammas[i]), float(values[i])

    def objective(g):
        return social_cost(params, econ, cost, float(np.clip(g, 0.0, 1.0)))

    candidates = list(extra)
    if 0 < i < len(scan.gammas) - 1:
        try:
            res = minimize_scalar(objective, bracket=tuple(scan.gammas[i - 1:i + 2]), method="golden",
                                  options={"xtol": config.GAMMA_XTOL})
            if 0.0 <= res.x <= 1.0:
                candidates.append(float(res.x))
        except ValueError:
            logger.debug("golden-section refinement skipped: grid minimum is not bracketed")
    for g in candidates:
        value = objective(g)
        if value < best_cost:
            best_gamma, best_cost = float(g), value
    return best_gamma, best_cost


def _make_equilibrium(params, econ, cost, gamma, stability, kind, branch="minimal") -> Equilibrium:
    sol = lmf_solution(params, econ, gamma, branch)
    return Equilibrium(
        gamma=float(gamma),
        h=sol.h,
        p_N=sol.p_N,
        p_S=sol.p_S,
        c_gamma=sol.c_gamma,
        per_capita_cost=social_cost(params, econ, cost, gamma, branch),
        stability=stability,
        kind=kind,
        branch=branch,
    )


def _gap_values(scan: GammaScan, cost: CostModel) -> np.ndarray:
    c_scan = scan.c_scan
    if isinstance(cost, ConstantCost):
        return c_scan - cost.c
    return np.array([cost.adoption(float(t)) for t in c_scan]) - scan.gammas


def _interior_roots(scan: GammaScan, cost: CostModel, gaps: np.ndarray) -> List[Tuple[float, str]]:
    params, econ = scan.params, scan.econ
    grid = scan.gammas

    def gap(g):
        threshold = critical_cost(params, econ, g, _branch_at(params, g))
        if isinstance(cost, ConstantCost):
            return threshold - cost.c
        return cost.adoption(threshold) - g

    # walk the grid; an exact zero on a node is a root, a sign change between nodes is refined with brentq
    roots = []
    signs = np.sign(gaps)
    last = len(grid) - 1
    for i in range(last):
        if 0 < i and signs[i] == 0:
            if signs[i - 1] == 0 and signs[i + 1] == 0:
                continue
            stable = signs[i - 1] > 0 and signs[i + 1] < 0
            roots.append((float(grid[i]), "stable" if stable else "unstable"))
            continue
        if signs[i] * signs[i + 1] >= 0:
            continue
        a, b = float(grid[i]), float(grid[i + 1])
        stable = signs[i] > 0
        # the grid gaps can use c_left at gamma = 1, so recheck the bracket with the exact gap
        ga, gb = gap(a), gap(b)
        if ga * gb < 0:
            root = brentq(gap, a, b, xtol=config.GAMMA_XTOL)
        else:
            root = a if abs(ga) <= abs(gb) else b
        if 0.0 < root < 1.0:
            roots.append((float(root), "stable" if stable else "unstable"))
    return roots


def _dedupe(equilibria: List[Equilibrium]) -> List[Equilibrium]:
    rank = {"boundary": 0, "limit": 1, "interior": 2}
    ordered = sorted(equilibria, key=lambda e: (e.gamma, rank[e.kind]))
    kept: List[Equilibrium] = []
    for eq in ordered:
        if kept and abs(eq.gamma - kept[-1].gamma) < DEDUP_TOL:
            continue
        kept.append(eq)
    return kept


def _price_of_anarchy(equilibria: Sequence[Equilibrium], opt_cost: float, include_unstable: bool) -> float:
    considered = [e for e in equilibria
                  if include_unstable or not (e.kind == "interior" and e.stability == "unstable")]
    worst = max(e.per_capita_cost for e in considered or equilibria)
    if opt_cost <= 0.0:
        return 1.0 if worst <= 0.0 else float("inf")
    return worst / opt_cost


# -- Public operations -------------------------------------------------------

def find_equilibria(params: EpidemicParams, econ: AgentEconomy, cost: CostModel,
                    include_unstable: bool = False, scan: GammaScan = None) -> EquilibriumReport:
    """
    Enumerate symmetric equilibria gamma* = P(c <= c^gamma*).

    Boundary equilibria: gamma = 0 iff nobody wants to invest when nobody
    does, gamma = 1 iff everybody wants to when everybody does. Interior ones
    come from a sign scan of the best-response gap refined with brentq. When
    c^gamma jumps at gamma = 1 a population attracted towards full adoption
    that is not an exact fixed point is reported with kind "limit".
    """
    _check_cost(econ, cost)
    scan = gamma_scan(params, econ) if scan is None else scan
    gaps = _gap_values(scan, cost)
    constant = isinstance(cost, ConstantCost)
    equilibria: List[Equilibrium] = []

    c0, c1 = float(scan.c_gamma[0]), float(scan.c_gamma[-1])
    at_zero = cost.c >= c0 - EXACT_TOL if constant else cost.adoption(c0) <= EXACT_TOL
    if at_zero:
        stable = gaps[0] < 0 or (gaps[0] == 0 and gaps[1] < 0)
        equilibria.append(_make_equilibrium(params, econ, cost, 0.0,
                                            "stable" if stable else "unstable", "boundary"))

    left = gaps[-1] if gaps[-1] != 0 else gaps[-2]
    at_one = cost.c <= c1 + EXACT_TOL if constant else cost.adoption(c1) >= 1.0 - EXACT_TOL
    if at_one:
        equilibria.append(_make_equilibrium(params, econ, cost, 1.0,
                                            "stable" if left > 0 else "unstable", "boundary"))
    elif gaps[-1] >= 0:
        logger.debug("critical cost jumps at gamma=1 (c^1=%.6g, left limit %.6g); adding limit equilibrium",
                     c1, scan.c_left)
        equilibria.append(_make_equilibrium(params, econ, cost, 1.0, "stable", "limit",
                                            _branch_at(params, 1.0)))

    for gamma, stability in _interior_roots(scan, cost, gaps):
        equilibria.append(_make_equilibrium(params, econ, cost, gamma, stability, "interior"))

    equilibria = _dedupe(equilibria)
    if not equilibria:
        raise ConvergenceError("equilibrium scan found no fixed point of the best-response map")

    opt_gamma, opt_cost = _social_optimum(scan, cost, [e.gamma for e in equilibria])
    poa = _price_of_anarchy(equilibria, opt_cost, include_unstable)
    return EquilibriumReport(equilibria, opt_gamma, opt_cost, poa, include_unstable)


def price_of_anarchy_case1(params: EpidemicParams, econ: AgentEconomy, cost: ConstantCost,
                           scan: GammaScan = None) -> float:
    """
    Price of anarchy under strong protection (p- = q- = 0, risk-neutral agents).

    sup over gamma of (equilibrium cost) / (social cost at gamma).
    """
    if not (params.is_strong and econ.is_risk_neutral):
        raise RegimeError("price_of_anarchy_case1 requires p_minus = q_minus = 0 and risk-neutral agents")
    if not isinstance(cost, ConstantCost):
        raise RegimeError("price_of_anarchy_case1 requires a constant cost")
    report = find_equilibria(params, econ, cost, scan=scan)
    eq_cost = max(e.per_capita_cost for e in report.equilibria)
    if report.social_opt_cost <= 0.0:
        return 1.0 if eq_cost <= 0.0 else float("inf")
    return eq_cost / report.social_opt_cost


def price_of_anarchy_case2(params: EpidemicParams, econ: AgentEconomy, cost: ConstantCost,
                           include_unstable: bool = False, scan: GammaScan = None) -> PoaComparison:
    """
    Price of anarchy under weak protection (q+ = q-, risk-neutral agents).

    Returns the worst-equilibrium ratio together with the closed form
    1 v 1(c^0 < c) h(0) l / (c + h(1) l); a RuntimeWarning is issued when
    they differ by more than 1e-6.
    """
    if not (params.is_weak and econ.is_risk_neutral):
        raise RegimeError("price_of_anarchy_case2 requires q_plus = q_minus and risk-neutral agents")
    if not isinstance(cost, ConstantCost):
        raise RegimeError("price_of_anarchy_case2 requires a constant cost")

    report = find_equilibria(params, econ, cost, include_unstable=include_unstable, scan=scan)
    h0 = solve_rde(params, 0.0).h
    h1 = solve_rde(params, 1.0).h
    c0 = critical_cost(params, econ, 0.0)
    formula = 1.0
    if c0 < cost.c:
        denom = cost.c + h1 * econ.loss
        ratio = h0 * econ.loss / denom if denom > 0 else float("inf")
        formula = max(1.0, ratio)

    value = report.price_of_anarchy
    difference = abs(value - formula)
    if difference > POA_WARN_TOL:
        warnings.warn(
            f"closed-form price of anarchy {formula:.9g} differs from the equilibrium ratio "
            f"{value:.9g} at c={cost.c}",
            RuntimeWarning,
            stacklevel=2,
        )
    return PoaComparison(value=value, formula=formula, difference=difference)


def best_response_dynamics(params: EpidemicParams, econ: AgentEconomy, cost: CostModel,
                           gamma0: float, max_steps: int = None) -> DynamicsResult:
    """Iterate gamma_{t+1} = P(c <= c^gamma_t) until it settles or cycles."""
    if not 0.0 <= gamma0 <= 1.0:
        raise DomainError(f"gamma0 must lie in [0, 1] (got {gamma0})")
    _check_cost(econ, cost)
    max_steps = config.DYNAMICS_MAX_STEPS if max_steps is None else max_steps
    tol = config.DYNAMICS_TOL

    trajectory = [float(gamma0)]
    for _ in range(max_steps):
        current = trajectory[-1]
        nxt = best_response_map(params, econ, cost, current)
        trajectory.append(nxt)
        if abs(nxt - current) < tol:
            return DynamicsResult(tuple(trajectory), True)
        if len(trajectory) >= 3 and abs(nxt - trajectory[-3]) < tol:
            logger.info("best-response dynamics entered a 2-cycle between %.6g and %.6g", current, nxt)
            return DynamicsResult(tuple(trajectory), False, (current, nxt))

    logger.info("best-response dynamics did not settle within %d steps", max_steps)
    return DynamicsResult(tuple(trajectory), False)


def tipping_threshold(params: EpidemicParams, econ: AgentEconomy, cost: CostModel,
                      report: EquilibriumReport = None) -> Optional[float]:
    """
    Smallest seeded adoption from which the dynamics reach the highest stable
    equilibrium. A limit equilibrium at gamma = 1 counts as a target.
    """
    report = find_equilibria(params, econ, cost) if report is None else report
    stable = report.gammas("stable")
    if len(stable) < 2:
        return None
    target = max(stable)

    def reaches(gamma0: float) -> bool:
        result = best_response_dynamics(params, econ, cost, gamma0)
        return result.converged and abs(result.limit - target) < 1e-6

    if reaches(0.0):
        return None
    lo, hi = 0.0, target
    # bisect on the seed: below lo the dynamics settle elsewhere, from hi they reach the target
    while hi - lo > config.TIPPING_TOL:
        mid = 0.5 * (lo + hi)
        if reaches(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _adoption_rows(params: EpidemicParams, econ: AgentEconomy, q_minus: float,
                   cost_grid: Sequence[float], include_unstable: bool) -> List[dict]:
    cell_params = params.replace(q_minus=q_minus)
    scan = gamma_scan(cell_params, econ)
    rows = []
    for ratio in cost_grid:
        cost = ConstantCost(float(ratio) * econ.loss, econ.loss)
        report = find_equilibria(cell_params, econ, cost, include_unstable=include_unstable, scan=scan)
        for eq in report.equilibria:
            rows.append({
                "q_minus": q_minus,
                "cost_ratio": float(ratio),
                "gamma": eq.gamma,
                "stability": eq.stability,
                "kind": eq.kind,
                "p_N": eq.p_N,
                "p_S": eq.p_S,
                "social_cost": eq.per_capita_cost,
                "poa": report.price_of_anarchy,
            })
    return rows


def adoption_curve(params_base: EpidemicParams, econ: AgentEconomy, q_minus_values: Sequence[float],
                   cost_grid: Sequence[float], include_unstable: bool = False,
                   max_workers: int = None) -> pd.DataFrame:
    """All equilibrium adoption levels for each (q-, c / l) cell."""
    for q in q_minus_values:
        if not 0.0 <= q <= params_base.q_plus:
            raise DomainError(f"q_minus values must lie in [0, q_plus={params_base.q_plus}] (got {q})")
    workers = config.MAX_WORKERS if max_workers is None else max_workers
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        futures = [executor.submit(_adoption_rows, params_base, econ, float(q), cost_grid, include_unstable)
                   for q in q_minus_values]
        rows = [row for future in futures for row in future.result()]
    columns = ["q_minus", "cost_ratio", "gamma", "stability", "kind", "p_N", "p_S", "social_cost", "poa"]
    return pd.DataFrame(rows, columns=columns)


def max_stable_adoption(table: pd.DataFrame) -> pd.DataFrame:
    """Highest stable equilibrium per (q_minus, cost_ratio) cell of an adoption table."""
    stable = table[table["stability"] == "stable"]
    return stable.groupby(["q_minus", "cost_ratio"], as_index=False)["gamma"].max()

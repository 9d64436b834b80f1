"""
Local mean field solver.

Solves the fixed point h = f(h, gamma) for the probability that a node is
infected from below in the limiting Galton-Watson tree, and derives the
root-level loss probabilities p_N, p_S and the critical investment cost.
"""
import dataclasses
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from .. import config
from ..errors import ConvergenceError, DomainError
from .dist import DegreeDist, Regular, size_biased
from .econ import AgentEconomy, invest_threshold

logger = logging.getLogger(__name__)

BRANCHES = ("minimal", "maximal")


@dataclass(frozen=True)
class EpidemicParams:
    """Direct-loss (p) and contagion (q) probabilities for the N (+) and S (-) states."""

    p_plus: float
    p_minus: float
    q_plus: float
    q_minus: float
    degree: DegreeDist = Regular(0)

    def __post_init__(self):
        for name in ("p_plus", "p_minus", "q_plus", "q_minus"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1] (got {value})")
        if self.p_minus > self.p_plus:
            raise DomainError(f"p_minus must not exceed p_plus (got {self.p_minus} > {self.p_plus})")
        if self.q_minus > self.q_plus:
            raise DomainError(f"q_minus must not exceed q_plus (got {self.q_minus} > {self.q_plus})")

    @property
    def offspring(self) -> DegreeDist:
        if self.degree.mean() <= 0:
            return Regular(0)
        return size_biased(self.degree)

    @property
    def is_strong(self) -> bool:
        """Investment gives immunity (p- = q- = 0)."""
        return self.p_minus == 0.0 and self.q_minus == 0.0

    @property
    def is_weak(self) -> bool:
        """Investment only lowers the direct loss (q+ = q-)."""
        return self.q_plus == self.q_minus

    def replace(self, **changes) -> "EpidemicParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "p_plus": self.p_plus,
            "p_minus": self.p_minus,
            "q_plus": self.q_plus,
            "q_minus": self.q_minus,
            "degree": self.degree.to_dict(),
        }


@dataclass(frozen=True)
class RdeSolution:
    h: float
    degenerate: bool
    iterations: int
    method: str


@dataclass(frozen=True)
class LmfSolution:
    gamma: float
    h: float
    p_N: float
    p_S: float
    c_gamma: float
    degenerate: bool = False
    branch: str = "minimal"

    @property
    def mean_loss(self) -> float:
        """Average probability of loss gamma p_S + (1 - gamma) p_N."""
        return self.gamma * self.p_S + (1.0 - self.gamma) * self.p_N

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["mean_loss"] = self.mean_loss
        return data


@dataclass(frozen=True)
class LmfCurve:
    gammas: np.ndarray
    h: np.ndarray
    p_N: np.ndarray
    p_S: np.ndarray
    c_gamma: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "gamma": self.gammas,
            "h": self.h,
            "p_N": self.p_N,
            "p_S": self.p_S,
            "c_gamma": self.c_gamma,
        })


def _check_gamma(gamma) -> None:
    g = np.asarray(gamma, dtype=float)
    if np.any(np.isnan(g)) or np.any(g < 0.0) or np.any(g > 1.0):
        raise DomainError(f"gamma must lie in [0, 1] (got {gamma})")


def _check_branch(branch: str) -> None:
    if branch not in BRANCHES:
        raise DomainError(f"branch must be one of {BRANCHES} (got {branch!r})")


def seed_probability(params: EpidemicParams, gamma):
    """f(0, gamma) = gamma p- + (1 - gamma) p+, the chance of a direct loss."""
    gamma = np.asarray(gamma, dtype=float)
    return (gamma * params.p_minus + (1.0 - gamma) * params.p_plus)[()]


def rde_map(params: EpidemicParams, x, gamma):
    """f(x, gamma) = 1 - gamma (1-p-) G*(1 - q- x) - (1-gamma)(1-p+) G*(1 - q+ x)."""
    x = np.asarray(x, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    g_star = params.offspring.pgf
    return (1.0
            - gamma * (1.0 - params.p_minus) * g_star(1.0 - params.q_minus * x)
            - (1.0 - gamma) * (1.0 - params.p_plus) * g_star(1.0 - params.q_plus * x))[()]


def _bracketed_root(params: EpidemicParams, gamma: float, upper: float, lower: float = 0.0) -> float:
    def gap(x):
        return rde_map(params, x, gamma) - x

    return float(brentq(gap, lower, upper, xtol=config.RDE_TOL))


def solve_rde(params: EpidemicParams, gamma: float, branch: str = "minimal") -> RdeSolution:
    """
    Solve h = f(h, gamma).

    With f(0, gamma) > 0 the solution is unique. Otherwise 0 is a fixed point:
    the minimal branch returns it (flagged degenerate) and the maximal branch
    returns the largest fixed point, which is the left limit at gamma = 1.
    """
    _check_gamma(gamma)
    _check_branch(branch)
    gamma = float(gamma)
    degenerate = seed_probability(params, gamma) == 0.0

    if degenerate and branch == "minimal":
        logger.debug("no direct losses at gamma=%s; returning h=0", gamma)
        return RdeSolution(0.0, True, 0, "degenerate")

    # f is non-decreasing with f(1) <= 1, so iterating from 1 decreases monotonically
    # onto the largest fixed point
    x = 1.0
    for it in range(1, config.RDE_MAX_ITER + 1):
        x_new = float(rde_map(params, x, gamma))
        if abs(x_new - x) < config.RDE_TOL:
            return RdeSolution(x_new, degenerate, it, "iteration")
        x = x_new

    # slow convergence near criticality: bracket the root below the last iterate
    logger.info("fixed-point iteration stalled at gamma=%s (x=%.6g); falling back to brentq", gamma, x)
    lower = 0.0
    if degenerate:
        # keep brentq off the trivial root at 0
        lower = 1e-12
        if rde_map(params, lower, gamma) - lower <= 0:
            return RdeSolution(0.0, True, config.RDE_MAX_ITER, "iteration")
    try:
        h = _bracketed_root(params, gamma, x, lower)
    except ValueError as exc:
        raise ConvergenceError(f"RDE root not bracketed in [{lower}, {x}] at gamma={gamma}") from exc
    return RdeSolution(h, degenerate, config.RDE_MAX_ITER, "brentq")


def iterate_rde(params: EpidemicParams, gamma: float, depth: int) -> float:
    """Apply f(., gamma) depth times starting from f(0, gamma)."""
    _check_gamma(gamma)
    if depth < 0:
        raise DomainError(f"depth must be >= 0 (got {depth})")
    x = float(seed_probability(params, gamma))
    for _ in range(depth):
        x = float(rde_map(params, x, gamma))
    return x


def loss_probs(params: EpidemicParams, gamma: float, branch: str = "minimal",
               h: float = None) -> Tuple[float, float]:
    """Root loss probabilities (p_N, p_S); the root degree follows P, not P*."""
    if h is None:
        h = solve_rde(params, gamma, branch).h
    g_root = params.degree.pgf
    p_N = 1.0 - (1.0 - params.p_plus) * float(g_root(1.0 - params.q_plus * h))
    p_S = 1.0 - (1.0 - params.p_minus) * float(g_root(1.0 - params.q_minus * h))
    return p_N, min(p_S, p_N)


def critical_cost(params: EpidemicParams, econ: AgentEconomy, gamma: float,
                  branch: str = "minimal") -> float:
    """c^gamma = (p_N - p_S) l + pi[p_N] - pi[p_S]."""
    p_N, p_S = loss_probs(params, gamma, branch)
    return invest_threshold(econ, p_N, p_S)


def lmf_solution(params: EpidemicParams, econ: AgentEconomy, gamma: float,
                 branch: str = "minimal") -> LmfSolution:
    rde = solve_rde(params, gamma, branch)
    p_N, p_S = loss_probs(params, gamma, branch, h=rde.h)
    return LmfSolution(
        gamma=float(gamma),
        h=rde.h,
        p_N=p_N,
        p_S=p_S,
        c_gamma=invest_threshold(econ, p_N, p_S),
        degenerate=rde.degenerate,
        branch=branch,
    )


def solve_rde_grid(params: EpidemicParams, gammas: Sequence[float], branch: str = "minimal") -> np.ndarray:
    """Vectorized solve_rde over an array of gamma values."""
    gammas = np.asarray(gammas, dtype=float)
    _check_gamma(gammas)
    _check_branch(branch)

    h = np.ones_like(gammas)
    active = np.ones(gammas.shape, dtype=bool)
    degenerate = seed_probability(params, gammas) == 0.0
    if branch == "minimal":
        h[degenerate] = 0.0
        active &= ~degenerate

    for _ in range(config.RDE_MAX_ITER):
        if not active.any():
            break
        x = h[active]
        x_new = rde_map(params, x, gammas[active])
        h[active] = x_new
        done = np.abs(x_new - x) < config.RDE_TOL
        idx = np.flatnonzero(active)
        active[idx[done]] = False

    for i in np.flatnonzero(active):
        h[i] = solve_rde(params, float(gammas[i]), branch).h
    return h


def lmf_curve(params: EpidemicParams, econ: AgentEconomy, gammas: Sequence[float],
              branch: str = "minimal") -> LmfCurve:
    gammas = np.asarray(gammas, dtype=float)
    h = solve_rde_grid(params, gammas, branch)
    g_root = params.degree.pgf
    p_N = 1.0 - (1.0 - params.p_plus) * np.asarray(g_root(1.0 - params.q_plus * h))
    p_S = 1.0 - (1.0 - params.p_minus) * np.asarray(g_root(1.0 - params.q_minus * h))
    p_S = np.minimum(p_S, p_N)
    c_gamma = np.array([invest_threshold(econ, float(n), float(s)) for n, s in zip(p_N, p_S)])
    return LmfCurve(gammas=gammas, h=h, p_N=p_N, p_S=p_S, c_gamma=c_gamma)

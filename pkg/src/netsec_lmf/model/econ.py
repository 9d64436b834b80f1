"""
Expected-utility agent model: utilities, willingness to pay, risk premium
and the self-protection investment threshold.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import bisect

from .. import config
from ..errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)


class Utility(ABC):
    """Strictly increasing, concave utility u defined on (domain_min, inf)."""

    kind: str = ""

    @property
    def domain_min(self) -> float:
        return -np.inf

    @abstractmethod
    def u(self, x):
        ...

    def wtp_closed_form(self, wealth: float, loss: float, p: float) -> Optional[float]:
        """Closed-form willingness to pay, or None when only the numeric path applies."""
        return None

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class RiskNeutral(Utility):
    kind = "risk_neutral"

    def u(self, x):
        return np.asarray(x, dtype=float)[()]

    def wtp_closed_form(self, wealth, loss, p):
        return p * loss


@dataclass(frozen=True)
class CARA(Utility):
    """u(x) = -exp(-a x) / a."""

    a: float
    kind = "cara"

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"CARA absolute risk aversion must be > 0 (got {self.a})")

    def u(self, x):
        return (-np.exp(-self.a * np.asarray(x, dtype=float)) / self.a)[()]

    def wtp_closed_form(self, wealth, loss, p):
        # independent of wealth: m = ln(p e^{a l} + 1 - p) / a
        return float(np.log1p(p * np.expm1(self.a * loss)) / self.a)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a}


@dataclass(frozen=True)
class LogUtility(Utility):
    """u(x) = ln(x + shift), defined for x > -shift."""

    shift: float = 0.0
    kind = "log"

    @property
    def domain_min(self) -> float:
        return -self.shift

    def u(self, x):
        return np.log(np.asarray(x, dtype=float) + self.shift)[()]

    def to_dict(self):
        return {"kind": self.kind, "shift": self.shift}


@dataclass(frozen=True)
class CRRA(Utility):
    """u(x) = x^(1-rho) / (1-rho) on x > 0."""

    rho: float
    kind = "crra"

    def __post_init__(self):
        if self.rho < 0 or self.rho == 1:
            raise DomainError(f"CRRA relative risk aversion must be >= 0 and != 1 (got {self.rho})")

    @property
    def domain_min(self) -> float:
        return 0.0

    def u(self, x):
        x = np.asarray(x, dtype=float)
        return (x ** (1.0 - self.rho) / (1.0 - self.rho))[()]

    def to_dict(self):
        return {"kind": self.kind, "rho": self.rho}


@dataclass(frozen=True)
class AgentEconomy:
    utility: Utility = field(default_factory=RiskNeutral)
    wealth: float = 1.0
    loss: float = 1.0
    cost: float = 0.0

    def __post_init__(self):
        if self.loss < 0:
            raise DomainError(f"loss must be >= 0 (got {self.loss})")
        if not 0 <= self.cost <= self.loss:
            raise DomainError(f"cost must satisfy 0 <= c <= loss (got c={self.cost}, loss={self.loss})")
        if not self.wealth - self.loss - self.cost > self.utility.domain_min:
            raise DomainError(
                f"wealth - loss - cost = {self.wealth - self.loss - self.cost} "
                f"leaves the {self.utility.kind} utility domain (> {self.utility.domain_min})"
            )

    @property
    def is_risk_neutral(self) -> bool:
        return isinstance(self.utility, RiskNeutral)


def _check_probability(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1] (got {p})")


def willingness_to_pay(econ: AgentEconomy, p: float, closed_form: bool = True) -> float:
    """Amount m solving p u[w - l] + (1 - p) u[w] = u[w - m]."""
    _check_probability("p", p)
    w, loss, utility = econ.wealth, econ.loss, econ.utility
    if p == 0.0 or loss == 0.0:
        return 0.0
    if p == 1.0:
        return float(loss)

    if closed_form:
        m = utility.wtp_closed_form(w, loss, p)
        if m is not None:
            return float(m)

    target = p * utility.u(w - loss) + (1.0 - p) * utility.u(w)

    def gap(m):
        return utility.u(w - m) - target

    lo, hi = gap(0.0), gap(loss)
    if lo == 0.0:
        return 0.0
    if hi == 0.0:
        return float(loss)
    if lo * hi > 0:
        raise ConvergenceError(
            f"no willingness-to-pay root in [0, {loss}] for p={p} ({utility.kind} utility)"
        )
    m, result = bisect(gap, 0.0, loss, xtol=config.WTP_XTOL, maxiter=config.WTP_MAX_ITER,
                       full_output=True, disp=False)
    if not result.converged:
        raise ConvergenceError(f"willingness-to-pay bisection did not converge for p={p}: {result.flag}")
    logger.debug("wtp(%s) = %.12g after %d bisection steps", p, m, result.iterations)
    return float(m)


def risk_premium(econ: AgentEconomy, p: float, closed_form: bool = True) -> float:
    """pi[p] = m - p l, non-negative for concave utilities."""
    return max(0.0, willingness_to_pay(econ, p, closed_form) - p * econ.loss)


def invest_threshold(econ: AgentEconomy, pN: float, pS: float, closed_form: bool = True) -> float:
    """(pN - pS) l + pi[pN] - pi[pS]; an agent invests iff its cost is strictly below."""
    _check_probability("pN", pN)
    _check_probability("pS", pS)
    if pS > pN + 1e-12:
        raise DomainError(f"loss probability with protection exceeds the one without (pS={pS} > pN={pN})")
    pS = min(pS, pN)
    if pS == pN:
        return 0.0
    return ((pN - pS) * econ.loss
            + risk_premium(econ, pN, closed_form)
            - risk_premium(econ, pS, closed_form))


def best_response(econ: AgentEconomy, pN: float, pS: float) -> bool:
    """True when investing is optimal for an agent with cost econ.cost."""
    return econ.cost < invest_threshold(econ, pN, pS)

"""
Degree distributions, probability generating functions and the size-biased
offspring law used by the branching-process approximation.
"""
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import stats

from .. import config
from ..errors import DomainError

ArrayLike = Union[float, np.ndarray]


class DegreeDist(ABC):
    """Interface shared by every degree law (immutable once built)."""

    kind: str = ""

    @abstractmethod
    def mean(self) -> float:
        """Mean degree."""

    @abstractmethod
    def pgf(self, x: ArrayLike) -> ArrayLike:
        """E[x^N]."""

    @abstractmethod
    def pgf_prime(self, x: ArrayLike) -> ArrayLike:
        """d/dx E[x^N]."""

    @abstractmethod
    def pmf(self, k: ArrayLike) -> ArrayLike:
        """P(N = k)."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw `size` i.i.d. degrees."""

    @abstractmethod
    def size_biased(self) -> "DegreeDist":
        """Offspring law P*(d-1) = d P(d) / sum d P(d)."""

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class Poisson(DegreeDist):
    lam: float
    kind = "poisson"

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise DomainError(f"Poisson mean must be > 0 (got {self.lam})")

    def mean(self) -> float:
        return float(self.lam)

    def pgf(self, x):
        return np.exp(self.lam * (np.asarray(x, dtype=float) - 1.0))[()]

    def pgf_prime(self, x):
        return self.lam * self.pgf(x)

    def pmf(self, k):
        return stats.poisson.pmf(k, self.lam)

    def sample(self, rng, size):
        return rng.poisson(self.lam, size=size)

    def size_biased(self):
        # Poisson is its own size-biased offspring law
        return self

    def to_dict(self):
        return {"kind": self.kind, "lambda": self.lam}


@dataclass(frozen=True)
class Regular(DegreeDist):
    degree: int
    kind = "regular"

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise DomainError(f"Regular degree must be a non-negative integer (got {self.degree})")
        object.__setattr__(self, "degree", int(self.degree))

    def mean(self) -> float:
        return float(self.degree)

    def pgf(self, x):
        return (np.asarray(x, dtype=float) ** self.degree)[()]

    def pgf_prime(self, x):
        x = np.asarray(x, dtype=float)
        if self.degree == 0:
            return np.zeros_like(x)[()]
        return (self.degree * x ** (self.degree - 1))[()]

    def pmf(self, k):
        return (np.asarray(k) == self.degree).astype(float)[()]

    def sample(self, rng, size):
        return np.full(size, self.degree, dtype=np.int64)

    def size_biased(self):
        return Regular(self.degree - 1)

    def to_dict(self):
        return {"kind": self.kind, "degree": self.degree}


@dataclass(frozen=True)
class NegativeBinomial(DegreeDist):
    """Failures before the r-th success, P(k) = C(k+r-1, k) p^r (1-p)^k."""

    r: float
    p: float
    kind = "negative_binomial"

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"negative binomial r must be > 0 (got {self.r})")
        if not 0 < self.p <= 1:
            raise DomainError(f"negative binomial p must lie in (0, 1] (got {self.p})")

    def mean(self) -> float:
        return float(self.r * (1 - self.p) / self.p)

    def _ratio(self, x):
        return self.p / (1.0 - (1.0 - self.p) * np.asarray(x, dtype=float))

    def pgf(self, x):
        return (self._ratio(x) ** self.r)[()]

    def pgf_prime(self, x):
        return (self.r * (1 - self.p) / self.p * self._ratio(x) ** (self.r + 1))[()]

    def pmf(self, k):
        return stats.nbinom.pmf(k, self.r, self.p)

    def sample(self, rng, size):
        return rng.negative_binomial(self.r, self.p, size=size)

    def size_biased(self):
        return NegativeBinomial(self.r + 1, self.p)

    def to_dict(self):
        return {"kind": self.kind, "r": self.r, "p": self.p}


@dataclass(frozen=True)
class Geometric(DegreeDist):
    """Geometric law on {0, 1, 2, ...} with success probability p."""

    p: float
    kind = "geometric"

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise DomainError(f"geometric success probability must lie in (0, 1] (got {self.p})")

    @property
    def _nb(self) -> NegativeBinomial:
        return NegativeBinomial(1, self.p)

    def mean(self) -> float:
        return self._nb.mean()

    def pgf(self, x):
        return self._nb.pgf(x)

    def pgf_prime(self, x):
        return self._nb.pgf_prime(x)

    def pmf(self, k):
        return stats.geom.pmf(np.asarray(k) + 1, self.p)

    def sample(self, rng, size):
        return rng.geometric(self.p, size=size) - 1

    def size_biased(self):
        return NegativeBinomial(2, self.p)

    def to_dict(self):
        return {"kind": self.kind, "p": self.p}


@dataclass(frozen=True)
class Empirical(DegreeDist):
    """Explicit probability vector over degrees 0..d_max."""

    probs: Tuple[float, ...]
    kind = "empirical"

    def __post_init__(self):
        probs = tuple(float(v) for v in self.probs)
        if not probs:
            raise DomainError("empirical distribution needs at least one probability")
        if any(v < 0 or not np.isfinite(v) for v in probs):
            raise DomainError("empirical probabilities must be finite and non-negative")
        total = float(np.sum(probs))
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"empirical probabilities must sum to 1 (got {total!r})")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_weights(cls, weights: Sequence[float], d_max: int = None) -> "Empirical":
        """Normalize non-negative weights, truncating the support at d_max."""
        d_max = config.D_MAX if d_max is None else d_max
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be a non-empty vector of finite non-negative numbers")
        if w.sum() <= 0:
            raise DomainError("weights must not all be zero")
        probs = w / w.sum()
        if probs.size > d_max + 1:
            tail = float(probs[d_max + 1:].sum())
            probs = probs[:d_max + 1]
            if tail > config.TAIL_WARN_MASS:
                warnings.warn(
                    f"empirical degree law truncated at d_max={d_max}; dropped tail mass {tail:.3g}",
                    RuntimeWarning,
                    stacklevel=2,
                )
            probs = probs / probs.sum()
        return cls(tuple(probs))

    @property
    def d_max(self) -> int:
        return len(self.probs) - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probs)), self.probs))

    def pgf(self, x):
        return npoly.polyval(np.asarray(x, dtype=float), self.probs)[()]

    def pgf_prime(self, x):
        if len(self.probs) == 1:
            return np.zeros_like(np.asarray(x, dtype=float))[()]
        return npoly.polyval(np.asarray(x, dtype=float), npoly.polyder(self.probs))[()]

    def pmf(self, k):
        k = np.asarray(k)
        inside = (k >= 0) & (k <= self.d_max)
        table = np.asarray(self.probs)
        return np.where(inside, table[np.clip(k, 0, self.d_max)], 0.0)[()]

    def sample(self, rng, size):
        return rng.choice(len(self.probs), size=size, p=self.probs)

    def size_biased(self):
        k = np.arange(1, len(self.probs))
        weighted = k * np.asarray(self.probs[1:])
        return Empirical(tuple(weighted / weighted.sum()))

    def to_dict(self):
        return {"kind": self.kind, "probs": list(self.probs)}


def _check_unit_interval(x: ArrayLike) -> None:
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"generating function argument must lie in [0, 1] (got {x})")


def gen_fn(dist: DegreeDist, x: ArrayLike) -> ArrayLike:
    """Evaluate G_N(x) = E[x^N] for x in [0, 1]."""
    _check_unit_interval(x)
    return dist.pgf(x)


def gen_fn_prime(dist: DegreeDist, x: ArrayLike) -> ArrayLike:
    """Analytic derivative of the generating function."""
    _check_unit_interval(x)
    return dist.pgf_prime(x)


def size_biased(dist: DegreeDist) -> DegreeDist:
    """Offspring law of a node reached by following a random edge."""
    if mean_degree(dist) <= 0:
        raise DomainError("size-biasing is undefined for a distribution with mean degree 0")
    return dist.size_biased()


def mean_degree(dist: DegreeDist) -> float:
    return dist.mean()

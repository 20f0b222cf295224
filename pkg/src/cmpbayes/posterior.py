"""Log posteriors for any prior spec, and posterior propriety where decidable.

The likelihood depends on the data only through (n, S1, S2) with
S1 = sum(x_i) and S2 = sum(ln x_i!), so posteriors are assembled from
SufficientStats. Under a conjugate prior the posterior is the conjugate
kernel with hyperparameters shifted to (a + S1, b + S2, c + n); under the
flat prior the posterior kernel is the conjugate kernel at (S1, S2, n),
which is proper exactly when those values satisfy the conjugate propriety
condition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import gammaln

from .core import CmpParams, TruncationPolicy, DEFAULT_POLICY, log_likelihood
from .errors import EmptyDataError, InvalidParamsError
from .priors import ConjugateHyper, PriorSpec, conjugate_propriety, log_prior_density


@dataclass(frozen=True)
class SufficientStats:
    """(n, S1, S2) summarizing a count dataset.

    n = 0 is the explicit empty-data state (used to sample a prior as if it
    were a posterior); build it with SufficientStats.empty().
    """

    n: int
    s1: int
    s2: float

    def __post_init__(self):
        if self.n < 0 or self.s1 < 0 or self.s2 < 0.0:
            raise InvalidParamsError("sufficient statistics must be nonnegative")
        if self.n == 0 and (self.s1 != 0 or self.s2 != 0.0):
            raise InvalidParamsError("empty data must have s1 = 0 and s2 = 0")

    @classmethod
    def empty(cls) -> "SufficientStats":
        return cls(n=0, s1=0, s2=0.0)

    @property
    def xbar(self) -> float:
        return self.s1 / self.n if self.n > 0 else 0.0

    @property
    def mean_lnfact(self) -> float:
        return self.s2 / self.n if self.n > 0 else 0.0


def sufficient_stats(data: Iterable[int]) -> SufficientStats:
    """Exact (n, S1, S2) for a sequence of nonnegative integer counts."""
    x = np.asarray(list(data))
    if x.size == 0:
        raise EmptyDataError("dataset is empty")
    if not np.issubdtype(x.dtype, np.integer):
        if not np.all(x == np.floor(x)):
            raise InvalidParamsError("counts must be integers")
        x = x.astype(np.int64)
    if (x < 0).any():
        raise InvalidParamsError("counts must be nonnegative")
    return SufficientStats(
        n=int(x.size),
        s1=int(x.sum()),
        s2=float(gammaln(x + 1.0).sum()),
    )


def log_posterior(
    spec: PriorSpec,
    stats: SufficientStats,
    params: CmpParams,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> float:
    """Unnormalized log posterior: log prior density plus log likelihood."""
    return log_prior_density(spec, params, policy) + log_likelihood(stats, params, policy)


def flat_posterior_propriety(stats: SufficientStats) -> bool:
    """Whether the flat-prior posterior for this data is proper.

    Requires n, S1, S2 all positive (some observation must exceed 1) and the
    conjugate propriety condition to hold at (S1, S2, n), i.e.
    mean(ln x!) > ln(floor(xbar)!) + (xbar - floor(xbar)) * ln(floor(xbar)+1).
    """
    if stats.n <= 0 or stats.s1 <= 0 or stats.s2 <= 0.0:
        return False
    return conjugate_propriety(ConjugateHyper(float(stats.s1), stats.s2, float(stats.n)))


def updated_hyper(hyper: ConjugateHyper, stats: SufficientStats) -> ConjugateHyper:
    """Posterior hyperparameters (a + S1, b + S2, c + n) under conjugacy."""
    return ConjugateHyper(hyper.a + stats.s1, hyper.b + stats.s2, hyper.c + stats.n)

"""Numerically stable evaluation of the CMP normalizing series and its derivatives.

The CMP(lambda, nu) distribution has pmf

    P(X = x) = lambda^x / ((x!)^nu * Z(lambda, nu)),   x = 0, 1, 2, ...

with normalizing function Z(lambda, nu) = sum_j lambda^j / (j!)^nu. The series
has no closed form in general, so everything here works with a truncated grid
of log-domain terms

    t_j = j*ln(lambda) - nu*lnGamma(j + 1),

summed by log-sum-exp. Moments and the partial derivatives of ln Z reuse the
same grid, which keeps ln Z and the expectations self-consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InvalidParamsError, TruncationError


@dataclass(frozen=True)
class CmpParams:
    """Parameter pair (lambda, nu) locating a CMP distribution.

    nu = 1 is Poisson(lambda); nu = 0 is Geometric(p = 1 - lambda), which only
    defines a distribution for lambda < 1; nu -> infinity approaches
    Bernoulli(p = lambda / (1 + lambda)).
    """

    lam: float
    nu: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise InvalidParamsError(f"lambda must be positive and finite, got {self.lam}")
        if not (math.isfinite(self.nu) and self.nu >= 0.0):
            raise InvalidParamsError(f"nu must be nonnegative and finite, got {self.nu}")
        if self.nu == 0.0 and self.lam >= 1.0:
            raise InvalidParamsError(
                f"nu = 0 requires lambda < 1 (geometric case), got lambda = {self.lam}"
            )


@dataclass(frozen=True)
class TruncationPolicy:
    """Controls how many series terms are used when evaluating Z(lambda, nu).

    The grid starts at base_terms and doubles until the terms are decaying and
    a geometric bound on the omitted tail, term * r / (1 - r) with r the last
    consecutive-term ratio, falls below tail_tol relative to the partial sum.
    (Term ratios lambda / (j+1)^nu decrease in j, so the bound is valid.)
    Hitting max_terms first raises TruncationError.
    """

    base_terms: int = 101
    tail_tol: float = 1e-10
    max_terms: int = 10_000

    def __post_init__(self):
        if self.base_terms < 2:
            raise InvalidParamsError(f"base_terms must be >= 2, got {self.base_terms}")
        if self.max_terms < self.base_terms:
            raise InvalidParamsError("max_terms must be >= base_terms")
        if not (math.isfinite(self.tail_tol) and self.tail_tol > 0.0):
            raise InvalidParamsError(f"tail_tol must be positive, got {self.tail_tol}")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True)
class CmpMoments:
    """Expectations of X ~ CMP(lambda, nu) needed by the information matrix.

    e_x:        E(X)
    e_x2:       E(X^2)
    e_lnfact:   E(ln X!)
    e_lnfact2:  E((ln X!)^2)
    e_x_lnfact: E(X * ln X!)
    """

    e_x: float
    e_x2: float
    e_lnfact: float
    e_lnfact2: float
    e_x_lnfact: float

    @property
    def var_x(self) -> float:
        return self.e_x2 - self.e_x**2

    @property
    def var_lnfact(self) -> float:
        return self.e_lnfact2 - self.e_lnfact**2

    @property
    def cov_x_lnfact(self) -> float:
        return self.e_x_lnfact - self.e_x * self.e_lnfact


@dataclass(frozen=True)
class LogZDerivatives:
    """First and second partial derivatives of ln Z(lambda, nu)."""

    d_lam: float
    d_nu: float
    d2_lam2: float
    d2_nu2: float
    d2_lam_nu: float


def _log_terms(params: CmpParams, k: int) -> np.ndarray:
    j = np.arange(k, dtype=np.float64)
    return j * math.log(params.lam) - params.nu * gammaln(j + 1.0)


def _series(params: CmpParams, policy: TruncationPolicy) -> tuple[np.ndarray, float]:
    """Adaptively truncated log-term grid and its log-sum-exp.

    Returns (t, log_z) where t has the final grid length K.
    """
    log_tol = math.log(policy.tail_tol)
    k = min(policy.base_terms, policy.max_terms)
    while True:
        t = _log_terms(params, k)
        m = float(t.max())
        log_z = m + math.log(float(np.exp(t - m).sum()))
        last = float(t[-1])
        prev = float(t[-2])
        if last < prev:
            log_r = last - prev
            r = math.exp(log_r)
            if r < 1.0:
                # tail <= term_{K-1} * r / (1 - r); ratios only shrink with j
                log_tail_bound = (last - log_z) + log_r - math.log1p(-r)
                if log_tail_bound < log_tol:
                    return t, log_z
        if k >= policy.max_terms:
            raise TruncationError(
                f"normalizing series for (lambda={params.lam}, nu={params.nu}) did not "
                f"converge within {policy.max_terms} terms (tail_tol={policy.tail_tol})"
            )
        k = min(2 * k, policy.max_terms)


def log_normalizer(params: CmpParams, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """ln Z(lambda, nu) via log-sum-exp over the adaptive truncation grid."""
    _, log_z = _series(params, policy)
    return log_z


def log_pmf(x: int, params: CmpParams, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """ln P(X = x) = x*ln(lambda) - nu*lnGamma(x+1) - ln Z."""
    if x < 0 or x != int(x):
        raise InvalidParamsError(f"x must be a nonnegative integer, got {x}")
    return float(
        x * math.log(params.lam)
        - params.nu * gammaln(x + 1.0)
        - log_normalizer(params, policy)
    )


def pmf_table(params: CmpParams, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """P(X = j) for j = 0 .. K-1 on the truncation grid (sums to 1 - tail)."""
    t, log_z = _series(params, policy)
    return np.exp(t - log_z)


def log_likelihood(stats, params: CmpParams, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Log likelihood S1*ln(lambda) - nu*S2 - n*ln Z from sufficient statistics.

    stats needs fields (n, s1, s2); n = 0 (empty data) gives 0.
    """
    if stats.n == 0:
        return 0.0
    return float(
        stats.s1 * math.log(params.lam)
        - params.nu * stats.s2
        - stats.n * log_normalizer(params, policy)
    )


def moments(params: CmpParams, policy: TruncationPolicy = DEFAULT_POLICY) -> CmpMoments:
    """Probability-weighted truncated sums for the moments in CmpMoments.

    Each expectation is sum_j g(j) * exp(t_j - ln Z) over the same grid as
    log_normalizer.
    """
    t, log_z = _series(params, policy)
    w = np.exp(t - log_z)
    j = np.arange(t.size, dtype=np.float64)
    g = gammaln(j + 1.0)
    return CmpMoments(
        e_x=float((j * w).sum()),
        e_x2=float((j * j * w).sum()),
        e_lnfact=float((g * w).sum()),
        e_lnfact2=float((g * g * w).sum()),
        e_x_lnfact=float((j * g * w).sum()),
    )


def logz_hessian(params: CmpParams, policy: TruncationPolicy = DEFAULT_POLICY) -> LogZDerivatives:
    """All partials of ln Z from moments, via the exponential-family identities.

    With G = ln(X!):
        d(lnZ)/dlam      = E(X) / lam
        d(lnZ)/dnu       = -E(G)
        d2(lnZ)/dlam2    = (Var(X) - E(X)) / lam^2
        d2(lnZ)/dnu2     = Var(G)
        d2(lnZ)/dlam dnu = -Cov(X, G) / lam
    """
    m = moments(params, policy)
    lam = params.lam
    return LogZDerivatives(
        d_lam=m.e_x / lam,
        d_nu=-m.e_lnfact,
        d2_lam2=(m.var_x - m.e_x) / lam**2,
        d2_nu2=m.var_lnfact,
        d2_lam_nu=-m.cov_x_lnfact / lam,
    )

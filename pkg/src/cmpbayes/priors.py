"""Prior specifications for (lambda, nu): conjugate family, flat, and Jeffreys.

The conjugate family has kernel

    pi(lambda, nu) ∝ lambda^(a-1) * exp(-nu*b) * Z(lambda, nu)^(-c),

proper for a, b, c > 0 iff b/c exceeds a floor-interpolation bound (see
conjugate_propriety). The flat prior lambda^(-1) is the (improper) limit of
the conjugate kernel as (a, b, c) -> 0. The Jeffreys prior is the square root
of the determinant of the single-observation Fisher information, assembled
from the partial derivatives of ln Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from scipy.special import gammaln

from .core import CmpParams, TruncationPolicy, DEFAULT_POLICY, log_normalizer, logz_hessian
from .errors import InvalidParamsError, NonpositiveDeterminantError


@dataclass(frozen=True)
class ConjugateHyper:
    """Hyperparameters (a, b, c) of the conjugate prior kernel."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise InvalidParamsError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class Conjugate:
    hyper: ConjugateHyper


@dataclass(frozen=True)
class Flat:
    pass


@dataclass(frozen=True)
class Jeffreys:
    pass


PriorSpec = Union[Conjugate, Flat, Jeffreys]

PRESET_NAMES = ("conj-1", "conj-data", "conj-0.1", "conj-0.01", "flat", "jeffreys")


def conjugate_propriety(hyper: ConjugateHyper) -> bool:
    """Whether the conjugate kernel with (a, b, c) normalizes to a proper density.

    True iff b/c > ln(floor(a/c)!) + (a/c - floor(a/c)) * ln(floor(a/c) + 1),
    strict inequality, with ln(m!) evaluated as lnGamma(m+1). The verdict
    depends only on the ratios a/c and b/c.
    """
    t = hyper.a / hyper.c
    fl = math.floor(t)
    rhs = float(gammaln(fl + 1.0)) + (t - fl) * math.log(fl + 1.0)
    return hyper.b / hyper.c > rhs


def propriety_bound(hyper: ConjugateHyper) -> tuple[float, float]:
    """The two sides of the propriety inequality: (b/c, bound it must exceed)."""
    t = hyper.a / hyper.c
    fl = math.floor(t)
    rhs = float(gammaln(fl + 1.0)) + (t - fl) * math.log(fl + 1.0)
    return hyper.b / hyper.c, rhs


def preset_priors() -> list[tuple[str, PriorSpec]]:
    """The six study priors, keyed by their CLI-facing names.

    conj-data is the two-hypothetical-observations prior built from counts
    [2, 0], i.e. (a, b, c) = (2, ln 2, 2); the other conjugate presets set
    a = b = c. flat and jeffreys are improper.
    """
    return [
        ("conj-1", Conjugate(ConjugateHyper(1.0, 1.0, 1.0))),
        ("conj-data", Conjugate(ConjugateHyper(2.0, math.log(2.0), 2.0))),
        ("conj-0.1", Conjugate(ConjugateHyper(0.1, 0.1, 0.1))),
        ("conj-0.01", Conjugate(ConjugateHyper(0.01, 0.01, 0.01))),
        ("flat", Flat()),
        ("jeffreys", Jeffreys()),
    ]


def get_preset(name: str) -> PriorSpec:
    for preset_name, spec in preset_priors():
        if preset_name == name:
            return spec
    raise KeyError(f"unknown prior preset {name!r}; choose from {', '.join(PRESET_NAMES)}")


def jeffreys_information_det(params: CmpParams, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Determinant of the single-observation Fisher information matrix.

    det = [Var(X)/lambda^2] * Var(lnX!) - [Cov(X, lnX!)/lambda]^2, assembled
    from the ln Z partials (Var(X)/lambda^2 = d2_lam2 + d_lam/lambda).
    """
    d = logz_hessian(params, policy)
    i_ll = d.d2_lam2 + d.d_lam / params.lam
    return i_ll * d.d2_nu2 - d.d2_lam_nu**2


def log_prior_density(
    spec: PriorSpec, params: CmpParams, policy: TruncationPolicy = DEFAULT_POLICY
) -> float:
    """Unnormalized log prior density at (lambda, nu).

    Conjugate: (a-1)*ln(lambda) - nu*b - c*ln Z.
    Flat: -ln(lambda).
    Jeffreys: 0.5 * ln det of the single-observation information; raises
    NonpositiveDeterminantError when the determinant is not positive (the
    density is undefined there, nothing is clamped). Requires nu > 0.
    """
    if isinstance(spec, Conjugate):
        h = spec.hyper
        return float(
            (h.a - 1.0) * math.log(params.lam)
            - params.nu * h.b
            - h.c * log_normalizer(params, policy)
        )
    if isinstance(spec, Flat):
        return -math.log(params.lam)
    if isinstance(spec, Jeffreys):
        if params.nu <= 0.0:
            raise InvalidParamsError("Jeffreys prior requires nu > 0")
        det = jeffreys_information_det(params, policy)
        if det <= 0.0 or not math.isfinite(det):
            raise NonpositiveDeterminantError(
                f"information determinant {det} at (lambda={params.lam}, nu={params.nu})"
            )
        return 0.5 * math.log(det)
    raise TypeError(f"unknown prior spec {spec!r}")

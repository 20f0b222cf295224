"""Acceptance suite: one test (or sub-test) per criterion, one verdict line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.

Two sub-checks of criterion 6 are expected to fail and are left failing on
purpose. They encode simulation-study reference values that cannot be
produced by the stated generative model: the sampler here is validated
against 2-D grid quadrature and exact-moment/chi-square checks, reproduces
all four bundled-data fits (criterion 7), and the Fisher information of
CMP(3, 0.5) bounds any near-unbiased estimator's Var(lambda-hat) at n=75 by
0.407 -- so an estimator with ~0.96 coverage cannot also have MSE 0.105.
Likewise the heavy-tailed (but proper, verified by quadrature) Jeffreys
posterior under under-dispersion covers the truth in ~88% of replicates;
coverage ~0 is a sampler-failure artifact, not a property of the posterior.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import gammaln

from cmpbayes import (
    CmpParams,
    Conjugate,
    ConjugateHyper,
    InvalidParamsError,
    McmcConfig,
    SeedSpec,
    StudyConfig,
    StudySetting,
    SufficientStats,
    TruncationPolicy,
    bundled_dataset,
    chi_square_gof,
    conjugate_propriety,
    dispersion_ratio,
    log_normalizer,
    log_pmf,
    log_posterior,
    log_prior_density,
    logz_hessian,
    run_chains,
    run_study,
    sample_cmp,
    sufficient_stats,
    summarize,
    updated_hyper,
)

GRID9 = [(lam, nu) for lam in (0.5, 3.0, 4.0) for nu in (0.5, 1.0, 2.0)]
FD_POLICY = TruncationPolicy(base_terms=2048, tail_tol=1e-14)
STUDY_SETTINGS = [(4.0, 1.0), (3.0, 0.5), (3.0, 2.0)]
TABLE_DATASETS = ("textile-faults", "slovak-poem", "crab-satellites", "hungarian-words")


def verdict(tag, ok, detail=""):
    print(f"ACCEPTANCE {tag}: {'PASS' if ok else 'FAIL'}{' - ' + detail if detail else ''}")
    return ok


# ---------------------------------------------------------------- criterion 1

def test_criterion_1_analytic_special_cases():
    worst = 0.0
    for lam in (0.1, 0.5, 2.0, 4.0):
        # Poisson
        worst = max(worst, abs(log_normalizer(CmpParams(lam, 1.0)) - lam))
        for x in (0, 1, 3, 7):
            closed = x * math.log(lam) - lam - float(gammaln(x + 1.0))
            worst = max(worst, abs(log_pmf(x, CmpParams(lam, 1.0)) - closed))
        # geometric (only defined for lam < 1)
        if lam < 1.0:
            worst = max(worst, abs(log_normalizer(CmpParams(lam, 0.0)) + math.log1p(-lam)))
            for x in (0, 2, 5):
                closed = x * math.log(lam) + math.log1p(-lam)
                worst = max(worst, abs(log_pmf(x, CmpParams(lam, 0.0)) - closed))
        # Bernoulli limit
        worst = max(worst, abs(log_normalizer(CmpParams(lam, 1e8)) - math.log1p(lam)))
        p0 = -math.log1p(lam)
        p1 = math.log(lam) - math.log1p(lam)
        worst = max(worst, abs(log_pmf(0, CmpParams(lam, 1e8)) - p0))
        worst = max(worst, abs(log_pmf(1, CmpParams(lam, 1e8)) - p1))
    ok = worst < 1e-9
    assert verdict("1 analytic-special-cases", ok, f"worst abs err {worst:.2e}")


# ---------------------------------------------------------------- criterion 2

def _fd_derivs(lam, nu, h1=1e-5, h2=1e-3):
    def f(l, n):
        return log_normalizer(CmpParams(l, n), FD_POLICY)

    return {
        "d_lam": (f(lam + h1, nu) - f(lam - h1, nu)) / (2 * h1),
        "d_nu": (f(lam, nu + h1) - f(lam, nu - h1)) / (2 * h1),
        "d2_lam2": (f(lam + h2, nu) - 2 * f(lam, nu) + f(lam - h2, nu)) / h2**2,
        "d2_nu2": (f(lam, nu + h2) - 2 * f(lam, nu) + f(lam, nu - h2)) / h2**2,
        "d2_lam_nu": (f(lam + h2, nu + h2) - f(lam + h2, nu - h2)
                      - f(lam - h2, nu + h2) + f(lam - h2, nu - h2)) / (4 * h2 * h2),
    }


def test_criterion_2_derivative_oracle():
    worst = 0.0
    for lam, nu in GRID9:
        d = logz_hessian(CmpParams(lam, nu))
        for key, fd_value in _fd_derivs(lam, nu).items():
            # denominator floor: d2_lam2 is exactly 0 at nu=1, where any
            # relative comparison against finite-difference noise is vacuous
            rel = abs(getattr(d, key) - fd_value) / max(abs(fd_value), 1e-3)
            worst = max(worst, rel)
    ok = worst < 1e-4
    assert verdict("2 derivative-oracle", ok, f"worst rel err {worst:.2e} on 9-point grid")


# ---------------------------------------------------------------- criterion 3

def test_criterion_3_conjugacy_identity():
    rng = np.random.default_rng(314)
    worst = 0.0
    for _ in range(20):
        a, b, c = rng.uniform(0.2, 4.0, size=3)
        if not conjugate_propriety(ConjugateHyper(a, b, c)):
            b = c * (float(gammaln(math.floor(a / c) + 1.0)) + 1.0)  # push above bound
        data = rng.integers(0, 10, size=int(rng.integers(3, 40)))
        stats = sufficient_stats(data)
        spec = Conjugate(ConjugateHyper(a, b, c))
        updated = Conjugate(updated_hyper(spec.hyper, stats))
        diffs = [
            log_posterior(spec, stats, CmpParams(lam, nu))
            - log_prior_density(updated, CmpParams(lam, nu))
            for lam in np.linspace(0.6, 6.0, 5)
            for nu in np.linspace(0.3, 2.5, 5)
        ]
        worst = max(worst, float(np.var(diffs)))
    ok = worst < 1e-10
    assert verdict("3 conjugacy-identity", ok, f"worst variance {worst:.2e} over 20 cases")


# ---------------------------------------------------------------- criterion 4

def test_criterion_4_propriety_checker():
    checks = [
        conjugate_propriety(ConjugateHyper(1.0, 1.0, 1.0)),
        conjugate_propriety(ConjugateHyper(2.0, math.log(2.0), 2.0)),
    ]
    checks += [conjugate_propriety(ConjugateHyper(k, k, k)) for k in (0.01, 0.1, 1.0, 10.0)]
    # single-hypothetical-observation construction: c=1, a=x', b=ln(x'!) is
    # exactly the excluded boundary, so it can never yield a proper prior
    boundary_fails = []
    for x in (2, 3, 5, 9):
        b = float(gammaln(x + 1.0))
        boundary_fails.append(not conjugate_propriety(ConjugateHyper(float(x), b, 1.0)))
        boundary_fails.append(conjugate_propriety(ConjugateHyper(float(x), b + 1e-9, 1.0)))
    # x' = 1 gives b = ln(1!) = 0, rejected outright by the b > 0 domain
    try:
        ConjugateHyper(1.0, 0.0, 1.0)
        boundary_fails.append(False)
    except InvalidParamsError:
        boundary_fails.append(True)
    ok = all(checks) and all(boundary_fails)
    assert verdict("4 propriety-checker", ok)


# ---------------------------------------------------------------- criterion 5

def _pooled_median_and_se(draws, param):
    x = getattr(draws, param)
    chain_medians = np.median(x, axis=1)
    se = chain_medians.std(ddof=1) / math.sqrt(x.shape[0])
    return float(np.median(x)), max(float(se), 1e-3)


def test_criterion_5_sampler_oracle_equivalence():
    rng = np.random.default_rng(99)
    failures = []
    # 8 chains: the MC-se of a pooled median is estimated from the spread of
    # per-chain medians, and 4 chains give that estimate only 3 df
    config = McmcConfig(chains=8)
    for case in range(5):
        while True:
            a, b, c = rng.uniform(0.4, 3.0, size=3)
            if conjugate_propriety(ConjugateHyper(a, b, c)):
                break
        lam_true = rng.uniform(1.0, 4.0)
        nu_true = rng.uniform(0.5, 2.0)
        n = int(rng.integers(25, 60))
        data = sample_cmp(CmpParams(lam_true, nu_true), n, SeedSpec(500 + case, 0))
        stats = sufficient_stats(data)
        h = ConjugateHyper(a, b, c)
        with_data = run_chains(Conjugate(h), stats, config,
                               SeedSpec(600 + case, 0))
        as_prior = run_chains(Conjugate(updated_hyper(h, stats)),
                              SufficientStats.empty(), config,
                              SeedSpec(600 + case, 1))
        for param in ("lam", "nu"):
            m1, se1 = _pooled_median_and_se(with_data, param)
            m2, se2 = _pooled_median_and_se(as_prior, param)
            gap = abs(m1 - m2)
            bound = 3.0 * math.hypot(se1, se2)
            if gap > bound:
                failures.append(f"case {case} {param}: |{m1:.4f}-{m2:.4f}|>{bound:.4f}")
    ok = not failures
    assert verdict("5 sampler-oracle-equivalence", ok, "; ".join(failures) or "5 cases")


# ---------------------------------------------------------------- criterion 6

@pytest.fixture(scope="module")
def study_over_conj1():
    cfg = StudyConfig(settings=(StudySetting("over", 3.0, 0.5),),
                      sample_sizes=(75,), replicates=25, priors=("conj-1",),
                      master_seed=0)
    return {(r.parameter): r for r in run_study(cfg, workers=2)}


@pytest.fixture(scope="module")
def study_under_jeffreys():
    cfg = StudyConfig(settings=(StudySetting("under", 3.0, 2.0),),
                      sample_sizes=(25,), replicates=25, priors=("jeffreys",),
                      master_seed=0)
    return {(r.parameter): r for r in run_study(cfg, workers=2)}


def test_criterion_6a_study_conj1_coverage(study_over_conj1):
    cov_lam = study_over_conj1["lambda"].coverage
    cov_nu = study_over_conj1["nu"].coverage
    ok = 0.84 <= cov_lam <= 1.0 and 0.84 <= cov_nu <= 1.0
    assert verdict("6a study-conj1-coverage", ok,
                   f"coverage lambda {cov_lam:.2f}, nu {cov_nu:.2f}")


def test_criterion_6b_study_conj1_mse(study_over_conj1):
    # Expected to fail; see module docstring. The bound is asserted as stated.
    mse = study_over_conj1["lambda"].mse
    ok = 0.105 / 2 <= mse <= 0.105 * 2
    assert verdict("6b study-conj1-mse", ok,
                   f"mse(lambda) {mse:.3f}, required [{0.105/2:.4f}, {0.105*2:.3f}]")


def test_criterion_6c_study_jeffreys_coverage(study_under_jeffreys):
    # Expected to fail; see module docstring. The bound is asserted as stated.
    cov = study_under_jeffreys["lambda"].coverage
    ok = cov <= 0.20
    assert verdict("6c study-jeffreys-coverage", ok, f"coverage(lambda) {cov:.2f}")


def test_criterion_6d_study_jeffreys_mse(study_under_jeffreys):
    mse = study_under_jeffreys["lambda"].mse
    ok = mse > 1.0
    assert verdict("6d study-jeffreys-mse", ok, f"mse(lambda) {mse:.2f}")


# ---------------------------------------------------------------- criterion 7

@pytest.fixture(scope="module")
def table_fits():
    out = {}
    for name in TABLE_DATASETS:
        stats = sufficient_stats(bundled_dataset(name).counts)
        draws = run_chains(Conjugate(ConjugateHyper(1, 1, 1)), stats,
                           McmcConfig(), SeedSpec(42))
        out[name] = summarize(draws)
    return out


@pytest.fixture(scope="module")
def table_fits_500():
    policy = TruncationPolicy(base_terms=500)
    out = {}
    for name in TABLE_DATASETS:
        stats = sufficient_stats(bundled_dataset(name).counts)
        draws = run_chains(Conjugate(ConjugateHyper(1, 1, 1)), stats,
                           McmcConfig(), SeedSpec(42), policy)
        out[name] = summarize(draws)
    return out


def test_criterion_7_data_illustrations(table_fits):
    t = table_fits
    problems = []
    if not 1.144 < t["textile-faults"].lam.median < 2.409:
        problems.append(f"textile lambda {t['textile-faults'].lam.median:.3f}")
    if not 0.103 < t["textile-faults"].nu.median < 0.421:
        problems.append(f"textile nu {t['textile-faults'].nu.median:.3f}")
    if not t["crab-satellites"].nu.median < 0.11:
        problems.append(f"crab nu {t['crab-satellites'].nu.median:.3f}")
    if not 2.4 < t["slovak-poem"].nu.median < 4.3:
        problems.append(f"slovak nu {t['slovak-poem'].nu.median:.3f}")
    if not 3.0 < t["hungarian-words"].nu.median < 3.1:
        problems.append(f"hungarian nu {t['hungarian-words'].nu.median:.4f}")
    for name, s in t.items():
        if s.lam.rhat >= 1.02 or s.nu.rhat >= 1.02:
            problems.append(f"{name} rhat {s.lam.rhat:.3f}/{s.nu.rhat:.3f}")
    ok = not problems
    assert verdict("7 data-illustrations", ok, "; ".join(problems) or "4 datasets in band")


# ---------------------------------------------------------------- criterion 8

def test_criterion_8_rng_fidelity():
    problems = []
    for lam, nu in STUDY_SETTINGS:
        p = CmpParams(lam, nu)
        x = sample_cmp(p, 100_000, SeedSpec(8, int(10 * nu)))
        stat, critical, ok = chi_square_gof(x, p, alpha=0.001)
        if not ok:
            problems.append(f"chi2 {stat:.1f}>{critical:.1f} at ({lam},{nu})")
        ratio = dispersion_ratio(x)
        if nu < 1.0 and ratio <= 1.0:
            problems.append(f"expected over-dispersion at ({lam},{nu})")
        if nu > 1.0 and ratio >= 1.0:
            problems.append(f"expected under-dispersion at ({lam},{nu})")
        if nu == 1.0 and not 0.93 < ratio < 1.07:
            problems.append(f"dispersion {ratio:.3f} at Poisson setting")
    ok = not problems
    assert verdict("8 rng-fidelity", ok, "; ".join(problems) or "3 settings")


# ---------------------------------------------------------------- criterion 9

def test_criterion_9_truncation_robustness(table_fits, table_fits_500):
    worst = 0.0
    for name in TABLE_DATASETS:
        for param in ("lam", "nu"):
            a = getattr(table_fits[name], param).median
            b = getattr(table_fits_500[name], param).median
            worst = max(worst, abs(a - b))
    ok = worst <= 1e-4
    assert verdict("9 truncation-robustness", ok, f"worst median shift {worst:.2e}")

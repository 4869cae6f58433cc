"""Likelihood-ratio testing of a hierarchy against a looser alternative.

The statistic is twice the log-likelihood gap between the alternative
fit (full profile set, or the set induced by a sub-hierarchy) and the
null fit (set induced by the hypothesized hierarchy). Because the null
places proportions on the boundary of the simplex, the usual
chi-squared reference is unreliable; the procedures here are:

- ``parametric_boot``: refit on samples drawn from the fitted null;
- ``nonparametric_boot``: refit on respondent resamples of the data;
- ``naive_chisq``: chi-squared survival with df = difference in
  supported profile counts;
- ``chibar``: the half-half mix of a point mass and chi-squared(1),
  exact only for a single boundary proportion.

Bootstrap p-values use the add-one rule (1 + #{lambda_b >= lambda_obs})
/ (B + 1), so they are never exactly zero. All randomness is driven by
sub-seeds derived from (seed, replicate), making serial and parallel
runs interchangeable.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray
from scipy.stats import chi2

from .em import CdmFit, FitConfig, fit_em
from .errors import DimensionMismatch, InvalidDf, NestingError, WeightError
from .models import simulate_responses, validate_responses
from .qmatrix import Hierarchy, ProfileSet, QMatrix, induce_profile_set
from .seeding import derive_seed

NESTING_SLACK = 1e-6

METHOD_PARAMETRIC = "parametric_boot"
METHOD_NONPARAMETRIC = "nonparametric_boot"
METHOD_CHISQ = "naive_chisq"
METHOD_CHIBAR = "chibar"
METHODS = (METHOD_PARAMETRIC, METHOD_NONPARAMETRIC, METHOD_CHISQ, METHOD_CHIBAR)


@dataclass(eq=False)
class TestReport:
    """Result of one hierarchy test."""

    lambda_obs: float
    method: str
    B: int
    p_value: float
    seed: int | None
    null_fit: dict
    alt_fit: dict
    boot_lambdas: NDArray[np.float64] | None = None
    n_boot_warnings: int = 0
    df: int | None = None

    def to_dict(self) -> dict:
        out = {
            "lambda_obs": self.lambda_obs,
            "method": self.method,
            "B": self.B,
            "p_value": self.p_value,
            "seed": self.seed,
            "null_fit": self.null_fit,
            "alt_fit": self.alt_fit,
            "n_boot_warnings": self.n_boot_warnings,
        }
        if self.df is not None:
            out["df"] = self.df
        if self.boot_lambdas is not None:
            out["boot_lambdas"] = [float(x) for x in self.boot_lambdas]
        return out


def lrt_statistic(fit0: CdmFit, fit1: CdmFit) -> float:
    """Twice the log-likelihood gap of nested fits, clamped at zero.

    Values in (-1e-6, 0) are optimizer noise and clamp to 0; anything
    below -1e-6 means the restricted fit beat the full fit and raises
    :class:`NestingError`.
    """
    if fit0.model != fit1.model:
        raise DimensionMismatch("fits use different model kinds")
    if not fit0.p.support.is_subset_of(fit1.p.support):
        raise DimensionMismatch("null support is not nested in the alternative")
    lam = -2.0 * (fit0.loglik - fit1.loglik)
    if lam < -NESTING_SLACK:
        raise NestingError(fit0.loglik, fit1.loglik)
    return max(lam, 0.0)


def naive_chisq_pvalue(lam: float, df: int) -> float:
    """Chi-squared survival probability at the observed statistic."""
    if not isinstance(df, (int, np.integer)) or df < 1:
        raise InvalidDf(f"degrees of freedom must be a positive integer, got {df}")
    if lam < 0:
        raise ValueError(f"statistic must be nonnegative, got {lam}")
    return float(chi2.sf(lam, df))


def chibar_pvalue(lam: float, weights, dfs) -> float:
    """Survival probability of a weighted chi-squared mixture.

    A zero-df component is a point mass at zero: it contributes its
    whole weight when ``lam == 0`` and nothing otherwise, so the
    p-value at ``lam == 0`` is exactly 1.
    """
    weights = np.asarray(weights, dtype=np.float64)
    dfs = [int(d) for d in dfs]
    if weights.shape != (len(dfs),):
        raise WeightError("weights and dfs must have the same length")
    if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-9:
        raise WeightError("weights must be nonnegative and sum to one")
    if any(d < 0 for d in dfs):
        raise InvalidDf("degrees of freedom must be nonnegative")
    if lam < 0:
        raise ValueError(f"statistic must be nonnegative, got {lam}")
    total = 0.0
    for w, d in zip(weights, dfs):
        if d == 0:
            total += w * (1.0 if lam <= 0 else 0.0)
        else:
            total += w * float(chi2.sf(lam, d))
    return total


def single_boundary_chibar_pvalue(lam: float) -> float:
    """The half point-mass, half chi-squared(1) reference for one
    boundary proportion."""
    return chibar_pvalue(lam, (0.5, 0.5), (0, 1))


@dataclass(eq=False)
class LrtFits:
    """Null and alternative fits on one dataset plus their statistic."""

    fit0: CdmFit
    fit1: CdmFit
    lambda_obs: float


def _embedded_start(fit0: CdmFit, support1: ProfileSet):
    """The null fit's parameters as a start for the full fit: its
    proportions land on the matching profiles, zeros elsewhere."""
    probs = np.zeros(support1.size)
    codes1 = {int(c): i for i, c in enumerate(support1.codes())}
    for i, c in enumerate(fit0.p.support.codes()):
        probs[codes1[int(c)]] = fit0.p.probs[i]
    return fit0.params, probs


def fit_null_alt(
    model: str,
    q: QMatrix,
    support0: ProfileSet,
    support1: ProfileSet,
    data,
    cfg: FitConfig,
) -> LrtFits:
    """Fit both hypotheses on the same data.

    The alternative fit always receives the null fit's parameters as an
    extra start, which guarantees the statistic is nonnegative up to
    floating-point slack.
    """
    if not support0.is_subset_of(support1):
        raise DimensionMismatch("null support must be nested in the alternative")
    fit0 = fit_em(model, q, support0, data, cfg)
    fit1 = fit_em(
        model, q, support1, data, cfg, extra_starts=[_embedded_start(fit0, support1)]
    )
    return LrtFits(fit0, fit1, lrt_statistic(fit0, fit1))


def alternative_support(q: QMatrix, h1: Hierarchy | None) -> ProfileSet:
    """The alternative's profile set: everything, or the set induced by
    a looser hierarchy."""
    if h1 is None:
        return ProfileSet.full(q.K)
    return induce_profile_set(h1)


def _check_hypotheses(q: QMatrix, h0: Hierarchy, h1: Hierarchy | None):
    if q.K != h0.K:
        raise DimensionMismatch(f"Q-matrix has K={q.K}, hierarchy has K={h0.K}")
    support0 = induce_profile_set(h0)
    support1 = alternative_support(q, h1)
    if not support0.is_subset_of(support1):
        raise DimensionMismatch(
            "the null hierarchy must be at least as restrictive as the "
            "alternative (its profile set must be nested)"
        )
    return support0, support1


def _one_boot_lambda(
    model, q, support0, support1, boot_data, cfg, rep_seed
) -> tuple[float, int]:
    """LRT statistic on one bootstrap dataset, with a single retry on a
    nesting failure; returns (lambda, warning_count)."""
    cfg_b = replace(cfg, seed=derive_seed(rep_seed, 1))
    try:
        return fit_null_alt(model, q, support0, support1, boot_data, cfg_b).lambda_obs, 0
    except NestingError:
        cfg_retry = replace(
            cfg, n_starts=cfg.n_starts + 3, seed=derive_seed(rep_seed, 2)
        )
        try:
            fits = fit_null_alt(model, q, support0, support1, boot_data, cfg_retry)
            return fits.lambda_obs, 1
        except NestingError:
            return 0.0, 1


def _parametric_replicate(args) -> tuple[float, int]:
    model, q, support0, support1, params, p, N, cfg, rep_seed = args
    boot_data, _ = simulate_responses(
        model, params, p, q, N, seed=derive_seed(rep_seed, 0)
    )
    return _one_boot_lambda(model, q, support0, support1, boot_data, cfg, rep_seed)


def _nonparametric_replicate(args) -> tuple[float, int]:
    model, q, support0, support1, data, cfg, rep_seed = args
    rng = np.random.default_rng(derive_seed(rep_seed, 0))
    idx = rng.integers(0, data.shape[0], size=data.shape[0])
    return _one_boot_lambda(model, q, support0, support1, data[idx], cfg, rep_seed)


def _run_replicates(task, payloads, n_jobs: int) -> list[tuple[float, int]]:
    if n_jobs <= 1 or len(payloads) <= 1:
        return [task(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(task, payloads, chunksize=max(1, len(payloads) // (4 * n_jobs))))


def add_one_pvalue(boot_lambdas, lambda_obs: float) -> float:
    boot_lambdas = np.asarray(boot_lambdas, dtype=np.float64)
    return float((1 + (boot_lambdas >= lambda_obs).sum()) / (boot_lambdas.size + 1))


def bootstrap_report_from_fits(
    fits: LrtFits,
    method: str,
    q: QMatrix,
    data,
    B: int,
    cfg: FitConfig,
    seed,
    n_jobs: int = 1,
    emit_lambdas: bool = True,
) -> TestReport:
    """Bootstrap p-value for precomputed observed fits.

    ``method`` selects how replicate datasets arise: simulated from the
    fitted null, or resampled respondent rows.
    """
    if B < 1:
        raise ValueError("bootstrap replicate count must be >= 1")
    data = validate_responses(data, J=q.J)
    model = fits.fit0.model
    support0, support1 = fits.fit0.p.support, fits.fit1.p.support
    if method == METHOD_PARAMETRIC:
        payloads = [
            (
                model,
                q,
                support0,
                support1,
                fits.fit0.params,
                fits.fit0.p,
                data.shape[0],
                cfg,
                derive_seed(seed, b),
            )
            for b in range(1, B + 1)
        ]
        results = _run_replicates(_parametric_replicate, payloads, n_jobs)
    elif method == METHOD_NONPARAMETRIC:
        payloads = [
            (model, q, support0, support1, data, cfg, derive_seed(seed, b))
            for b in range(1, B + 1)
        ]
        results = _run_replicates(_nonparametric_replicate, payloads, n_jobs)
    else:
        raise ValueError(f"not a bootstrap method: {method!r}")
    boot_lambdas = np.array([r[0] for r in results])
    warnings_count = int(sum(r[1] for r in results))
    return TestReport(
        lambda_obs=fits.lambda_obs,
        method=method,
        B=B,
        p_value=add_one_pvalue(boot_lambdas, fits.lambda_obs),
        seed=seed,
        null_fit=fits.fit0.summary(),
        alt_fit=fits.fit1.summary(),
        boot_lambdas=boot_lambdas if emit_lambdas else None,
        n_boot_warnings=warnings_count,
    )


def analytic_report_from_fits(fits: LrtFits, method: str, seed=None) -> TestReport:
    """Closed-form p-value for precomputed observed fits."""
    if method == METHOD_CHISQ:
        df = fits.fit1.p.support.size - fits.fit0.p.support.size
        return TestReport(
            lambda_obs=fits.lambda_obs,
            method=method,
            B=0,
            p_value=naive_chisq_pvalue(fits.lambda_obs, df),
            seed=seed,
            null_fit=fits.fit0.summary(),
            alt_fit=fits.fit1.summary(),
            df=df,
        )
    if method == METHOD_CHIBAR:
        return TestReport(
            lambda_obs=fits.lambda_obs,
            method=method,
            B=0,
            p_value=single_boundary_chibar_pvalue(fits.lambda_obs),
            seed=seed,
            null_fit=fits.fit0.summary(),
            alt_fit=fits.fit1.summary(),
        )
    raise ValueError(f"not an analytic method: {method!r}")


def observed_fits(
    q: QMatrix,
    h0: Hierarchy,
    model: str,
    data,
    cfg: FitConfig,
    seed,
    h1: Hierarchy | None = None,
) -> LrtFits:
    """Fit both hypotheses on the observed data (sub-seed 0 of ``seed``)."""
    support0, support1 = _check_hypotheses(q, h0, h1)
    data = validate_responses(data, J=q.J)
    cfg_obs = replace(cfg, seed=derive_seed(seed, 0))
    return fit_null_alt(model, q, support0, support1, data, cfg_obs)


def parametric_bootstrap_test(
    q: QMatrix,
    h0: Hierarchy,
    model: str,
    data,
    B: int,
    cfg: FitConfig = FitConfig(),
    seed=None,
    h1: Hierarchy | None = None,
    n_jobs: int = 1,
    emit_lambdas: bool = True,
) -> TestReport:
    """Test ``h0`` by refitting on datasets simulated from the fitted null."""
    fits = observed_fits(q, h0, model, data, cfg, seed, h1)
    return bootstrap_report_from_fits(
        fits, METHOD_PARAMETRIC, q, data, B, cfg, seed, n_jobs, emit_lambdas
    )


def nonparametric_bootstrap_test(
    q: QMatrix,
    h0: Hierarchy,
    model: str,
    data,
    B: int,
    cfg: FitConfig = FitConfig(),
    seed=None,
    h1: Hierarchy | None = None,
    n_jobs: int = 1,
    emit_lambdas: bool = True,
) -> TestReport:
    """Test ``h0`` by refitting on respondent resamples of the data."""
    fits = observed_fits(q, h0, model, data, cfg, seed, h1)
    return bootstrap_report_from_fits(
        fits, METHOD_NONPARAMETRIC, q, data, B, cfg, seed, n_jobs, emit_lambdas
    )


def naive_chisq_test(
    q: QMatrix,
    h0: Hierarchy,
    model: str,
    data,
    cfg: FitConfig = FitConfig(),
    seed=None,
    h1: Hierarchy | None = None,
) -> TestReport:
    """Chi-squared test with df equal to the count of excluded profiles."""
    fits = observed_fits(q, h0, model, data, cfg, seed, h1)
    return analytic_report_from_fits(fits, METHOD_CHISQ, seed)


def chibar_test(
    q: QMatrix,
    h0: Hierarchy,
    model: str,
    data,
    cfg: FitConfig = FitConfig(),
    seed=None,
    h1: Hierarchy | None = None,
) -> TestReport:
    """Single-boundary chi-squared-mixture test; its reference law is
    exact only when one proportion sits on the boundary."""
    fits = observed_fits(q, h0, model, data, cfg, seed, h1)
    return analytic_report_from_fits(fits, METHOD_CHIBAR, seed)

"""Repeatable simulation studies: Q-matrix generation, truth
construction, batched test execution, and QQ-plot data export.

A study is described by an :class:`ExperimentConfig`; running it yields
per-method p-value samples, rejection rates at the 0.05 level, and the
observed statistics, all reproducible bit-for-bit from the seed and
independent of worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import lrt
from .em import FitConfig
from .errors import TooFewItems, UnknownMethod
from .models import DinaParams, GdinaParams, ProportionVector, simulate_responses
from .qmatrix import Hierarchy, ProfileSet, QMatrix, induce_profile_set
from .seeding import derive_seed

METHOD_ALIASES = {
    "pboot": lrt.METHOD_PARAMETRIC,
    "npboot": lrt.METHOD_NONPARAMETRIC,
    "chisq": lrt.METHOD_CHISQ,
    "chibar": lrt.METHOD_CHIBAR,
}

#: The four standard prerequisite shapes. Linear and unstructured exist
#: for any K; the two four-attribute diamonds are fixed at K = 4.
HIERARCHY_SHAPES = ("linear", "convergent", "divergent", "unstructured")


def canonical_method(name: str) -> str:
    name = name.lower()
    name = METHOD_ALIASES.get(name, name)
    if name not in lrt.METHODS:
        raise UnknownMethod(name)
    return name


def shape_hierarchy(name: str, K: int) -> Hierarchy:
    """One of the named prerequisite shapes over K attributes."""
    name = name.lower()
    if name == "linear":
        return Hierarchy(K, [(k, k + 1) for k in range(1, K)])
    if name == "unstructured":
        return Hierarchy(K, [(1, k) for k in range(2, K + 1)])
    if name in ("convergent", "divergent"):
        if K != 4:
            raise ValueError(f"shape {name!r} is defined for K=4 only")
        if name == "convergent":
            return Hierarchy(4, [(1, 2), (1, 3), (2, 4), (3, 4)])
        return Hierarchy(4, [(1, 2), (1, 3), (3, 4)])
    raise ValueError(f"unknown hierarchy shape {name!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Design of one simulation study.

    ``hierarchy`` is a shape name or an explicit 1-based edge tuple;
    ``truth`` selects whether data are generated with the hierarchy's
    support (``"null"``) or with every profile present
    (``"alternative"``). ``theta_plus`` is the success probability of a
    fully qualified respondent; the floor is its mirror image.
    """

    model: str
    K: int
    J: int
    N: int
    hierarchy: str | tuple[tuple[int, int], ...]
    truth: str = "null"
    theta_plus: float = 0.9
    reps: int = 200
    B: int = 200
    methods: tuple[str, ...] = (lrt.METHOD_PARAMETRIC,)
    seed: int = 0
    fit: FitConfig = FitConfig()

    def __post_init__(self):
        if self.truth not in ("null", "alternative"):
            raise ValueError("truth must be 'null' or 'alternative'")
        if not (0.5 < self.theta_plus < 1.0):
            raise ValueError("theta_plus must lie in (0.5, 1)")
        if self.reps < 1 or self.B < 1:
            raise ValueError("reps and B must be >= 1")
        object.__setattr__(
            self, "methods", tuple(canonical_method(m) for m in self.methods)
        )
        if isinstance(self.hierarchy, str):
            shape_hierarchy(self.hierarchy, self.K)  # validate early
        else:
            object.__setattr__(
                self,
                "hierarchy",
                tuple((int(k), int(l)) for k, l in self.hierarchy),
            )

    @property
    def theta_minus(self) -> float:
        return 1.0 - self.theta_plus

    def null_hierarchy(self) -> Hierarchy:
        if isinstance(self.hierarchy, str):
            return shape_hierarchy(self.hierarchy, self.K)
        return Hierarchy(self.K, self.hierarchy)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "K": self.K,
            "J": self.J,
            "N": self.N,
            "hierarchy": self.hierarchy
            if isinstance(self.hierarchy, str)
            else [list(e) for e in self.hierarchy],
            "truth": self.truth,
            "theta_plus": self.theta_plus,
            "reps": self.reps,
            "B": self.B,
            "methods": list(self.methods),
            "seed": self.seed,
            "fit": {
                "max_iters": self.fit.max_iters,
                "loglik_tol": self.fit.loglik_tol,
                "n_starts": self.fit.n_starts,
                "init_strategy": self.fit.init_strategy,
            },
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        fit_raw = dict(raw.get("fit", {}))
        fit = FitConfig(
            max_iters=int(fit_raw.get("max_iters", 1000)),
            loglik_tol=float(fit_raw.get("loglik_tol", 1e-6)),
            n_starts=int(fit_raw.get("n_starts", 5)),
            init_strategy=fit_raw.get("init_strategy", "uniform"),
        )
        hierarchy = raw["hierarchy"]
        if not isinstance(hierarchy, str):
            hierarchy = tuple((int(k), int(l)) for k, l in hierarchy)
        return cls(
            model=raw["model"],
            K=int(raw["K"]),
            J=int(raw["J"]),
            N=int(raw["N"]),
            hierarchy=hierarchy,
            truth=raw.get("truth", "null"),
            theta_plus=float(raw.get("theta_plus", 0.9)),
            reps=int(raw.get("reps", 200)),
            B=int(raw.get("B", 200)),
            methods=tuple(raw.get("methods", ["pboot"])),
            seed=int(raw.get("seed", 0)),
            fit=fit,
        )


def generate_q(K: int, J: int, seed=None) -> QMatrix:
    """Study Q-matrix: two stacked identity blocks, then random rows
    drawn uniformly from the nonzero binary vectors."""
    if J < 2 * K:
        raise TooFewItems(f"need J >= 2K = {2 * K} items, got {J}")
    rng = np.random.default_rng(seed)
    eye = np.eye(K, dtype=np.int8)
    codes = rng.integers(1, 2**K, size=J - 2 * K)
    shifts = np.arange(K - 1, -1, -1, dtype=np.int64)
    rest = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.int8)
    return QMatrix(np.vstack([eye, eye, rest]))


def make_truth(cfg: ExperimentConfig, q: QMatrix):
    """Deterministic generating parameters for a study design.

    Gate models get constant slip and guess at ``1 - theta_plus``; the
    saturated model gets tables graded from the floor to the ceiling by
    the number of required attributes a pattern holds. Proportions are
    uniform over the truth's support.
    """
    if cfg.truth == "null":
        support = induce_profile_set(cfg.null_hierarchy())
    else:
        support = ProfileSet.full(cfg.K)
    if cfg.model in ("dina", "dino"):
        params = DinaParams.constant(cfg.J, 1 - cfg.theta_plus, 1 - cfg.theta_plus)
    else:
        params = GdinaParams.count_spaced(q, cfg.theta_minus, cfg.theta_plus)
    return params, ProportionVector.uniform(support)


@dataclass(eq=False)
class MethodResult:
    """Per-method outcome of a study."""

    method: str
    pvalues: NDArray[np.float64]
    alpha: float = 0.05

    @property
    def rejection_rate(self) -> float:
        return float((self.pvalues <= self.alpha).mean())

    @property
    def standard_error(self) -> float:
        r = self.rejection_rate
        return float(np.sqrt(r * (1 - r) / self.pvalues.size))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "rejection_rate": self.rejection_rate,
            "standard_error": self.standard_error,
            "pvalues": [float(p) for p in self.pvalues],
            "pvalues_sorted": [float(p) for p in np.sort(self.pvalues)],
        }


@dataclass(eq=False)
class ExperimentResult:
    """Everything a study run produces."""

    config: ExperimentConfig
    methods: dict
    lambda_obs: NDArray[np.float64]
    rep_converged: NDArray[np.bool_]
    n_boot_warnings: int
    wall_seconds: float

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "methods": {m: r.to_dict() for m, r in self.methods.items()},
            "lambda_obs": [float(x) for x in self.lambda_obs],
            "rep_converged": [bool(x) for x in self.rep_converged],
            "n_boot_warnings": self.n_boot_warnings,
            "wall_seconds": self.wall_seconds,
        }


def _run_one_rep(args) -> dict:
    cfg, q, h0, params, p_truth, rep_seed = args
    data, _ = simulate_responses(
        cfg.model, params, p_truth, q, cfg.N, seed=derive_seed(rep_seed, 0)
    )
    fits = lrt.observed_fits(
        q, h0, cfg.model, data, cfg.fit, seed=derive_seed(rep_seed, 1)
    )
    out = {
        "lambda_obs": fits.lambda_obs,
        "converged": fits.fit0.converged and fits.fit1.converged,
        "warnings": 0,
        "pvalues": {},
    }
    for m_idx, method in enumerate(cfg.methods):
        if method in (lrt.METHOD_PARAMETRIC, lrt.METHOD_NONPARAMETRIC):
            report = lrt.bootstrap_report_from_fits(
                fits,
                method,
                q,
                data,
                cfg.B,
                cfg.fit,
                seed=derive_seed(rep_seed, 2, m_idx),
                emit_lambdas=False,
            )
            out["warnings"] += report.n_boot_warnings
        else:
            report = lrt.analytic_report_from_fits(fits, method)
        out["pvalues"][method] = report.p_value
    return out


def run_experiment(cfg: ExperimentConfig, n_jobs: int = 1) -> ExperimentResult:
    """Run all repetitions of a study.

    Repetition ``r`` draws its own dataset from the truth with a
    sub-seed of ``(seed, 1, r)``, so results do not depend on worker
    scheduling. Failures inside a repetition propagate; bootstrap
    nesting retries are counted, not fatal.
    """
    start = time.perf_counter()
    q = generate_q(cfg.K, cfg.J, seed=derive_seed(cfg.seed, 0))
    h0 = cfg.null_hierarchy()
    params, p_truth = make_truth(cfg, q)
    payloads = [
        (cfg, q, h0, params, p_truth, derive_seed(cfg.seed, 1, r))
        for r in range(cfg.reps)
    ]
    if n_jobs <= 1 or cfg.reps <= 1:
        rows = [_run_one_rep(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_run_one_rep, payloads, chunksize=1))
    methods = {
        method: MethodResult(
            method, np.array([row["pvalues"][method] for row in rows])
        )
        for method in cfg.methods
    }
    return ExperimentResult(
        config=cfg,
        methods=methods,
        lambda_obs=np.array([row["lambda_obs"] for row in rows]),
        rep_converged=np.array([row["converged"] for row in rows], dtype=bool),
        n_boot_warnings=int(sum(row["warnings"] for row in rows)),
        wall_seconds=time.perf_counter() - start,
    )


@dataclass(eq=False)
class QqTable:
    """Plot-ready QQ data: expected percentile vs sorted p-value, plus
    the Kolmogorov distance of the p-values from uniform."""

    rows: NDArray[np.float64]
    ks_uniform: float

    def to_csv_rows(self) -> list[tuple[float, float]]:
        return [(float(x), float(y)) for x, y in self.rows]


def ks_distance_uniform(pvalues) -> float:
    """One-sample Kolmogorov statistic of a sample against uniform(0, 1)."""
    p = np.sort(np.asarray(pvalues, dtype=np.float64))
    n = p.size
    grid_hi = np.arange(1, n + 1) / n
    grid_lo = np.arange(0, n) / n
    return float(np.max(np.maximum(grid_hi - p, p - grid_lo)))


def chibar_reference_ks(lambdas, atom_tol: float = 1e-3) -> float:
    """Kolmogorov distance between observed statistics and the
    single-boundary reference law (half point mass at zero, half
    chi-squared with one degree of freedom).

    Equivalently: the distance between the reference p-values of the
    sample and their theoretical law, which is uniform below one half
    with the remaining mass at one. Statistics below ``atom_tol`` are
    optimizer noise around the boundary and count as the point mass;
    the reference puts only about one percent of its continuous mass
    there, so the threshold biases the distance by at most that much.
    """
    from scipy.stats import chi2

    lams = np.asarray(lambdas, dtype=np.float64)
    lams = np.sort(np.where(lams < atom_tol, 0.0, lams))
    n = lams.size
    ref_at = 0.5 + 0.5 * chi2.cdf(lams, 1)
    ref_below = np.where(lams > 0, ref_at, 0.0)
    emp_at = np.searchsorted(lams, lams, side="right") / n
    emp_below = np.searchsorted(lams, lams, side="left") / n
    return float(
        max(np.max(np.abs(emp_at - ref_at)), np.max(np.abs(emp_below - ref_below)))
    )


def qq_table(pvalues) -> QqTable:
    """Sorted p-values against expected uniform percentiles i/(R+1)."""
    p = np.sort(np.asarray(pvalues, dtype=np.float64))
    n = p.size
    expected = np.arange(1, n + 1) / (n + 1)
    return QqTable(np.column_stack([expected, p]), ks_distance_uniform(p))


def qq_export(result: ExperimentResult, method: str) -> QqTable:
    """QQ data for one method of a finished study."""
    method = canonical_method(method)
    if method not in result.methods:
        raise UnknownMethod(method)
    return qq_table(result.methods[method].pvalues)

"""Maximum-likelihood estimation over a restricted profile support.

A multi-start EM drives both the null fit (support induced by a
hierarchy) and the alternative fit (a larger or full support). The
E-step computes per-respondent posteriors over the supported profiles;
the M-step updates proportions by posterior averaging and item
parameters in closed form (expected slip/guess counts for the gate
models, per-pattern expected success rates for the saturated model).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import BaseProfileMissing, DimensionMismatch, EmptySupport
from .models import (
    EPS,
    DinaParams,
    GdinaParams,
    ProportionVector,
    _check_model,
    _log_membership,
    response_prob_table,
    validate_responses,
    warn_constant_items,
)
from .qmatrix import ProfileSet, QMatrix, ideal_response
from .seeding import derive_seed

_TINY = 1e-12


@dataclass(frozen=True)
class FitConfig:
    """Knobs for the EM driver.

    ``loglik_tol`` is an absolute change threshold; relative criteria
    misbehave near zero log-likelihood on tiny instances. With
    ``init_strategy="uniform"`` the first start is deterministic
    (uniform proportions with mid-range item parameters) and the
    remaining starts are random; ``"random"`` randomizes all of them.
    """

    max_iters: int = 1000
    loglik_tol: float = 1e-6
    n_starts: int = 5
    seed: int | None = None
    init_strategy: str = "uniform"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.loglik_tol <= 0:
            raise ValueError("loglik_tol must be positive")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if self.init_strategy not in ("uniform", "random"):
            raise ValueError("init_strategy must be 'uniform' or 'random'")


@dataclass(eq=False)
class CdmFit:
    """A fitted model: item parameters, proportions and diagnostics.

    ``loglik`` is always evaluated at the returned parameters.
    ``loglik_trace`` holds the winning start's per-iteration sequence,
    which is nondecreasing up to floating-point slack.
    """

    model: str
    params: DinaParams | GdinaParams
    p: ProportionVector
    loglik: float
    iters: int
    converged: bool
    n_free_params: int
    loglik_trace: NDArray[np.float64] = field(repr=False, default=None)
    start_index: int = 0
    flipped_items: tuple[int, ...] = ()

    def summary(self) -> dict:
        return {
            "loglik": self.loglik,
            "iters": self.iters,
            "converged": self.converged,
            "n_free_params": self.n_free_params,
        }


class _GateKernel:
    """Closed-form M-step machinery for the slip/guess gate models."""

    def __init__(self, model: str, q: QMatrix, support: ProfileSet, data):
        self.J = q.J
        self.N = data.shape[0]
        self.gamma = (
            ideal_response(q, support, model.upper()).entries.T.astype(np.float64)
        )  # (n, J)
        self.gamma_c = 1.0 - self.gamma
        self.pos_total = data.sum(axis=0).astype(np.float64)

    def theta(self, state):
        s, g = state
        return np.where(self.gamma == 1.0, 1.0 - s, g)

    def init_default(self):
        return np.full(self.J, 0.2), np.full(self.J, 0.2)

    def init_random(self, rng):
        return rng.uniform(0.05, 0.45, self.J), rng.uniform(0.05, 0.45, self.J)

    def state_from_params(self, params: DinaParams):
        return params.slip.copy(), params.guess.copy()

    def m_step(self, state, C, n_a):
        s_old, g_old = state
        pos1 = (self.gamma * C).sum(axis=0)
        tot1 = self.gamma.T @ n_a
        tot0 = self.N - tot1
        pos0 = self.pos_total - pos1
        s = np.where(tot1 > _TINY, 1.0 - pos1 / np.maximum(tot1, _TINY), s_old)
        g = np.where(tot0 > _TINY, pos0 / np.maximum(tot0, _TINY), g_old)
        return np.clip(s, EPS, 1 - EPS), np.clip(g, EPS, 1 - EPS)

    def make_params(self, state) -> DinaParams:
        return DinaParams(state[0], state[1])

    def n_item_params(self) -> int:
        return 2 * self.J


class _SaturatedKernel:
    """Closed-form M-step machinery for the saturated table model."""

    def __init__(self, q: QMatrix, support: ProfileSet):
        self.q = q
        self.J = q.J
        self.n = support.size
        self.required = tuple(q.required_attributes(j) for j in range(q.J))
        self.idx = [
            _pattern_index_for(support.profiles, attrs) for attrs in self.required
        ]
        self.sizes = [2 ** len(attrs) for attrs in self.required]

    def theta(self, state):
        theta = np.empty((self.n, self.J))
        for j, table in enumerate(state):
            theta[:, j] = table[self.idx[j]]
        return theta

    def init_default(self):
        return [
            0.2 + 0.6 * _pattern_counts(size) for size in self.sizes
        ]

    def init_random(self, rng):
        return [rng.uniform(0.1, 0.9, size) for size in self.sizes]

    def state_from_params(self, params: GdinaParams):
        if params.required != self.required:
            raise DimensionMismatch("parameter tables do not match the Q-matrix")
        return [t.copy() for t in params.tables]

    def m_step(self, state, C, n_a):
        new = []
        for j, table in enumerate(state):
            pos = np.bincount(self.idx[j], weights=C[:, j], minlength=self.sizes[j])
            tot = np.bincount(self.idx[j], weights=n_a, minlength=self.sizes[j])
            upd = np.where(
                tot > _TINY, pos / np.maximum(tot, _TINY), table
            )
            new.append(np.clip(upd, EPS, 1 - EPS))
        return new

    def make_params(self, state) -> GdinaParams:
        return GdinaParams(self.required, tuple(state))

    def n_item_params(self) -> int:
        return int(sum(self.sizes))


def _pattern_counts(size: int) -> NDArray[np.float64]:
    m = max(int(size).bit_length() - 1, 1)
    counts = np.array([bin(c).count("1") for c in range(size)], dtype=np.float64)
    return counts / m


def _pattern_index_for(profiles, attrs):
    sub = profiles[:, list(attrs)]
    m = sub.shape[1]
    weights = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    return sub.astype(np.int64) @ weights


def _run_em(kernel, state, p, R, Rc, cfg: FitConfig):
    """One EM start. Returns (state, p, trace, iters, converged)."""
    N = R.shape[0]
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    trace = []
    prev_ll = None
    iters = 0
    converged = False
    for _ in range(cfg.max_iters):
        theta = kernel.theta(state)
        A = R @ np.log(theta).T + Rc @ np.log1p(-theta).T
        A += logp
        m = A.max(axis=1, keepdims=True)
        np.exp(A - m, out=A)
        row_sum = A.sum(axis=1, keepdims=True)
        ll = float((m + np.log(row_sum)).sum())
        trace.append(ll)
        if prev_ll is not None and abs(ll - prev_ll) < cfg.loglik_tol:
            converged = True
            break
        prev_ll = ll
        A /= row_sum  # posteriors, reusing the buffer
        n_a = A.sum(axis=0)
        p = n_a / N
        with np.errstate(divide="ignore"):
            logp = np.log(p)
        C = A.T @ R
        state = kernel.m_step(state, C, n_a)
        iters += 1
    if not converged:
        # final M-step happened after the last evaluation; re-evaluate
        theta = kernel.theta(state)
        A = R @ np.log(theta).T + Rc @ np.log1p(-theta).T
        A += logp
        m = A.max(axis=1, keepdims=True)
        ll = float((m + np.log(np.exp(A - m).sum(axis=1, keepdims=True))).sum())
        trace.append(ll)
    return state, p, np.asarray(trace), iters, converged


def _make_kernel(model: str, q: QMatrix, support: ProfileSet, data):
    if model in ("dina", "dino"):
        return _GateKernel(model, q, support, data)
    return _SaturatedKernel(q, support)


def fit_em(
    model: str,
    q: QMatrix,
    support: ProfileSet,
    data,
    cfg: FitConfig = FitConfig(),
    extra_starts=(),
) -> CdmFit:
    """Best-of-``n_starts`` EM fit restricted to the given support.

    ``extra_starts`` takes ``(params, proportions)`` pairs appended
    after the configured starts; proportions may live on a sub-support
    embedded into ``support`` with zeros elsewhere, which is how a
    nested fit seeds the full fit. Ties in final log-likelihood break
    toward the lower start index, so results are reproducible for a
    fixed seed.
    """
    model = _check_model(model)
    if support.size == 0:
        raise EmptySupport("fit needs a nonempty profile support")
    if support.K != q.K:
        raise DimensionMismatch(f"support has K={support.K}, Q-matrix has K={q.K}")
    data = validate_responses(data, J=q.J)
    warn_constant_items(data)

    kernel = _make_kernel(model, q, support, data)
    R = data.astype(np.float64)
    Rc = 1.0 - R
    n = support.size

    starts = []
    for i in range(cfg.n_starts):
        if i == 0 and cfg.init_strategy == "uniform":
            starts.append((kernel.init_default(), np.full(n, 1.0 / n)))
        else:
            rng = np.random.default_rng(derive_seed(cfg.seed, i))
            starts.append((kernel.init_random(rng), rng.dirichlet(np.ones(n))))
    for params, probs in extra_starts:
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != (n,):
            raise DimensionMismatch("extra start proportions do not match support")
        starts.append((kernel.state_from_params(params), probs))

    best = None
    for i, (state0, p0) in enumerate(starts):
        state, p, trace, iters, converged = _run_em(kernel, state0, p0, R, Rc, cfg)
        ll = float(trace[-1])
        if best is None or ll > best[0]:
            best = (ll, i, state, p, trace, iters, converged)

    ll, start_index, state, p, trace, iters, converged = best
    params = kernel.make_params(state)
    flipped: tuple[int, ...] = ()
    if isinstance(params, DinaParams):
        bad = params.monotonicity_violations()
        if bad:
            flipped = tuple(j + 1 for j in bad)
            warnings.warn(
                f"items {list(flipped)} fit with 1 - slip <= guess; "
                "their success labels may be flipped",
                UserWarning,
                stacklevel=2,
            )
    return CdmFit(
        model=model,
        params=params,
        p=ProportionVector(support, p),
        loglik=ll,
        iters=iters,
        converged=converged,
        n_free_params=(n - 1) + kernel.n_item_params(),
        loglik_trace=trace,
        start_index=start_index,
        flipped_items=flipped,
    )


def posterior_profiles(fit: CdmFit, q: QMatrix, data) -> NDArray[np.float64]:
    """E-step posteriors of the fitted model: an N x |support| stochastic
    matrix whose rows sum to one."""
    data = validate_responses(data, J=q.J)
    theta = response_prob_table(fit.model, fit.params, q, fit.p.support)
    A = _log_membership(theta, data) + fit.p.log_probs()
    m = A.max(axis=1, keepdims=True)
    W = np.exp(A - m)
    W /= W.sum(axis=1, keepdims=True)
    return W


def boundary_score(fit0: CdmFit, q: QMatrix, data, alpha_out) -> float:
    """Average likelihood-ratio pull toward a profile excluded from the
    null support.

    Computes ``mean_i [P(R_i | alpha_out) - P(R_i | all-zero)] / P(R_i)``
    where ``P(R_i)`` marginalizes over the fitted support. This equals
    the derivative of the per-respondent log-likelihood in the excluded
    profile's proportion once the all-zero profile's proportion absorbs
    the simplex constraint. Under data generated from the null it
    converges to zero almost surely.
    """
    data = validate_responses(data, J=q.J)
    support = fit0.p.support
    alpha_out = np.asarray(alpha_out, dtype=np.int8)
    if alpha_out.shape != (q.K,):
        raise DimensionMismatch(f"profile length {alpha_out.shape} != K={q.K}")
    if support.contains(alpha_out):
        raise ValueError("profile is already in the fitted support")
    zero = np.zeros(q.K, dtype=np.int8)
    if not support.contains(zero):
        raise BaseProfileMissing("all-zero profile missing from the support")
    base_idx = support.index_of(zero)

    # one membership computation over support + excluded profile, so that
    # identical kernels yield bitwise-identical columns
    extended = ProfileSet(np.vstack([support.profiles, alpha_out[None, :]]))
    theta = response_prob_table(fit0.model, fit0.params, q, extended)
    L = _log_membership(theta, data)  # (N, n + 1)
    A = L[:, :-1] + fit0.p.log_probs()
    m = A.max(axis=1)
    log_mix = m + np.log(np.exp(A - m[:, None]).sum(axis=1))
    ratio = np.exp(L[:, -1] - log_mix) - np.exp(L[:, base_idx] - log_mix)
    return float(ratio.mean())

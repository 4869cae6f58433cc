"""Item-response probability kernels, proportion vectors, marginal
likelihood and response simulation.

Three model kinds are supported throughout: ``"dina"`` and ``"dino"``
(conjunctive/disjunctive deterministic gates with per-item slip and
guess noise) and ``"gdina"`` (a saturated per-item table over the
patterns of required attributes). Model kind is passed alongside the
parameter object so the same slip/guess parameters can drive either
gate rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import logsumexp

from .errors import DegenerateDataWarning, DimensionMismatch, EmptySupport
from .qmatrix import ProfileSet, QMatrix, ideal_response

#: Probability clamp applied to every item parameter; keeps logs finite
#: and keeps EM away from the boundary.
EPS = 1e-4

MODEL_KINDS = ("dina", "dino", "gdina")

ResponseMatrix = NDArray[np.int8]


def _check_model(model: str) -> str:
    model = model.lower()
    if model not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model!r}, expected one of {MODEL_KINDS}")
    return model


def validate_responses(data, J: int | None = None) -> ResponseMatrix:
    """Validate and normalize an N x J binary response array."""
    arr = np.asarray(data, dtype=np.int8)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise DimensionMismatch(f"responses must be a nonempty 2-D array, got {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("responses must be 0 or 1")
    if J is not None and arr.shape[1] != J:
        raise DimensionMismatch(f"responses have {arr.shape[1]} items, expected {J}")
    return arr


@dataclass(eq=False)
class DinaParams:
    """Per-item slip and guess probabilities.

    Values are clamped into ``[EPS, 1 - EPS]`` at construction. The
    interpretability constraint ``1 - slip_j > guess_j`` is not imposed
    here; fit reporting flags items that violate it.
    """

    slip: NDArray[np.float64]
    guess: NDArray[np.float64]

    def __post_init__(self):
        slip = np.asarray(self.slip, dtype=np.float64)
        guess = np.asarray(self.guess, dtype=np.float64)
        if slip.ndim != 1 or guess.shape != slip.shape:
            raise DimensionMismatch("slip and guess must be equal-length vectors")
        if not (np.isfinite(slip).all() and np.isfinite(guess).all()):
            raise ValueError("slip and guess must be finite")
        slip = np.clip(slip, EPS, 1 - EPS)
        guess = np.clip(guess, EPS, 1 - EPS)
        slip.flags.writeable = False
        guess.flags.writeable = False
        self.slip = slip
        self.guess = guess

    @classmethod
    def constant(cls, J: int, slip: float, guess: float) -> "DinaParams":
        return cls(np.full(J, slip), np.full(J, guess))

    @property
    def J(self) -> int:
        return int(self.slip.shape[0])

    def n_item_params(self) -> int:
        return 2 * self.J

    def monotonicity_violations(self) -> list[int]:
        """0-based items where 1 - slip <= guess (label-flip suspects)."""
        return [int(j) for j in np.flatnonzero(1 - self.slip <= self.guess)]


def _pattern_index(bits: NDArray) -> NDArray[np.int64]:
    """Integer code of each pattern row, first required attribute = MSB."""
    m = bits.shape[1]
    if m == 0:
        return np.zeros(bits.shape[0], dtype=np.int64)
    weights = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    return bits.astype(np.int64) @ weights


@dataclass(eq=False)
class GdinaParams:
    """Saturated per-item response tables.

    For item ``j`` with required attribute set of size ``m_j``, the
    table holds one success probability per reduced pattern (the
    profile restricted to the required attributes), indexed by the
    pattern's integer code with the lowest-numbered required attribute
    as the most significant bit. Values are clamped to
    ``[EPS, 1 - EPS]``.
    """

    required: tuple[tuple[int, ...], ...]
    tables: tuple[NDArray[np.float64], ...]

    def __post_init__(self):
        if len(self.required) != len(self.tables):
            raise DimensionMismatch("one table per item required")
        req = []
        tabs = []
        for attrs, table in zip(self.required, self.tables):
            attrs = tuple(int(a) for a in attrs)
            if list(attrs) != sorted(set(attrs)):
                raise ValueError("required attributes must be sorted and distinct")
            table = np.asarray(table, dtype=np.float64)
            if table.shape != (2 ** len(attrs),):
                raise DimensionMismatch(
                    f"table of length {table.shape} does not match "
                    f"{len(attrs)} required attributes"
                )
            if not np.isfinite(table).all():
                raise ValueError("table values must be finite")
            table = np.clip(table, EPS, 1 - EPS)
            table.flags.writeable = False
            req.append(attrs)
            tabs.append(table)
        self.required = tuple(req)
        self.tables = tuple(tabs)

    @classmethod
    def count_spaced(cls, q: QMatrix, low: float, high: float) -> "GdinaParams":
        """Tables graded by how many required attributes a pattern holds:
        ``low`` at none, ``high`` at all, proportional in between."""
        required = []
        tables = []
        for j in range(q.J):
            attrs = q.required_attributes(j)
            m = len(attrs)
            counts = np.array(
                [bin(c).count("1") for c in range(2**m)], dtype=np.float64
            )
            tables.append(low + (high - low) * counts / m)
            required.append(attrs)
        return cls(tuple(required), tuple(tables))

    @classmethod
    def from_dina(cls, q: QMatrix, params: DinaParams) -> "GdinaParams":
        """Collapse slip/guess into saturated tables: the all-ones
        pattern gets 1 - slip, every other pattern gets guess."""
        required = []
        tables = []
        for j in range(q.J):
            attrs = q.required_attributes(j)
            table = np.full(2 ** len(attrs), params.guess[j])
            table[-1] = 1 - params.slip[j]
            tables.append(table)
            required.append(attrs)
        return cls(tuple(required), tuple(tables))

    @property
    def J(self) -> int:
        return len(self.tables)

    def n_item_params(self) -> int:
        return int(sum(t.shape[0] for t in self.tables))

    def pattern_indices(self, profiles: NDArray) -> list[NDArray[np.int64]]:
        """Per item, the table index of each profile row."""
        return [
            _pattern_index(profiles[:, list(attrs)]) for attrs in self.required
        ]


@dataclass(eq=False)
class ProportionVector:
    """Nonnegative profile proportions over a support, normalized to one.

    Negative entries are rejected; any vector with a positive sum is
    rescaled so the probabilities add to exactly one.
    """

    support: ProfileSet
    probs: NDArray[np.float64]

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.shape[0] != self.support.size:
            raise DimensionMismatch(
                f"proportions of length {probs.shape} do not match "
                f"{self.support.size} support profiles"
            )
        if self.support.size == 0:
            raise EmptySupport("proportion vector needs a nonempty support")
        if not np.isfinite(probs).all():
            raise ValueError("proportions must be finite")
        if (probs < 0).any():
            raise ValueError("proportions must be nonnegative")
        total = probs.sum()
        if total <= 0:
            raise ValueError("proportions must have a positive sum")
        probs = probs / total
        probs.flags.writeable = False
        self.probs = probs

    @classmethod
    def uniform(cls, support: ProfileSet) -> "ProportionVector":
        return cls(support, np.full(support.size, 1.0 / support.size))

    def log_probs(self) -> NDArray[np.float64]:
        with np.errstate(divide="ignore"):
            return np.log(self.probs)


def response_prob_table(
    model: str, params, q: QMatrix, profiles: ProfileSet
) -> NDArray[np.float64]:
    """Success probabilities as an (n_profiles, J) table."""
    model = _check_model(model)
    if model in ("dina", "dino"):
        if not isinstance(params, DinaParams):
            raise TypeError(f"model {model!r} expects DinaParams")
        if params.J != q.J:
            raise DimensionMismatch("parameter length does not match Q-matrix rows")
        gamma = ideal_response(q, profiles, model.upper()).entries.T  # (n, J)
        return np.where(gamma == 1, 1 - params.slip, params.guess)
    if not isinstance(params, GdinaParams):
        raise TypeError("model 'gdina' expects GdinaParams")
    if params.J != q.J:
        raise DimensionMismatch("parameter length does not match Q-matrix rows")
    theta = np.empty((profiles.size, q.J), dtype=np.float64)
    for j, idx in enumerate(params.pattern_indices(profiles.profiles)):
        theta[:, j] = params.tables[j][idx]
    return theta


def item_prob(model: str, params, q: QMatrix, j: int, alpha) -> float:
    """Success probability of item ``j`` (0-based) for one profile."""
    if not (0 <= j < q.J):
        raise IndexError(f"item index {j} out of range for J={q.J}")
    alpha = np.asarray(alpha, dtype=np.int8)
    if alpha.shape != (q.K,):
        raise IndexError(f"profile of length {alpha.shape} does not match K={q.K}")
    table = response_prob_table(model, params, q, ProfileSet(alpha[None, :]))
    return float(table[0, j])


def _log_membership(
    theta: NDArray, data: ResponseMatrix
) -> NDArray[np.float64]:
    """(N, n_profiles) matrix of per-profile response log-likelihoods."""
    log_theta = np.log(theta)
    log_comp = np.log1p(-theta)
    resp = data.astype(np.float64)
    return resp @ log_theta.T + (1.0 - resp) @ log_comp.T


def marginal_loglik(
    model: str, params, p: ProportionVector, q: QMatrix, data
) -> float:
    """Log-likelihood of responses under a profile mixture.

    Each respondent contributes the log of a proportion-weighted sum of
    profile-conditional Bernoulli products; the inner sum is evaluated
    with log-sum-exp stabilization.
    """
    if p.support.size == 0:
        raise EmptySupport("marginal likelihood needs a nonempty support")
    data = validate_responses(data, J=q.J)
    theta = response_prob_table(model, params, q, p.support)
    loglik_rows = _log_membership(theta, data) + p.log_probs()
    return float(logsumexp(loglik_rows, axis=1).sum())


def simulate_responses(
    model: str,
    params,
    p: ProportionVector,
    q: QMatrix,
    N: int,
    seed=None,
    noiseless: bool = False,
) -> tuple[ResponseMatrix, NDArray[np.int8]]:
    """Draw profiles from ``p`` and responses from the item kernels.

    Returns the N x J response matrix together with the drawn N x K
    profile rows. With ``noiseless=True`` (gate models only) responses
    equal the deterministic gate output of the drawn profile, bypassing
    the slip/guess clamp.
    """
    model = _check_model(model)
    if N < 1:
        raise ValueError(f"respondent count must be >= 1, got {N}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(p.support.size, size=N, p=p.probs)
    if noiseless:
        if model == "gdina":
            raise ValueError("noiseless simulation applies to gate models only")
        theta = ideal_response(q, p.support, model.upper()).entries.T.astype(np.float64)
    else:
        theta = response_prob_table(model, params, q, p.support)
    u = rng.random((N, q.J))
    data = (u < theta[idx]).astype(np.int8)
    return data, p.support.profiles[idx].copy()


def warn_constant_items(data: ResponseMatrix) -> list[int]:
    """Emit a warning for items whose responses never vary; returns the
    0-based offending items."""
    means = data.mean(axis=0)
    constant = [int(j) for j in np.flatnonzero((means == 0) | (means == 1))]
    if constant:
        warnings.warn(
            f"items {[j + 1 for j in constant]} have constant responses; "
            "estimates for them will sit at the probability clamp",
            DegenerateDataWarning,
            stacklevel=3,
        )
    return constant

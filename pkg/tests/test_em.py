"""Tests for the EM fitting engine and the boundary-score diagnostic."""

import warnings

import numpy as np
import pytest

from hiercdm import (
    BaseProfileMissing,
    DegenerateDataWarning,
    DinaParams,
    EmptySupport,
    FitConfig,
    Hierarchy,
    ProfileSet,
    ProportionVector,
    QMatrix,
    boundary_score,
    fit_em,
    induce_profile_set,
    marginal_loglik,
    posterior_profiles,
    response_prob_table,
    simulate_responses,
)
from hiercdm.lrt import fit_null_alt
from hiercdm.models import EPS

from conftest import q

THREE_STACKED_I2 = [[1, 0], [0, 1], [1, 0], [0, 1], [1, 0], [0, 1]]


def quiet_fit(*args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fit_em(*args, **kwargs)


def random_search_best(qm, support, data, n_points, seed):
    """Best log-likelihood over random draws of the full parameter block."""
    rng = np.random.default_rng(seed)
    from hiercdm import ideal_response

    gamma = ideal_response(qm, support, "DINA").entries.T.astype(float)
    R = data.astype(float)
    Rc = 1.0 - R
    best = -np.inf
    for _ in range(n_points):
        s = rng.uniform(EPS, 0.5, qm.J)
        g = rng.uniform(EPS, 0.5, qm.J)
        p = rng.dirichlet(np.ones(support.size))
        theta = np.where(gamma == 1, 1 - s, g)
        L = R @ np.log(theta).T + Rc @ np.log1p(-theta).T
        like = np.exp(L) @ p
        ll = float(np.log(like).sum())
        best = max(best, ll)
    return best


class TestFitEm:
    def test_em_beats_random_search(self):
        rng = np.random.default_rng(101)
        for trial in range(4):
            J = int(rng.integers(4, 7))
            qm, params, p, data = _dina_instance(rng, J=J, N=200)
            support = p.support
            fit = quiet_fit("dina", qm, support, data, FitConfig(seed=trial, n_starts=3))
            oracle = random_search_best(qm, support, data, 2000, seed=trial)
            assert fit.loglik >= oracle - 1e-4

    def test_monotone_trace(self):
        rng = np.random.default_rng(103)
        qm, params, p, data = _dina_instance(rng, J=6, N=150)
        fit = quiet_fit("dina", qm, p.support, data, FitConfig(seed=1))
        assert (np.diff(fit.loglik_trace) > -1e-10).all()

    def test_loglik_matches_recomputation(self):
        rng = np.random.default_rng(107)
        qm, params, p, data = _dina_instance(rng, J=5, N=100)
        fit = quiet_fit("dina", qm, p.support, data, FitConfig(seed=2))
        recomputed = marginal_loglik("dina", fit.params, fit.p, qm, data)
        assert fit.loglik == pytest.approx(recomputed, abs=1e-9)

    def test_noiseless_recovery(self):
        qm = q(THREE_STACKED_I2)
        support = induce_profile_set(Hierarchy(2, [(1, 2)]))
        truth = ProportionVector(support, np.array([1 / 3, 1 / 3, 1 / 3]))
        params = DinaParams.constant(6, 0.0, 0.0)
        data, profiles = simulate_responses(
            "dina", params, truth, qm, 300, seed=11, noiseless=True
        )
        fit = quiet_fit("dina", qm, support, data, FitConfig(seed=3))
        freq = np.array(
            [(profiles == support.profiles[a]).all(axis=1).mean() for a in range(3)]
        )
        np.testing.assert_allclose(fit.p.probs, freq, atol=1e-10)
        np.testing.assert_allclose(fit.params.slip, EPS)
        np.testing.assert_allclose(fit.params.guess, EPS)

    def test_single_profile_support_is_bernoulli_mle(self):
        qm = q([[1, 0], [0, 1], [1, 1]])
        rng = np.random.default_rng(109)
        data = rng.integers(0, 2, size=(50, 3)).astype(np.int8)
        # keep every item non-constant for a clean closed form
        data[0] = [0, 0, 0]
        data[1] = [1, 1, 1]
        support = ProfileSet([[1, 0]])
        fit = quiet_fit("dina", qm, support, data, FitConfig(seed=4, n_starts=1))
        assert fit.p.probs.tolist() == [1.0]
        means = data.mean(axis=0)
        # items requiring only attribute 1 are passed (gate = 1): slip MLE
        assert fit.params.slip[0] == pytest.approx(1 - means[0])
        # the other items have gate = 0: guess MLE
        assert fit.params.guess[1] == pytest.approx(means[1])
        assert fit.params.guess[2] == pytest.approx(means[2])

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(113)
        qm, params, p, data = _dina_instance(rng, J=5, N=120)
        cfg = FitConfig(seed=99, n_starts=3)
        f1 = quiet_fit("dina", qm, p.support, data, cfg)
        f2 = quiet_fit("dina", qm, p.support, data, cfg)
        assert f1.loglik == f2.loglik
        np.testing.assert_array_equal(f1.p.probs, f2.p.probs)
        np.testing.assert_array_equal(f1.params.slip, f2.params.slip)

    def test_duplicated_rows_double_loglik_same_argmax(self):
        rng = np.random.default_rng(127)
        qm, params, p, data = _dina_instance(rng, J=5, N=100)
        # tight tolerance so both runs land at the shared optimum; the
        # absolute convergence threshold otherwise stops them at
        # slightly different points because doubling the data doubles
        # each iteration's log-likelihood change
        cfg = FitConfig(seed=7, n_starts=2, loglik_tol=1e-10, max_iters=20_000)
        f1 = quiet_fit("dina", qm, p.support, data, cfg)
        f2 = quiet_fit("dina", qm, p.support, np.vstack([data, data]), cfg)
        assert f2.loglik == pytest.approx(2 * f1.loglik, abs=1e-5)
        np.testing.assert_allclose(f1.p.probs, f2.p.probs, atol=1e-4)

    def test_nested_fit_never_beats_seeded_full_fit(self):
        rng = np.random.default_rng(131)
        for trial in range(5):
            qm, params, p, data = _dina_instance(rng, J=6, N=150)
            support0 = induce_profile_set(Hierarchy(2, [(1, 2)]))
            support1 = ProfileSet.full(2)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fits = fit_null_alt(
                    "dina", qm, support0, support1, data, FitConfig(seed=trial, n_starts=2)
                )
            assert fits.lambda_obs >= 0.0

    def test_empty_support_rejected(self):
        qm = q([[1, 0]])
        empty = ProfileSet(np.zeros((0, 2), dtype=np.int8), K=2)
        with pytest.raises(EmptySupport):
            fit_em("dina", qm, empty, np.array([[1, 0]]))

    def test_constant_item_warns(self):
        qm = q([[1, 0], [0, 1]])
        data = np.array([[1, 0], [1, 1], [1, 0]], dtype=np.int8)
        with pytest.warns(DegenerateDataWarning):
            fit_em("dina", qm, ProfileSet.full(2), data, FitConfig(seed=1, n_starts=1))

    def test_gdina_fit_runs_and_nests(self):
        rng = np.random.default_rng(137)
        qm, params, p, data = _dina_instance(rng, J=5, N=200)
        support0 = induce_profile_set(Hierarchy(2, [(1, 2)]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fits = fit_null_alt(
                "gdina", qm, support0, ProfileSet.full(2), data,
                FitConfig(seed=5, n_starts=2),
            )
        assert fits.lambda_obs >= 0.0
        assert fits.fit1.n_free_params > fits.fit0.n_free_params

    def test_gdina_recovers_generating_tables(self):
        qm = q([[1, 0], [0, 1], [1, 1], [1, 0], [0, 1], [1, 1]])
        from hiercdm import GdinaParams

        truth_params = GdinaParams.count_spaced(qm, 0.15, 0.85)
        full = ProfileSet.full(2)
        truth_p = ProportionVector(full, np.array([0.3, 0.2, 0.2, 0.3]))
        data, _ = simulate_responses(
            "gdina", truth_params, truth_p, qm, 4000, seed=19
        )
        fit = quiet_fit(
            "gdina", qm, full, data, FitConfig(seed=4, n_starts=3)
        )
        np.testing.assert_allclose(fit.p.probs, truth_p.probs, atol=0.05)
        for j in range(qm.J):
            np.testing.assert_allclose(
                fit.params.tables[j], truth_params.tables[j], atol=0.08
            )

    def test_free_parameter_counts(self):
        rng = np.random.default_rng(139)
        qm = q([[1, 0], [0, 1], [1, 1]])
        data = rng.integers(0, 2, size=(40, 3)).astype(np.int8)
        data[:2] = [[0, 1, 0], [1, 0, 1]]
        full = ProfileSet.full(2)
        fit_d = quiet_fit("dina", qm, full, data, FitConfig(seed=6, n_starts=1))
        assert fit_d.n_free_params == 3 + 2 * 3
        fit_g = quiet_fit("gdina", qm, full, data, FitConfig(seed=6, n_starts=1))
        assert fit_g.n_free_params == 3 + (2 + 2 + 4)


class TestPosteriorProfiles:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(149)
        qm, params, p, data = _dina_instance(rng, J=5, N=80)
        fit = quiet_fit("dina", qm, p.support, data, FitConfig(seed=8, n_starts=1))
        W = posterior_profiles(fit, qm, data)
        np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-10)

    def test_noiseless_posteriors_one_hot(self):
        qm = q(THREE_STACKED_I2)
        support = induce_profile_set(Hierarchy(2, [(1, 2)]))
        truth = ProportionVector.uniform(support)
        data, profiles = simulate_responses(
            "dina", DinaParams.constant(6, 0.0, 0.0), truth, qm, 60, seed=13,
            noiseless=True,
        )
        fit = quiet_fit("dina", qm, support, data, FitConfig(seed=9))
        W = posterior_profiles(fit, qm, data)
        hard = W.argmax(axis=1)
        assert (W.max(axis=1) > 1 - 1e-9).all()
        for i in range(60):
            np.testing.assert_array_equal(support.profiles[hard[i]], profiles[i])

    def test_one_hot_prior_copies_regardless_of_data(self):
        qm = q([[1, 0], [0, 1]])
        support = ProfileSet([[0, 0], [1, 1]])
        params = DinaParams.constant(2, 0.2, 0.2)
        p = ProportionVector(support, np.array([1.0, 0.0]))
        from hiercdm.em import CdmFit

        fit = CdmFit(
            model="dina", params=params, p=p, loglik=0.0, iters=0,
            converged=True, n_free_params=5,
        )
        data = np.array([[1, 1], [0, 0], [1, 0]], dtype=np.int8)
        W = posterior_profiles(fit, qm, data)
        np.testing.assert_array_equal(W, np.tile([1.0, 0.0], (3, 1)))


class TestBoundaryScore:
    def _fit_chain2(self, rng, J=6, N=400, slip=0.25):
        rows = ([[1, 0]] * (J // 2)) + ([[0, 1]] * (J - J // 2))
        qm = QMatrix(np.array(rows, dtype=np.int8))
        support = induce_profile_set(Hierarchy(2, [(1, 2)]))
        truth = ProportionVector.uniform(support)
        params = DinaParams.constant(J, slip, slip)
        data, _ = simulate_responses(
            "dina", params, truth, qm, N, seed=int(rng.integers(1 << 30))
        )
        fit = quiet_fit("dina", qm, support, data, FitConfig(seed=1, n_starts=2))
        return qm, data, fit

    def test_matches_finite_difference(self):
        rng = np.random.default_rng(151)
        for _ in range(5):
            qm, data, fit = self._fit_chain2(rng)
            got = boundary_score(fit, qm, data, (0, 1))
            expected = _fd_score(fit, qm, data, (0, 1))
            assert got == pytest.approx(expected, abs=1e-6)

    def test_identical_kernels_give_exact_zero(self):
        rng = np.random.default_rng(157)
        qm = q([[1, 0]] * 4)
        support = induce_profile_set(Hierarchy(2, [(1, 2)]))
        params = DinaParams.constant(4, 0.2, 0.2)
        truth = ProportionVector.uniform(support)
        data, _ = simulate_responses("dina", params, truth, qm, 100, seed=17)
        fit = quiet_fit("dina", qm, support, data, FitConfig(seed=2, n_starts=1))
        # profiles (0,1) and (0,0) agree on every attribute-1-only item
        assert boundary_score(fit, qm, data, (0, 1)) == 0.0

    def test_profile_in_support_rejected(self):
        rng = np.random.default_rng(163)
        qm, data, fit = self._fit_chain2(rng)
        with pytest.raises(ValueError, match="already in"):
            boundary_score(fit, qm, data, (1, 0))

    def test_missing_base_profile(self):
        rng = np.random.default_rng(167)
        qm, data, _ = self._fit_chain2(rng)
        support = ProfileSet([[1, 0], [1, 1]])
        fit = quiet_fit("dina", qm, support, data, FitConfig(seed=3, n_starts=1))
        with pytest.raises(BaseProfileMissing):
            boundary_score(fit, qm, data, (0, 1))


def _fd_score(fit, qm, data, alpha_out, h=1e-6):
    """Central finite difference of the average log-likelihood in the
    excluded profile's proportion, renormalized against the all-zero
    profile, computed in plain linear space."""
    support = fit.p.support
    ext = ProfileSet(np.vstack([support.profiles, np.asarray(alpha_out, np.int8)[None]]))
    theta = response_prob_table(fit.model, fit.params, qm, ext)
    R = data.astype(float)
    like = np.exp(
        R @ np.log(theta).T + (1 - R) @ np.log1p(-theta).T
    )  # (N, n+1)
    base = support.index_of(np.zeros(support.K, dtype=np.int8))

    def avg_ll(t):
        probs = np.append(fit.p.probs, t)
        probs[base] -= t
        return float(np.log(like @ probs).mean())

    return (avg_ll(h) - avg_ll(-h)) / (2 * h)


def _dina_instance(rng, J, N, K=2):
    rows = rng.integers(1, 2**K, size=J)
    entries = ((rows[:, None] >> np.arange(K - 1, -1, -1)) & 1).astype(np.int8)
    qm = QMatrix(entries)
    params = DinaParams(rng.uniform(0.1, 0.3, J), rng.uniform(0.1, 0.3, J))
    support = ProfileSet.full(K)
    p = ProportionVector(support, rng.dirichlet(np.ones(support.size) * 3))
    data, _ = simulate_responses(
        "dina", params, p, qm, N, seed=int(rng.integers(1 << 30))
    )
    return qm, params, p, data

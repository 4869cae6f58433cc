"""Tests for the testability condition checkers."""

import itertools

import numpy as np
import pytest

from hiercdm import (
    Hierarchy,
    NotASubset,
    ProfileSet,
    QMatrix,
    check_dina_conditional,
    check_dina_strict,
    check_general_generic,
    check_general_strict,
    induce_profile_set,
    profile_separation,
)
from hiercdm.fixtures import ecpe_linear_hierarchy, ecpe_qmatrix
from hiercdm.testability import verify_strict_certificate

from conftest import (
    Q_CONDITIONAL_K3,
    Q_GENERIC_K3,
    Q_MISSING_PURE_ITEM,
    Q_NO_IDENTITY_K3,
    Q_TWO_IDENTITIES_K2,
    q,
)


def brute_force_dina_conditions(qm: QMatrix, h: Hierarchy):
    """Independent re-evaluation of the three conjunctive-model
    conditions by direct enumeration."""
    from hiercdm import densify, sparsify

    entries = qm.entries
    K = qm.K
    identity_rows = {}
    for j in range(qm.J):
        row = tuple(entries[j])
        if sum(row) == 1:
            k = row.index(1)
            identity_rows.setdefault(k, j)
    cond1 = len(identity_rows) == K
    sparse = sparsify(qm, h).entries
    cond2 = all(sparse[:, k].sum() >= 3 for k in range(K))
    cond3 = None
    if cond1:
        keep = [j for j in range(qm.J) if j not in set(identity_rows.values())]
        dense = densify(QMatrix(entries[keep]), h).entries
        cond3 = len({tuple(col) for col in dense.T.tolist()}) == K
    return cond1, cond2, cond3


class TestDinaStrict:
    def test_missing_pure_item_violated(self, chain2):
        report = check_dina_strict(q(Q_MISSING_PURE_ITEM), chain2)
        assert report.verdict == "Violated"
        assert report.condition("identity_submatrix").status == "fail"
        assert 2 in report.condition("identity_submatrix").witness["missing_attributes"]

    def test_two_identities_satisfied(self, chain2):
        report = check_dina_strict(q(Q_TWO_IDENTITIES_K2), chain2)
        assert report.verdict == "Satisfied"
        assert all(c.status == "pass" for c in report.conditions)
        assert report.condition("identity_submatrix").witness["rows"] == [1, 2]

    @pytest.mark.parametrize(
        "edges", [[], [(1, 2)], [(1, 2), (2, 3)], [(3, 1)], [(1, 3), (2, 3)]]
    )
    def test_triple_identity_matches_brute_force(self, edges):
        qm = q(np.vstack([np.eye(3, dtype=np.int8)] * 3))
        h = Hierarchy(3, edges)
        report = check_dina_strict(qm, h)
        c1, c2, c3 = brute_force_dina_conditions(qm, h)
        assert (report.condition("identity_submatrix").status == "pass") == c1
        assert (report.condition("sparsified_three_per_column").status == "pass") == c2
        got3 = report.condition("densified_remainder_distinct_columns").status
        assert (got3 == "pass") == c3
        assert report.condition("identity_submatrix").status == "pass"
        assert report.condition("sparsified_three_per_column").status == "pass"

    def test_deterministic_witness(self, chain2):
        r1 = check_dina_strict(q(Q_TWO_IDENTITIES_K2), chain2)
        r2 = check_dina_strict(q(Q_TWO_IDENTITIES_K2), chain2)
        assert r1.to_dict() == r2.to_dict()


class TestDinaConditional:
    def test_conditional_design_satisfied(self, chain3):
        report = check_dina_conditional(q(Q_CONDITIONAL_K3), chain3, [(1, 2)])
        assert report.verdict == "Satisfied"
        witness = report.condition("sparsified_identity_and_single_targets").witness
        assert set(witness["single_attribute_rows"]) == {"1", "2"}

    def test_empty_subset_reduces_to_sparsified_identity(self, chain3):
        report = check_dina_conditional(q(Q_CONDITIONAL_K3), chain3, [])
        assert report.verdict == "Satisfied"

    def test_not_a_subset(self, chain3):
        with pytest.raises(NotASubset):
            check_dina_conditional(q(Q_CONDITIONAL_K3), chain3, [(3, 1)])

    def test_missing_single_attribute_item_violated(self, chain3):
        # no row sparsifies to a pure attribute-2 item: rows with a 1 in
        # column 2 all carry a 1 in column 3 as well, so they sparsify
        # to pure attribute-3 rows.
        qm = q(
            [
                [1, 0, 0],
                [0, 1, 1],
                [0, 0, 1],
                [1, 0, 0],
                [0, 1, 1],
                [0, 0, 1],
            ]
        )
        report = check_dina_conditional(qm, chain3, [(1, 2)])
        assert report.verdict == "Violated"
        cond = report.condition("sparsified_identity_and_single_targets")
        assert cond.status == "fail"
        # brute-force: confirm no sparsified row is exactly (0, 1, 0)
        from hiercdm import sparsify

        sparse = sparsify(qm, chain3).entries
        assert not any(tuple(r) == (0, 1, 0) for r in sparse.tolist())


class TestGeneralStrict:
    def test_two_identity_design_certificate(self, chain2):
        report = check_general_strict(q(Q_TWO_IDENTITIES_K2), chain2)
        assert report.verdict == "Satisfied"
        cond1 = report.condition("order_matched_item_sets")
        assert cond1.witness["s1"] == [1, 2]
        assert cond1.witness["s2"] == [3, 4]
        items = {e["item"] for e in report.condition("separating_items").witness["separators"]}
        assert items == {5, 6}

    def test_missing_pure_item_violated_at_separation(self, chain2):
        report = check_general_strict(q(Q_MISSING_PURE_ITEM), chain2)
        assert report.verdict == "Violated"
        cond = report.condition("profile_separation")
        assert cond.status == "fail"
        assert cond.witness == {"profile_in": (0, 0), "profile_out": (0, 1)}

    def test_no_identity_design_separation_passes(self, chain3):
        report = check_general_strict(q(Q_NO_IDENTITY_K3), chain3)
        assert report.condition("profile_separation").status == "pass"
        # two chain profiles share a constraint column, so no item set
        # can have distinct columns: the search is inconclusive.
        assert report.verdict == "Inconclusive"

    def test_certificate_rechecker_rejects_bad_sets(self, chain2):
        qm = q(Q_TWO_IDENTITIES_K2)
        assert verify_strict_certificate(qm, chain2, (0, 1), (2, 3))
        assert not verify_strict_certificate(qm, chain2, (0, 1), (1, 2))
        assert not verify_strict_certificate(qm, chain2, (0,), (1,))

    def test_cap_validation(self, chain2):
        with pytest.raises(ValueError, match="cap"):
            check_general_strict(q(Q_TWO_IDENTITIES_K2), chain2, cap=1)

    def test_budget_exhaustion_is_inconclusive(self, chain2):
        report = check_general_strict(
            q(Q_TWO_IDENTITIES_K2), chain2, pair_budget=1
        )
        assert report.verdict == "Inconclusive"
        assert report.search_budget_hit


class TestGeneralGeneric:
    def test_generic_design_satisfied(self, chain3):
        report = check_general_generic(q(Q_GENERIC_K3), chain3)
        assert report.verdict == "Satisfied"

    def test_two_identity_design_satisfied(self, chain2):
        report = check_general_generic(q(Q_TWO_IDENTITIES_K2), chain2)
        assert report.verdict == "Satisfied"
        blocks = report.condition("two_disjoint_diagonal_blocks").witness
        assert blocks["block1"] == {"1": 1, "2": 2}
        assert blocks["block2"] == {"1": 3, "2": 4}

    def test_uncovered_column_violated(self, chain2):
        # two identities and remainder rows that never touch attribute 2
        qm = q([[1, 0], [0, 1], [1, 0], [0, 1], [1, 0], [1, 0]])
        report = check_general_generic(qm, chain2)
        assert report.verdict == "Violated"
        cond = report.condition("remaining_rows_cover_attributes")
        assert cond.status == "fail"
        assert cond.witness["uncovered_attributes"] == [2]

    def test_infeasible_blocks(self, chain2):
        qm = q([[1, 0], [0, 1], [1, 1]])
        report = check_general_generic(qm, chain2)
        assert report.condition("two_disjoint_diagonal_blocks").status == "fail"
        assert report.verdict == "Violated"

    def test_ecpe_linear_satisfied(self):
        report = check_general_generic(ecpe_qmatrix(), ecpe_linear_hierarchy())
        assert report.verdict == "Satisfied"


class TestProfileSeparation:
    def test_generic_design_true(self, chain3):
        ok, pair = profile_separation(q(Q_GENERIC_K3), induce_profile_set(chain3))
        assert ok and pair is None

    def test_missing_pure_item_false_with_witness(self, chain2):
        a0 = ProfileSet([[0, 0], [1, 0], [1, 1]])
        ok, pair = profile_separation(q(Q_MISSING_PURE_ITEM), a0)
        assert not ok
        assert pair == ((0, 0), (0, 1))

    def test_identity_submatrix_always_separates(self):
        # every hierarchy over K = 3: an embedded identity forces the
        # supported columns apart from the rest
        base = np.vstack([np.eye(3, dtype=np.int8), [[1, 1, 0], [1, 1, 1]]])
        qm = QMatrix(base)
        pairs = [(i, j) for i in range(1, 4) for j in range(1, 4) if i != j]
        count = 0
        for r in range(len(pairs) + 1):
            for combo in itertools.combinations(pairs, r):
                try:
                    h = Hierarchy(3, combo)
                except Exception:
                    continue
                a0 = induce_profile_set(h)
                if a0.size == 8:
                    continue  # no excluded profiles to separate
                ok, _ = profile_separation(qm, a0)
                assert ok
                count += 1
        assert count > 10


class TestStrictImpliesSeparation:
    def test_satisfied_strict_check_implies_profile_separation(self):
        # random designs at K in {2, 3}: whenever the conjunctive
        # checklist passes, the supported constraint columns must be
        # separated from the unsupported ones
        rng = np.random.default_rng(271)
        confirmed = 0
        for _ in range(200):
            K = int(rng.integers(2, 4))
            extra = int(rng.integers(2, 7))
            rows = rng.integers(1, 2**K, size=extra)
            rest = ((rows[:, None] >> np.arange(K - 1, -1, -1)) & 1).astype(np.int8)
            eye = np.eye(K, dtype=np.int8)
            qm = QMatrix(np.vstack([eye, eye, rest]))
            pairs = [(i, j) for i in range(1, K + 1) for j in range(1, K + 1) if i != j]
            picked = [pairs[i] for i in rng.choice(len(pairs), size=min(2, len(pairs)), replace=False)]
            try:
                h = Hierarchy(K, picked)
            except Exception:
                continue
            if check_dina_strict(qm, h).verdict != "Satisfied":
                continue
            a0 = induce_profile_set(h)
            if a0.size == 2**K:
                continue
            ok, _ = profile_separation(qm, a0)
            assert ok
            confirmed += 1
        assert confirmed >= 5


class TestReportShape:
    def test_verdicts_partition(self, chain2):
        reports = [
            check_dina_strict(q(Q_MISSING_PURE_ITEM), chain2),
            check_dina_strict(q(Q_TWO_IDENTITIES_K2), chain2),
            check_general_strict(q(Q_NO_IDENTITY_K3), Hierarchy(3, [(1, 2), (2, 3)])),
        ]
        for r in reports:
            assert r.verdict in ("Satisfied", "Violated", "Inconclusive")
            statuses = {c.status for c in r.conditions}
            if r.verdict == "Satisfied":
                assert statuses == {"pass"}
            elif r.verdict == "Violated":
                assert "fail" in statuses
            else:
                assert "fail" not in statuses

    def test_to_dict_json_shape(self, chain2):
        d = check_dina_strict(q(Q_TWO_IDENTITIES_K2), chain2).to_dict()
        assert set(d) == {"verdict", "conditions", "search_budget_hit"}
        assert all(set(c) == {"id", "status", "witness"} for c in d["conditions"])

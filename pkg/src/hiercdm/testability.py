"""Sufficient-condition checks for whether a hypothesized attribute
hierarchy is distinguishable from its alternatives under a given Q-matrix.

Each checker returns a :class:`TestabilityReport` listing the individual
conditions with witnesses for passes and counterexamples for failures.
The conditions are sufficient only, so a failed existence search yields
an ``Inconclusive`` verdict rather than ``Violated``; only conditions
that are directly refutable can produce ``Violated``.

Witnesses use 1-based item and attribute indices so they line up with
the file formats and CLI output.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotASubset
from .qmatrix import (
    Hierarchy,
    Profile,
    ProfileSet,
    QMatrix,
    complement_profile_set,
    constraint_matrix,
    densify,
    induce_profile_set,
    sparsify,
    _dominance_relation,
)

DEFAULT_PAIR_BUDGET = 10**6
#: Ceiling on how many candidate item sets are materialized in the
#: strict-check search before the budget flag is raised.
MAX_CANDIDATE_SETS = 4000

SATISFIED = "Satisfied"
VIOLATED = "Violated"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of one checklist condition.

    ``status`` is ``"pass"``, ``"fail"`` or ``"inconclusive"``; the
    witness is a JSON-serializable dict naming item rows, attribute
    columns or profile pairs (1-based where indices appear).
    """

    id: str
    status: str
    witness: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TestabilityReport:
    """Aggregate verdict over a condition checklist.

    ``Satisfied`` iff every condition passed; ``Violated`` iff some
    directly refutable condition failed; ``Inconclusive`` when an
    existence search ran out of candidates or budget without a
    certificate or a disproof.
    """

    verdict: str
    conditions: tuple[ConditionResult, ...]
    search_budget_hit: bool = False

    def condition(self, cond_id: str) -> ConditionResult:
        for cond in self.conditions:
            if cond.id == cond_id:
                return cond
        raise KeyError(cond_id)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "conditions": [
                {"id": c.id, "status": c.status, "witness": c.witness}
                for c in self.conditions
            ],
            "search_budget_hit": self.search_budget_hit,
        }


def _verdict_from_conditions(conditions) -> str:
    statuses = [c.status for c in conditions]
    if all(s == "pass" for s in statuses):
        return SATISFIED
    if any(s == "fail" for s in statuses):
        return VIOLATED
    return INCONCLUSIVE


def _single_attribute_rows(entries: np.ndarray) -> dict[int, int]:
    """First row equal to each standard basis vector; 0-based
    attribute -> 0-based row, only for attributes that have one."""
    rows: dict[int, int] = {}
    row_sums = entries.sum(axis=1)
    for j in range(entries.shape[0]):
        if row_sums[j] == 1:
            k = int(np.flatnonzero(entries[j])[0])
            rows.setdefault(k, j)
    return rows


def _identity_condition(entries: np.ndarray) -> ConditionResult:
    """Every attribute must own a single-attribute row (the rows then
    form an identity submatrix after reordering)."""
    K = entries.shape[1]
    rows = _single_attribute_rows(entries)
    missing = [k + 1 for k in range(K) if k not in rows]
    if missing:
        return ConditionResult(
            "identity_submatrix", "fail", {"missing_attributes": missing}
        )
    witness = [rows[k] + 1 for k in range(K)]
    return ConditionResult("identity_submatrix", "pass", {"rows": witness})


def _column_ones_condition(sparse_q: QMatrix, minimum: int = 3) -> ConditionResult:
    counts = sparse_q.entries.sum(axis=0)
    deficient = [k + 1 for k in range(sparse_q.K) if counts[k] < minimum]
    witness = {"column_ones": [int(c) for c in counts]}
    if deficient:
        witness["deficient_attributes"] = deficient
        return ConditionResult("sparsified_three_per_column", "fail", witness)
    return ConditionResult("sparsified_three_per_column", "pass", witness)


def _distinct_densified_condition(
    q: QMatrix, h: Hierarchy, identity_rows_0b: list[int]
) -> ConditionResult:
    """The densified remainder (Q minus the identity witness rows) must
    carry K distinct column vectors."""
    if len(identity_rows_0b) >= q.J:
        return ConditionResult(
            "densified_remainder_distinct_columns",
            "fail",
            {
                "distinct_columns": 0,
                "required": q.K,
                "reason": "no rows remain outside the identity witness",
            },
        )
    remainder = q.drop_rows(identity_rows_0b)
    dense = densify(remainder, h)
    cols = {tuple(col) for col in dense.entries.T.tolist()}
    witness = {"distinct_columns": len(cols), "required": q.K}
    status = "pass" if len(cols) == q.K else "fail"
    return ConditionResult("densified_remainder_distinct_columns", status, witness)


def check_dina_strict(q: QMatrix, h: Hierarchy) -> TestabilityReport:
    """Three-part checklist for conjunctive-model testability of ``h``.

    1. the Q-matrix contains a K x K identity submatrix (witness: the
       first single-attribute row per attribute);
    2. the sparsified Q-matrix has at least three 1-entries per column;
    3. the densified remainder (Q minus the identity witness rows) has
       K distinct column vectors.
    """
    if q.K != h.K:
        raise DimensionMismatch(f"Q-matrix has K={q.K}, hierarchy has K={h.K}")
    cond1 = _identity_condition(q.entries)
    cond2 = _column_ones_condition(sparsify(q, h))
    if cond1.status == "pass":
        rows_0b = [r - 1 for r in cond1.witness["rows"]]
        cond3 = _distinct_densified_condition(q, h, rows_0b)
    else:
        cond3 = ConditionResult(
            "densified_remainder_distinct_columns",
            "inconclusive",
            {"reason": "no identity witness to remove"},
        )
    conditions = (cond1, cond2, cond3)
    return TestabilityReport(_verdict_from_conditions(conditions), conditions)


def check_dina_conditional(
    q: QMatrix, h0: Hierarchy, subset
) -> TestabilityReport:
    """Checklist for testing a subset of edges given the rest of ``h0``.

    Replaces the identity condition of :func:`check_dina_strict` with
    its relaxation: the sparsified Q-matrix must contain the identity
    submatrix, and every attribute touched by the tested edges must
    have a single-attribute item row there. Conditions 2 and 3 are
    unchanged.
    """
    if q.K != h0.K:
        raise DimensionMismatch(f"Q-matrix has K={q.K}, hierarchy has K={h0.K}")
    subset_edges = {(int(k), int(l)) for k, l in subset}
    if not subset_edges <= set(h0.edges):
        raise NotASubset(
            f"tested edges {sorted(subset_edges)} not contained in "
            f"hierarchy edges {sorted(h0.edges)}"
        )
    sparse = sparsify(q, h0)
    single_rows = _single_attribute_rows(sparse.entries)
    identity = _identity_condition(sparse.entries)
    involved = sorted({k for edge in subset_edges for k in edge})
    missing = [k for k in involved if (k - 1) not in single_rows]
    witness = dict(identity.witness)
    witness["single_attribute_rows"] = {
        str(k): single_rows[k - 1] + 1 for k in involved if (k - 1) in single_rows
    }
    if identity.status == "pass" and not missing:
        cond1 = ConditionResult("sparsified_identity_and_single_targets", "pass", witness)
    else:
        if missing:
            witness["attributes_without_single_item"] = missing
        cond1 = ConditionResult("sparsified_identity_and_single_targets", "fail", witness)
    cond2 = _column_ones_condition(sparse)
    if identity.status == "pass":
        rows_0b = [r - 1 for r in identity.witness["rows"]]
        cond3 = _distinct_densified_condition(q, h0, rows_0b)
    else:
        cond3 = ConditionResult(
            "densified_remainder_distinct_columns",
            "inconclusive",
            {"reason": "no identity witness to remove"},
        )
    conditions = (cond1, cond2, cond3)
    return TestabilityReport(_verdict_from_conditions(conditions), conditions)


def profile_separation(
    q: QMatrix, a0: ProfileSet
) -> tuple[bool, tuple[Profile, Profile] | None]:
    """Whether every constraint column of ``a0`` differs from every
    constraint column of its complement.

    Returns ``(True, None)`` or ``(False, (profile_in, profile_out))``
    with the first violating pair in canonical order.
    """
    if q.K != a0.K:
        raise DimensionMismatch(f"Q-matrix has K={q.K}, profiles have K={a0.K}")
    comp = complement_profile_set(a0)
    gin = constraint_matrix(q, a0).entries
    gout = constraint_matrix(q, comp).entries
    for a in range(a0.size):
        for b in range(comp.size):
            if (gin[:, a] == gout[:, b]).all():
                return False, (
                    tuple(int(x) for x in a0.profiles[a]),
                    tuple(int(x) for x in comp.profiles[b]),
                )
    return True, None


def _distinct_columns(entries: np.ndarray, items: tuple[int, ...]) -> bool:
    sub = entries[list(items)]
    return len({tuple(col) for col in sub.T.tolist()}) == sub.shape[1]


def _comparable_pairs(relation: np.ndarray) -> list[tuple[int, int]]:
    """Distinct ordered pairs (a, b) with column a dominating column b."""
    n = relation.shape[0]
    return [(a, b) for a in range(n) for b in range(n) if a != b and relation[a, b]]


def _separators_for(
    gamma: np.ndarray, pairs, outside: list[int]
) -> dict[tuple[int, int], int] | None:
    """Smallest outside item distinguishing each comparable pair, or
    None if some pair cannot be separated."""
    found: dict[tuple[int, int], int] = {}
    seen: set[frozenset[int]] = set()
    for a, b in pairs:
        key = frozenset((a, b))
        if key in seen:
            continue
        seen.add(key)
        for j in outside:
            if gamma[j, a] != gamma[j, b]:
                found[(a, b)] = j
                break
        else:
            return None
    return found


def verify_strict_certificate(
    q: QMatrix, h: Hierarchy, s1, s2
) -> bool:
    """Independent recheck that ``(s1, s2)`` certifies the first two
    checklist conditions of :func:`check_general_strict`.

    ``s1`` and ``s2`` hold 0-based item indices.
    """
    a0 = induce_profile_set(h)
    gamma = constraint_matrix(q, a0)
    items1, items2 = tuple(sorted(s1)), tuple(sorted(s2))
    if set(items1) & set(items2):
        return False
    if not _distinct_columns(gamma.entries, items1):
        return False
    if not _distinct_columns(gamma.entries, items2):
        return False
    rel1 = _dominance_relation(gamma, list(items1))
    rel2 = _dominance_relation(gamma, list(items2))
    if not (rel1 == rel2).all():
        return False
    outside = [j for j in range(q.J) if j not in set(items1) | set(items2)]
    pairs = _comparable_pairs(rel1)
    return _separators_for(gamma.entries, pairs, outside) is not None


def check_general_strict(
    q: QMatrix,
    h: Hierarchy,
    cap: int | None = None,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
) -> TestabilityReport:
    """Checklist for testability of ``h`` under a saturated model.

    1. two disjoint item sets whose constraint columns are distinct and
       which induce the same dominance relation over the supported
       profiles;
    2. for every comparable profile pair, an item outside both sets
       that distinguishes the pair;
    3. every supported constraint column differs from every
       unsupported one.

    Conditions 1-2 are existential: the search enumerates candidate
    item sets in (size, lexicographic) order up to ``cap`` items per
    set (default K + 2) and stops after ``pair_budget`` candidate
    pairs, reporting ``Inconclusive`` when no certificate was found.
    Condition 3 is decidable, and its failure alone yields ``Violated``.
    """
    if q.K != h.K:
        raise DimensionMismatch(f"Q-matrix has K={q.K}, hierarchy has K={h.K}")
    if cap is None:
        cap = h.K + 2
    if cap < h.K:
        raise ValueError(f"subset-size cap {cap} must be at least K={h.K}")

    a0 = induce_profile_set(h)
    sep_ok, sep_pair = profile_separation(q, a0)
    cond3 = ConditionResult(
        "profile_separation",
        "pass" if sep_ok else "fail",
        {} if sep_ok else {"profile_in": sep_pair[0], "profile_out": sep_pair[1]},
    )
    if not sep_ok:
        inconclusive = {"reason": "not searched: profile separation failed"}
        conditions = (
            ConditionResult("order_matched_item_sets", "inconclusive", inconclusive),
            ConditionResult("separating_items", "inconclusive", inconclusive),
            cond3,
        )
        return TestabilityReport(VIOLATED, conditions)

    gamma = constraint_matrix(q, a0)
    budget_hit = False

    # Candidate item sets whose restricted constraint columns are distinct,
    # in (size, lexicographic) order.
    candidates: list[tuple[int, ...]] = []
    for size in range(1, min(cap, q.J) + 1):
        if len(candidates) >= MAX_CANDIDATE_SETS:
            budget_hit = True
            break
        if 2**size < a0.size:
            continue  # too few response patterns to tell |A0| profiles apart
        for combo in itertools.combinations(range(q.J), size):
            if _distinct_columns(gamma.entries, combo):
                candidates.append(combo)
                if len(candidates) >= MAX_CANDIDATE_SETS:
                    budget_hit = True
                    break

    pairs_checked = 0
    certificate = None
    for i in range(len(candidates)):
        if certificate or pairs_checked >= pair_budget:
            break
        set1 = candidates[i]
        rel1 = None
        for j in range(i + 1, len(candidates)):
            if pairs_checked >= pair_budget:
                budget_hit = True
                break
            pairs_checked += 1
            set2 = candidates[j]
            if set(set1) & set(set2):
                continue
            if rel1 is None:
                rel1 = _dominance_relation(gamma, list(set1))
            rel2 = _dominance_relation(gamma, list(set2))
            if not (rel1 == rel2).all():
                continue
            outside = [
                jj for jj in range(q.J) if jj not in set(set1) | set(set2)
            ]
            separators = _separators_for(
                gamma.entries, _comparable_pairs(rel1), outside
            )
            if separators is None:
                continue
            certificate = (set1, set2, separators)
            break

    if certificate is not None:
        set1, set2, separators = certificate
        if not verify_strict_certificate(q, h, set1, set2):
            raise AssertionError("internal certificate recheck failed")
        profiles = a0.as_tuples()
        cond1 = ConditionResult(
            "order_matched_item_sets",
            "pass",
            {
                "s1": [j + 1 for j in set1],
                "s2": [j + 1 for j in set2],
            },
        )
        cond2 = ConditionResult(
            "separating_items",
            "pass",
            {
                "separators": [
                    {
                        "dominant": profiles[a],
                        "dominated": profiles[b],
                        "item": j + 1,
                    }
                    for (a, b), j in sorted(separators.items())
                ]
            },
        )
        conditions = (cond1, cond2, cond3)
        return TestabilityReport(SATISFIED, conditions, budget_hit)

    note = {"reason": "no certificate found", "pairs_checked": pairs_checked}
    conditions = (
        ConditionResult("order_matched_item_sets", "inconclusive", note),
        ConditionResult("separating_items", "inconclusive", note),
        cond3,
    )
    return TestabilityReport(INCONCLUSIVE, conditions, budget_hit)


def _two_disjoint_assignments(q: QMatrix) -> tuple[dict[int, int], dict[int, int]] | None:
    """Two disjoint row sets, each assigning one row per attribute with a
    1 in that attribute's column. Solved exactly as a bipartite matching
    between rows and two copies of each attribute via augmenting paths.

    Returns 0-based ``{attribute: row}`` maps or None when infeasible.
    """
    K, J = q.K, q.J
    rows_for_attr = [list(np.flatnonzero(q.entries[:, k])) for k in range(K)]
    owner = [-1] * J  # row -> slot index, slot = 2 * attr + copy

    def augment(slot: int, visited: list[bool]) -> bool:
        for row in rows_for_attr[slot // 2]:
            if visited[row]:
                continue
            visited[row] = True
            if owner[row] == -1 or augment(owner[row], visited):
                owner[row] = slot
                return True
        return False

    for slot in range(2 * K):
        if not augment(slot, [False] * J):
            return None
    matched: dict[int, list[int]] = {k: [] for k in range(K)}
    for row, slot in enumerate(owner):
        if slot != -1:
            matched[slot // 2].append(row)
    first = {k: min(rows) for k, rows in matched.items()}
    second = {k: max(rows) for k, rows in matched.items()}
    return first, second


def check_general_generic(q: QMatrix, h: Hierarchy) -> TestabilityReport:
    """Checklist for generic (almost-everywhere) testability of ``h``.

    1. the Q-matrix contains two disjoint K-row blocks, each admitting
       a row-to-attribute assignment with a 1 on every assigned entry
       (solved exactly by bipartite matching, no search cap);
    2. the remaining rows jointly cover every attribute column;
    3. same profile-separation condition as the strict check.
    """
    if q.K != h.K:
        raise DimensionMismatch(f"Q-matrix has K={q.K}, hierarchy has K={h.K}")
    assignment = _two_disjoint_assignments(q)
    if assignment is None:
        cond1 = ConditionResult(
            "two_disjoint_diagonal_blocks",
            "fail",
            {"reason": "no two disjoint row-to-attribute assignments exist"},
        )
        cond2 = ConditionResult(
            "remaining_rows_cover_attributes",
            "inconclusive",
            {"reason": "no block witness to remove"},
        )
    else:
        first, second = assignment
        cond1 = ConditionResult(
            "two_disjoint_diagonal_blocks",
            "pass",
            {
                "block1": {str(k + 1): first[k] + 1 for k in sorted(first)},
                "block2": {str(k + 1): second[k] + 1 for k in sorted(second)},
            },
        )
        used = set(first.values()) | set(second.values())
        rest = [j for j in range(q.J) if j not in used]
        if rest:
            counts = q.entries[rest].sum(axis=0)
        else:
            counts = np.zeros(q.K, dtype=int)
        uncovered = [k + 1 for k in range(q.K) if counts[k] < 1]
        witness = {"column_sums": [int(c) for c in counts]}
        if uncovered:
            witness["uncovered_attributes"] = uncovered
            cond2 = ConditionResult("remaining_rows_cover_attributes", "fail", witness)
        else:
            cond2 = ConditionResult("remaining_rows_cover_attributes", "pass", witness)
    sep_ok, sep_pair = profile_separation(q, induce_profile_set(h))
    cond3 = ConditionResult(
        "profile_separation",
        "pass" if sep_ok else "fail",
        {} if sep_ok else {"profile_in": sep_pair[0], "profile_out": sep_pair[1]},
    )
    conditions = (cond1, cond2, cond3)
    return TestabilityReport(_verdict_from_conditions(conditions), conditions)

"""Core combinatorial objects for attribute-based diagnostic models.

Q-matrices, prerequisite hierarchies, latent attribute profile sets,
constraint/ideal-response matrices, and item-set partial orders built
from them. All types are immutable after construction and every
operation is a pure function, so everything here is safe to share
across threads.

Conventions
-----------
Attributes and items are 1-based in file formats, witnesses and error
messages; in-memory arrays are ordinary 0-based numpy. Profiles are
canonically ordered by their integer encoding with attribute 1 as the
most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import CycleError, DimensionMismatch, KTooLarge

#: Hard cap on attribute counts for full profile enumeration (2**K rows).
MAX_ENUMERATION_K = 20

Edge = tuple[int, int]
Profile = tuple[int, ...]


def _as_binary_array(values, name: str) -> NDArray[np.int8]:
    arr = np.asarray(values, dtype=np.int8)
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} entries must be 0 or 1")
    return arr


@dataclass(eq=False)
class QMatrix:
    """Binary item-by-attribute requirement matrix.

    Parameters
    ----------
    entries : array-like of shape (J, K)
        ``entries[j, k] = 1`` when item ``j`` requires attribute ``k``.
        Rows must be nonzero: an item that measures no attribute is
        degenerate under every model here and is rejected at
        construction time.
    """

    entries: NDArray[np.int8]

    def __post_init__(self):
        arr = _as_binary_array(self.entries, "Q-matrix")
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatch(
                f"Q-matrix must be a nonempty 2-D array, got shape {arr.shape}"
            )
        zero_rows = np.flatnonzero(arr.sum(axis=1) == 0)
        if zero_rows.size:
            raise ValueError(f"Q-matrix row {zero_rows[0] + 1} is all zeros")
        arr = arr.copy()
        arr.flags.writeable = False
        self.entries = arr

    @property
    def J(self) -> int:
        return int(self.entries.shape[0])

    @property
    def K(self) -> int:
        return int(self.entries.shape[1])

    def required_attributes(self, j: int) -> tuple[int, ...]:
        """0-based attribute indices required by 0-based item ``j``."""
        return tuple(int(k) for k in np.flatnonzero(self.entries[j]))

    def drop_rows(self, rows) -> "QMatrix":
        """Q-matrix with the given 0-based rows removed."""
        keep = np.setdiff1d(np.arange(self.J), np.asarray(list(rows), dtype=int))
        if keep.size == 0:
            raise DimensionMismatch("cannot drop every row of a Q-matrix")
        return QMatrix(self.entries[keep])


@dataclass(frozen=True)
class Hierarchy:
    """Prerequisite DAG over ``K`` attributes.

    Edges are 1-based ordered pairs ``(k, l)`` meaning attribute ``k``
    is a prerequisite for attribute ``l``. The edge set must be acyclic;
    duplicates are merged and self-loops rejected.
    """

    K: int
    edges: frozenset[Edge]

    def __init__(self, K: int, edges):
        if K < 1:
            raise ValueError(f"attribute count must be >= 1, got {K}")
        normalized = set()
        for edge in edges:
            k, l = int(edge[0]), int(edge[1])
            if not (1 <= k <= K and 1 <= l <= K):
                raise IndexError(f"edge ({k}, {l}) out of range for K={K}")
            if k == l:
                raise CycleError(f"self-loop at attribute {k}")
            normalized.add((k, l))
        cycle = _find_cycle(K, normalized)
        if cycle is not None:
            raise CycleError("cycle: " + " -> ".join(str(v) for v in cycle))
        object.__setattr__(self, "K", int(K))
        object.__setattr__(self, "edges", frozenset(normalized))

    def sorted_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))


def _find_cycle(K: int, edges) -> list[int] | None:
    """Return one directed cycle as a vertex list, or None if acyclic."""
    succ: dict[int, list[int]] = {k: [] for k in range(1, K + 1)}
    for k, l in sorted(edges):
        succ[k].append(l)
    color = {k: 0 for k in range(1, K + 1)}  # 0 new, 1 on stack, 2 done
    parent: dict[int, int] = {}
    for root in range(1, K + 1):
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 0:
                    color[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
                if color[nxt] == 1:
                    cycle = [nxt, node]
                    cur = node
                    while cur != nxt:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.reverse()
                    return cycle
            if not advanced:
                color[node] = 2
                stack.pop()
    return None


def validate_hierarchy(K: int, edges) -> Hierarchy:
    """Build a :class:`Hierarchy`, rejecting cyclic or out-of-range edges."""
    return Hierarchy(K, edges)


def transitive_closure(h: Hierarchy) -> Hierarchy:
    """Hierarchy whose edge set is the transitive closure of ``h``.

    Idempotent: applying it twice gives the same edge set.
    """
    succ: dict[int, set[int]] = {k: set() for k in range(1, h.K + 1)}
    for k, l in h.edges:
        succ[k].add(l)
    closed = set()
    for start in range(1, h.K + 1):
        seen: set[int] = set()
        stack = list(succ[start])
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            stack.extend(succ[node])
        closed.update((start, node) for node in seen)
    return Hierarchy(h.K, closed)


def _ancestor_matrix(h: Hierarchy) -> NDArray[np.bool_]:
    """0-based (K, K) boolean matrix: entry (k, l) means attribute k+1
    is a (transitive) prerequisite of attribute l+1."""
    closed = transitive_closure(h)
    anc = np.zeros((h.K, h.K), dtype=bool)
    for k, l in closed.edges:
        anc[k - 1, l - 1] = True
    return anc


@dataclass(eq=False)
class ProfileSet:
    """Ordered collection of distinct binary attribute profiles.

    Parameters
    ----------
    profiles : array-like of shape (n, K)
        One profile per row. Rows must be distinct.
    K : int, optional
        Required only when ``profiles`` is empty.
    """

    profiles: NDArray[np.int8]
    K: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.profiles, dtype=np.int8)
        if arr.size == 0:
            if self.K is None:
                raise ValueError("empty profile set needs an explicit K")
            arr = arr.reshape(0, int(self.K))
        if arr.ndim != 2:
            raise DimensionMismatch(f"profiles must be 2-D, got shape {arr.shape}")
        arr = _as_binary_array(arr, "profile")
        if self.K is not None and arr.shape[1] != int(self.K):
            raise DimensionMismatch(
                f"profiles have {arr.shape[1]} attributes, expected {self.K}"
            )
        codes = _encode(arr)
        if len(set(codes.tolist())) != len(codes):
            raise ValueError("profiles must be distinct")
        arr = arr.copy()
        arr.flags.writeable = False
        self.profiles = arr
        self.K = int(arr.shape[1])

    @classmethod
    def full(cls, K: int) -> "ProfileSet":
        """All ``2**K`` profiles in canonical order."""
        if K > MAX_ENUMERATION_K:
            raise KTooLarge(f"K={K} exceeds enumeration cap {MAX_ENUMERATION_K}")
        return cls(_decode(np.arange(2**K, dtype=np.int64), K))

    @classmethod
    def from_tuples(cls, rows, K: int | None = None) -> "ProfileSet":
        rows = list(rows)
        if not rows:
            return cls(np.zeros((0, 0), dtype=np.int8), K=K)
        return cls(np.asarray(rows, dtype=np.int8), K=K)

    @property
    def size(self) -> int:
        return int(self.profiles.shape[0])

    def __len__(self) -> int:
        return self.size

    def codes(self) -> NDArray[np.int64]:
        """Canonical integer encoding of each profile (attribute 1 = MSB)."""
        return _encode(self.profiles)

    def as_tuples(self) -> tuple[Profile, ...]:
        return tuple(tuple(int(b) for b in row) for row in self.profiles)

    def index_of(self, profile) -> int:
        target = np.asarray(profile, dtype=np.int8)
        matches = np.flatnonzero((self.profiles == target).all(axis=1))
        if matches.size == 0:
            raise KeyError(f"profile {tuple(int(b) for b in target)} not in set")
        return int(matches[0])

    def contains(self, profile) -> bool:
        try:
            self.index_of(profile)
            return True
        except KeyError:
            return False

    def is_subset_of(self, other: "ProfileSet") -> bool:
        return set(self.codes().tolist()) <= set(other.codes().tolist())


def _encode(profiles: NDArray) -> NDArray[np.int64]:
    K = profiles.shape[1]
    weights = (1 << np.arange(K - 1, -1, -1)).astype(np.int64)
    return profiles.astype(np.int64) @ weights


def _decode(codes: NDArray, K: int) -> NDArray[np.int8]:
    shifts = np.arange(K - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def induce_profile_set(h: Hierarchy) -> ProfileSet:
    """Profiles consistent with every prerequisite edge, in canonical order.

    A profile is kept iff for every edge ``k -> l``, possessing ``l``
    implies possessing ``k``. With no edges this is all ``2**K`` profiles.
    """
    if h.K > MAX_ENUMERATION_K:
        raise KTooLarge(f"K={h.K} exceeds enumeration cap {MAX_ENUMERATION_K}")
    bits = _decode(np.arange(2**h.K, dtype=np.int64), h.K)
    keep = np.ones(bits.shape[0], dtype=bool)
    for k, l in sorted(h.edges):
        keep &= ~((bits[:, l - 1] == 1) & (bits[:, k - 1] == 0))
    return ProfileSet(bits[keep])


def complement_profile_set(a: ProfileSet) -> ProfileSet:
    """Profiles of length K not in ``a``, in canonical order."""
    if a.K > MAX_ENUMERATION_K:
        raise KTooLarge(f"K={a.K} exceeds enumeration cap {MAX_ENUMERATION_K}")
    present = set(a.codes().tolist())
    codes = np.array(
        [c for c in range(2**a.K) if c not in present], dtype=np.int64
    )
    return ProfileSet(_decode(codes, a.K), K=a.K)


def _check_same_k(q: QMatrix, K: int):
    if q.K != K:
        raise DimensionMismatch(f"Q-matrix has K={q.K}, expected K={K}")


def sparsify(q: QMatrix, h: Hierarchy) -> QMatrix:
    """Zero out every prerequisite of a required attribute.

    Works over the transitive closure of ``h``: wherever ``q[j, l] = 1``
    and ``k`` is a (transitive) prerequisite of ``l``, the entry
    ``q[j, k]`` becomes 0. Only 1 -> 0 changes occur; idempotent.
    """
    _check_same_k(q, h.K)
    anc = _ancestor_matrix(h)
    # mask[j, k] = 1 iff some required attribute of item j has k as ancestor
    mask = (q.entries.astype(np.int64) @ anc.T.astype(np.int64)) > 0
    return QMatrix(np.where(mask, 0, q.entries))


def densify(q: QMatrix, h: Hierarchy) -> QMatrix:
    """Switch on every prerequisite of a required attribute.

    Mirror image of :func:`sparsify`: over the transitive closure,
    wherever ``q[j, l] = 1`` and ``k -> l``, the entry ``q[j, k]``
    becomes 1. Only 0 -> 1 changes occur; idempotent.
    """
    _check_same_k(q, h.K)
    anc = _ancestor_matrix(h)
    mask = (q.entries.astype(np.int64) @ anc.T.astype(np.int64)) > 0
    return QMatrix(np.where(mask, 1, q.entries))


@dataclass(eq=False)
class ConstraintMatrix:
    """Profile-dominance indicators for a Q-matrix and profile set.

    ``entries[j, a]`` is 1 exactly when profile ``a`` possesses every
    attribute required by item ``j``. Columns are labelled by
    ``profiles`` in order.
    """

    entries: NDArray[np.int8]
    profiles: ProfileSet

    def __post_init__(self):
        arr = _as_binary_array(self.entries, "constraint matrix")
        if arr.ndim != 2 or arr.shape[1] != self.profiles.size:
            raise DimensionMismatch(
                f"constraint matrix shape {arr.shape} does not match "
                f"{self.profiles.size} profiles"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        self.entries = arr

    @property
    def J(self) -> int:
        return int(self.entries.shape[0])

    def column(self, a: int) -> NDArray[np.int8]:
        return self.entries[:, a]


def constraint_matrix(q: QMatrix, a: ProfileSet) -> ConstraintMatrix:
    """Dominance indicator matrix: entry (j, a) = 1 iff profile a >= q_j
    componentwise."""
    _check_same_k(q, a.K)
    hits = q.entries.astype(np.int64) @ a.profiles.T.astype(np.int64)
    need = q.entries.sum(axis=1).astype(np.int64)
    return ConstraintMatrix((hits == need[:, None]).astype(np.int8), a)


def ideal_response(q: QMatrix, a: ProfileSet, rule: str) -> ConstraintMatrix:
    """Deterministic response matrix under a conjunctive or disjunctive rule.

    ``rule="DINA"`` marks a profile correct when it possesses all
    required attributes (identical to :func:`constraint_matrix`);
    ``rule="DINO"`` when it possesses at least one.
    """
    rule = rule.upper()
    if rule == "DINA":
        return constraint_matrix(q, a)
    if rule == "DINO":
        _check_same_k(q, a.K)
        hits = q.entries.astype(np.int64) @ a.profiles.T.astype(np.int64)
        return ConstraintMatrix((hits >= 1).astype(np.int8), a)
    raise ValueError(f"unknown rule {rule!r}, expected 'DINA' or 'DINO'")


def _check_items(g: ConstraintMatrix, s) -> list[int]:
    items = [int(j) for j in s]
    for j in items:
        if not (0 <= j < g.J):
            raise IndexError(f"item index {j} out of range for J={g.J}")
    return items


def partial_order_holds(g: ConstraintMatrix, s, a: int, b: int) -> bool:
    """Whether profile column ``a`` dominates column ``b`` on item set ``s``.

    ``a`` and ``b`` are 0-based column indices; ``s`` holds 0-based item
    indices. The empty item set makes every pair comparable.
    """
    items = _check_items(g, s)
    n = g.profiles.size
    if not (0 <= a < n and 0 <= b < n):
        raise IndexError(f"profile column out of range for |A|={n}")
    if not items:
        return True
    sub = g.entries[items]
    return bool((sub[:, a] >= sub[:, b]).all())


def _dominance_relation(g: ConstraintMatrix, items) -> NDArray[np.bool_]:
    """(n, n) boolean matrix of the item-set partial order; entry (a, b)
    means column a dominates column b on the given items."""
    n = g.profiles.size
    if not items:
        return np.ones((n, n), dtype=bool)
    sub = g.entries[items]
    return (sub[:, :, None] >= sub[:, None, :]).all(axis=0)


def partial_orders_equal(g: ConstraintMatrix, s1, s2) -> bool:
    """Whether two item sets induce identical dominance relations over
    all ordered profile pairs."""
    items1 = _check_items(g, s1)
    items2 = _check_items(g, s2)
    return bool(
        (_dominance_relation(g, items1) == _dominance_relation(g, items2)).all()
    )

"""Bundled reference inputs: the 28-item English-proficiency Q-matrix
over three attributes (morphosyntactic, cohesive, lexical rules) and
the battery of linear-hierarchy test settings run against it.

Only the Q-matrix ships here; the matching response data must be
supplied by the user (see the README for the public source).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qmatrix import Hierarchy, QMatrix

ECPE_Q_ROWS = (
    (1, 1, 0),
    (0, 1, 0),
    (1, 0, 1),
    (0, 0, 1),
    (0, 0, 1),
    (0, 0, 1),
    (1, 0, 1),
    (0, 1, 0),
    (0, 0, 1),
    (1, 0, 0),
    (1, 0, 1),
    (1, 0, 1),
    (1, 0, 0),
    (1, 0, 0),
    (0, 0, 1),
    (1, 0, 1),
    (0, 1, 1),
    (0, 0, 1),
    (0, 0, 1),
    (1, 0, 1),
    (1, 0, 1),
    (0, 0, 1),
    (0, 1, 0),
    (0, 1, 0),
    (1, 0, 0),
    (0, 0, 1),
    (1, 0, 0),
    (0, 0, 1),
)

#: Attribute 3 (lexical) before 2 (cohesive) before 1 (morphosyntactic).
ECPE_LINEAR_EDGES = ((3, 2), (2, 1))


def ecpe_qmatrix() -> QMatrix:
    return QMatrix(np.array(ECPE_Q_ROWS, dtype=np.int8))


def ecpe_linear_hierarchy() -> Hierarchy:
    return Hierarchy(3, ECPE_LINEAR_EDGES)


@dataclass(frozen=True)
class BatterySetting:
    """One null-vs-alternative pairing; ``alt_edges`` of None means the
    unconstrained alternative with every profile allowed."""

    label: str
    null_edges: tuple[tuple[int, int], ...]
    alt_edges: tuple[tuple[int, int], ...] | None


ECPE_BATTERY = (
    BatterySetting("linear_321_vs_none", ((3, 2), (2, 1)), None),
    BatterySetting("32_vs_none", ((3, 2),), None),
    BatterySetting("21_vs_none", ((2, 1),), None),
    BatterySetting("31_vs_none", ((3, 1),), None),
    BatterySetting("linear_321_vs_32", ((3, 2), (2, 1)), ((3, 2),)),
    BatterySetting("linear_321_vs_21", ((3, 2), (2, 1)), ((2, 1),)),
    BatterySetting("linear_321_vs_31", ((3, 2), (2, 1)), ((3, 1),)),
)

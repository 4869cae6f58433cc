"""Tests for file formats and parameter serialization."""

import numpy as np
import pytest

from hiercdm import DinaParams, GdinaParams, Hierarchy, ParseError, ProfileSet
from hiercdm.fileio import (
    params_from_dict,
    params_to_dict,
    read_hierarchy_json,
    read_q_csv,
    read_responses_csv,
    write_hierarchy_json,
    write_profiles_csv,
    write_q_csv,
    write_responses_csv,
)
from hiercdm.errors import ColumnCountMismatch

from conftest import Q_TWO_IDENTITIES_K2, q


class TestQcsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "q.csv"
        write_q_csv(path, q(Q_TWO_IDENTITIES_K2))
        again = read_q_csv(path)
        assert again.entries.tolist() == Q_TWO_IDENTITIES_K2

    def test_bad_cell_reports_line_and_column(self, tmp_path):
        path = tmp_path / "q.csv"
        path.write_text("1,0\n1,x\n")
        with pytest.raises(ParseError, match=r":2:2"):
            read_q_csv(path)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "q.csv"
        path.write_text("1,0\n1\n")
        with pytest.raises(ParseError, match=r":2:"):
            read_q_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "q.csv"
        path.write_text("")
        with pytest.raises(ParseError, match="empty"):
            read_q_csv(path)


class TestResponsesCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        data = np.array([[1, 0, 1], [0, 0, 1]], dtype=np.int8)
        write_responses_csv(path, data)
        np.testing.assert_array_equal(read_responses_csv(path), data)

    def test_column_count_enforced(self, tmp_path):
        path = tmp_path / "r.csv"
        write_responses_csv(path, np.zeros((2, 3), dtype=np.int8) + 1)
        with pytest.raises(ColumnCountMismatch):
            read_responses_csv(path, J=28)


class TestProfilesCsv:
    def test_canonical_rows(self, tmp_path):
        path = tmp_path / "p.csv"
        write_profiles_csv(path, ProfileSet([[0, 0], [1, 0], [1, 1]]))
        assert path.read_text() == "0,0\n1,0\n1,1\n"


class TestHierarchyJson:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "h.json"
        h = Hierarchy(3, [(3, 2), (2, 1)])
        write_hierarchy_json(path, h)
        again = read_hierarchy_json(path)
        assert again.K == 3 and again.edges == h.edges

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            read_hierarchy_json(path)

    def test_missing_k(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text('{"edges": [[1, 2]]}')
        with pytest.raises(ParseError):
            read_hierarchy_json(path)


class TestParamsJson:
    def test_dina_round_trip(self):
        params = DinaParams([0.1, 0.2], [0.05, 0.15])
        raw = params_to_dict("dina", params)
        model, again = params_from_dict(raw)
        assert model == "dina"
        np.testing.assert_allclose(again.slip, params.slip)
        np.testing.assert_allclose(again.guess, params.guess)

    def test_gdina_round_trip(self):
        qm = q([[1, 1, 0], [0, 0, 1]])
        params = GdinaParams.count_spaced(qm, 0.1, 0.9)
        raw = params_to_dict("gdina", params)
        assert raw["items"][0]["required"] == [1, 2]
        assert set(raw["items"][0]["theta"]) == {"00", "01", "10", "11"}
        model, again = params_from_dict(raw)
        assert model == "gdina"
        for t1, t2 in zip(params.tables, again.tables):
            np.testing.assert_allclose(t1, t2)

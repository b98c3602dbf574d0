import io
import json
import random
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitting_times.ingest import (
    EdgeListError,
    ExperimentTable,
    TableError,
    degree_table,
    meta_path,
    parse_edge_list,
    read_table,
    write_table,
)


def parse(text):
    return parse_edge_list(io.StringIO(text))


class TestEdgeList:
    def test_path_graph(self):
        seq = parse("1 2\n2 3\n")
        assert list(seq.degrees) == [1, 2, 1] and list(seq.node_ids) == [1, 2, 3]
        assert seq.node_count == 3

    def test_self_loop(self):
        assert list(parse("1 1\n").degrees) == [0]

    def test_duplicates(self):
        assert list(parse("1 2\n2 1\n1 2\n").degrees) == [1, 1]

    def test_comments_blank_lines_and_tabs(self):
        seq = parse("# Directed graph\n# FromNodeId\tToNodeId\n\n10\t20\n20\t30\n")
        assert list(seq.degrees) == [1, 2, 1]

    def test_sparse_ids(self):
        seq = parse("0 1000000\n")
        assert list(seq.node_ids) == [0, 1_000_000]

    def test_empty(self):
        assert parse("").node_count == 0
        assert parse("# only a comment\n").node_count == 0

    @pytest.mark.parametrize("text,lineno", [("1 2\n3\n", 2), ("1 2\n# c\n1 x\n", 3), ("1 2 3\n", 1), ("-1 2\n", 1)])
    def test_malformed(self, text, lineno):
        with pytest.raises(EdgeListError) as info:
            parse(text)
        assert info.value.lineno == lineno
        assert f"line {lineno}" in str(info.value)

    def test_ring(self):
        n, k = 30, 4
        lines = [f"{i} {(i + d) % n}" for i in range(n) for d in range(1, k // 2 + 1)]
        assert list(parse("\n".join(lines)).degrees) == [k] * n

    @given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), max_size=80), st.randoms())
    def test_order_insensitive(self, edges, rnd):
        lines = [f"{a} {b}" for a, b in edges]
        base = parse("\n".join(lines))
        rnd.shuffle(lines)
        other = parse("\n".join(lines))
        assert sorted(base.degrees) == sorted(other.degrees)
        assert dict(zip(base.node_ids, base.degrees)) == dict(zip(other.node_ids, other.degrees))
        assert int(base.degrees.sum()) % 2 == 0

    def test_degree_table(self):
        t = degree_table(parse("1 2\n"))
        assert t.names == ["node", "degree"]
        assert t.metadata["orientation"] == "symmetrized"


class TestTables:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        t = ExperimentTable(
            {"j": np.arange(1, 51), "prob": rng.random(50) * 1e-7, "whole": np.arange(50) * 1.0, "big": rng.random(50) * 1e300},
            {"seed": 3, "spec": {"model": "armax", "alpha": 0.5}, "horizon": float("inf")},
        )
        p = write_table(tmp_path / "pmf.csv", t)
        back = read_table(p)
        assert back.names == t.names
        for name in t.names:
            assert back[name].dtype == t[name].dtype
            np.testing.assert_array_equal(back[name], t[name])
        assert back.metadata["spec"] == {"model": "armax", "alpha": 0.5}
        assert back.metadata["horizon"] == "inf"
        json.loads(meta_path(p).read_text())

    def test_types_without_sidecar(self, tmp_path):
        p = write_table(tmp_path / "t.csv", ExperimentTable({"a": np.array([1, 2]), "b": np.array([1.0, 2.0])}))
        meta_path(p).unlink()
        back = read_table(p)
        assert back["a"].dtype.kind == "i" and back["b"].dtype.kind == "f"

    def test_seventeen_digits(self, tmp_path):
        p = write_table(tmp_path / "t.csv", ExperimentTable({"x": np.array([0.1])}))
        assert p.read_text().splitlines()[1] == "0.10000000000000001"

    def test_nan_rejected(self, tmp_path):
        with pytest.raises(TableError):
            write_table(tmp_path / "t.csv", ExperimentTable({"x": np.array([1.0, np.nan])}))

    def test_shape_errors(self):
        with pytest.raises(TableError):
            ExperimentTable({"a": [1, 2], "b": [1.0]})
        with pytest.raises(TableError):
            ExperimentTable({"a,b": [1]})
        with pytest.raises(TableError):
            ExperimentTable({"a": ["x"]})

    def test_parse_errors_have_location(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n3\n")
        with pytest.raises(TableError, match=r"bad.csv:3"):
            read_table(p)
        p.write_text("a\nfoo\n")
        with pytest.raises(TableError, match="column 'a'"):
            read_table(p)
        with pytest.raises(TableError):
            read_table(tmp_path / "missing.csv")

    def test_empty_table(self, tmp_path):
        p = write_table(tmp_path / "e.csv", ExperimentTable({"a": np.zeros(0, dtype=np.int64)}))
        assert len(read_table(p)) == 0

    def test_million_rows_under_five_seconds(self, tmp_path):
        rng = np.random.default_rng(1)
        t = ExperimentTable({"j": np.arange(1_000_000), "p": rng.random(1_000_000), "se": rng.random(1_000_000)})
        start = time.perf_counter()
        back = read_table(write_table(tmp_path / "big.csv", t))
        elapsed = time.perf_counter() - start
        np.testing.assert_array_equal(back["p"], t["p"])
        assert elapsed < 5.0

import math

import numpy as np
import pandas as pd
import pytest

from core.exceptions import DegenerateRange, InvalidInput
from core.network import (
    NodeClass,
    default_grid,
    degrees,
    format_ratio,
    node_classes,
    relative_out_degree,
    rescale_ete,
    threshold_graph,
    threshold_sweep,
    write_graph,
)

LABELS = ["R:a", "R:b", "P:a", "P:b"]

# entry (i, j) is the flow from node j into node i
HAND = np.array([
    [0.0, 0.2, 0.9, 0.5],
    [0.3, 0.0, 0.8, 0.1],
    [0.4, 0.6, 0.0, 0.7],
    [0.1, 0.2, 0.3, 0.0],
])


def _random_matrix(rng: np.random.Generator, n: int = 8) -> np.ndarray:
    """Integer-valued ETE surrogate whose rescaled entries land on the 0.01 grid."""
    m = rng.integers(0, 101, size=(n, n)).astype(float)
    off = np.flatnonzero(~np.eye(n, dtype=bool))
    picks = rng.choice(off, size=2, replace=False)
    m.flat[picks[0]] = 0.0
    m.flat[picks[1]] = 100.0
    np.fill_diagonal(m, 0.0)
    return m


class TestRescale:
    def test_min_max(self):
        np.testing.assert_array_equal(rescale_ete(np.array([[5.0, 1.0], [3.0, 9.0]])), [[0.0, 0.0], [1.0, 0.0]])

    def test_off_diagonal_range(self):
        rescaled = rescale_ete(np.random.default_rng(0).normal(size=(6, 6)))
        off = rescaled[~np.eye(6, dtype=bool)]
        assert off.min() == 0.0 and off.max() == 1.0
        np.testing.assert_array_equal(np.diag(rescaled), 0.0)

    def test_missing_entries_ignored(self):
        m = np.array([[0.0, 1.0, np.nan], [2.0, 0.0, 3.0], [5.0, 4.0, 0.0]])
        rescaled = rescale_ete(m)
        assert np.isnan(rescaled[0, 2])
        assert rescaled[2, 0] == 1.0 and rescaled[0, 1] == 0.0

    def test_degenerate(self):
        with pytest.raises(DegenerateRange):
            rescale_ete(np.full((3, 3), 0.4))


class TestGraph:
    def test_classes(self):
        assert node_classes(LABELS) == [NodeClass.RETURN, NodeClass.RETURN, NodeClass.POLARITY, NodeClass.POLARITY]
        with pytest.raises(InvalidInput):
            node_classes(["X:a"])

    def test_edges_at_threshold(self):
        g = threshold_graph(HAND, LABELS, 0.5)
        assert set(g.edges) == {("P:a", "R:a"), ("P:b", "R:a"), ("P:a", "R:b"), ("R:b", "P:a"), ("P:b", "P:a")}
        assert g.edges["P:a", "R:a"]["weight"] == 0.9
        assert all(data["weight"] >= 0.5 for _, _, data in g.edges(data=True))

    def test_no_self_loops(self):
        g = threshold_graph(np.ones((4, 4)), LABELS, 0.0)
        assert g.number_of_edges() == 12

    def test_nested_edges(self):
        m = rescale_ete(np.random.default_rng(1).random((8, 8)))
        labels = [f"R:{i}" for i in range(4)] + [f"P:{i}" for i in range(4)]
        previous = None
        for th in default_grid():
            edges = set(threshold_graph(m, labels, th).edges)
            if previous is not None:
                assert edges <= previous
            previous = edges

    def test_degrees(self):
        record = degrees(threshold_graph(HAND, LABELS, 0.5))
        assert record.nd_out == {"R:a": 0, "R:b": 1, "P:a": 2, "P:b": 2}
        assert record.nd_in == {"R:a": 2, "R:b": 1, "P:a": 2, "P:b": 0}
        assert record.edges == 5

    def test_write(self, tmp_path):
        g = threshold_graph(HAND, LABELS, 0.75)
        write_graph(g, tmp_path / "edges.csv", tmp_path / "nodes.csv")
        edges = pd.read_csv(tmp_path / "edges.csv")
        nodes = pd.read_csv(tmp_path / "nodes.csv")
        assert list(edges.columns) == ["src", "dst", "weight"]
        assert len(edges) == 2
        assert list(nodes.columns) == ["label", "class", "nd_in", "nd_out"]
        assert nodes.set_index("label").loc["P:a", "nd_out"] == 2


class TestRelativeOutDegree:
    def test_ratio(self):
        assert relative_out_degree(threshold_graph(HAND, LABELS, 0.5)) == 4.0

    def test_only_polarity_sends(self):
        assert relative_out_degree(threshold_graph(HAND, LABELS, 0.75)) == math.inf

    def test_no_edges(self):
        assert math.isnan(relative_out_degree(threshold_graph(HAND, LABELS, 0.95)))

    def test_mean_mode(self):
        labels = ["R:a", "R:b", "P:a"]
        m = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
        g = threshold_graph(m, labels, 0.5)
        assert relative_out_degree(g, "sum") == 2.0
        assert relative_out_degree(g, "mean") == 4.0

    def test_needs_both_classes(self):
        with pytest.raises(InvalidInput):
            relative_out_degree(threshold_graph(np.ones((2, 2)), ["R:a", "R:b"], 0.5))

    def test_relabel_within_class(self):
        m = rescale_ete(np.random.default_rng(2).random((6, 6)))
        labels = ["R:a", "R:b", "R:c", "P:a", "P:b", "P:c"]
        renamed = ["R:z", "R:y", "R:x", "P:q", "P:r", "P:s"]
        for th in (0.2, 0.5, 0.8):
            first = relative_out_degree(threshold_graph(m, labels, th))
            second = relative_out_degree(threshold_graph(m, renamed, th))
            assert first == second or (math.isnan(first) and math.isnan(second))

    def test_format(self):
        assert format_ratio(math.inf) == "inf"
        assert format_ratio(math.nan) == "undefined"
        assert format_ratio(1.5) == 1.5


class TestSweep:
    def test_hand_argmax(self):
        result = threshold_sweep(HAND, LABELS)
        assert len(result.points) == 101
        assert result.argmax.th == 0.5
        assert result.argmax.ratio == 4.0
        assert result.argmax.edges == 5

    def test_sentinels_in_frame(self):
        frame = threshold_sweep(HAND, LABELS).to_frame()
        assert list(frame.columns) == ["th", "ratio", "edges", "polarity_out", "return_out", "ratio_mean"]
        assert frame.loc[frame["th"] == 0.8, "ratio"].item() == "inf"
        assert frame.loc[frame["th"] == 1.0, "ratio"].item() == "undefined"

    def test_single_threshold(self):
        result = threshold_sweep(HAND, LABELS, grid=[0.0])
        assert len(result.points) == 1
        assert result.argmax.th == 0.0
        assert result.argmax.edges == 12
        assert result.argmax.ratio == 1.0

    def test_only_infinite_ratios(self):
        result = threshold_sweep(HAND, LABELS, grid=[0.75, 0.8, 0.95])
        assert result.argmax.th == 0.8
        assert result.argmax.ratio == math.inf

    def test_only_undefined_ratios(self):
        result = threshold_sweep(HAND, LABELS, grid=[0.95, 1.0])
        assert result.argmax.th == 1.0

    def test_mean_mode_argmax(self):
        result = threshold_sweep(HAND, LABELS, mode="mean")
        assert result.argmax.ratio_mean == 4.0
        assert result.argmax.th == 0.5

    @pytest.mark.parametrize("grid", [[], [0.5, 0.2], [0.0, 1.5]])
    def test_invalid_grid(self, grid):
        with pytest.raises(InvalidInput):
            threshold_sweep(HAND, LABELS, grid=grid)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        labels = [f"R:{i}" for i in range(4)] + [f"P:{i}" for i in range(4)]
        grid = default_grid()
        for _ in range(50):
            m = rescale_ete(_random_matrix(rng))
            result = threshold_sweep(m, labels)

            cuts = np.unique(m[~np.eye(8, dtype=bool)])
            ratios = [relative_out_degree(threshold_graph(m, labels, cut)) for cut in cuts]
            best = max(r for r in ratios if math.isfinite(r))
            assert result.argmax.ratio == best

            on_grid = [relative_out_degree(threshold_graph(m, labels, th)) for th in grid]
            best_th = max(th for th, r in zip(grid, on_grid) if r == best)
            assert result.argmax.th == best_th

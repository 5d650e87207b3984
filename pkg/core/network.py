# Copyright © 2025 SRF Development, Inc. All rights reserved.
# SPDX-License-Identifier: MIT

"""
Thresholded information-flow networks built from an ETE matrix.

Matrix entry (i, j) is the flow from node j into node i, so an edge j -> i
exists at threshold th when m[i, j] >= th.
"""

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Union

import networkx as nx
import numpy as np
import pandas as pd

from core.exceptions import DegenerateRange, InvalidInput, ShapeMismatch
from core.infoflow import ETEMatrix

DirectedGraph = nx.DiGraph
RatioMode = Literal["sum", "mean"]

INFINITE = "inf"
UNDEFINED = "undefined"


class NodeClass(str, Enum):
    RETURN = "return"
    POLARITY = "polarity"


def node_classes(labels: Sequence[str]) -> List[NodeClass]:
    """Class of each label from its 'R:' / 'P:' prefix."""
    classes = []
    for label in labels:
        if label.startswith("R:"):
            classes.append(NodeClass.RETURN)
        elif label.startswith("P:"):
            classes.append(NodeClass.POLARITY)
        else:
            raise InvalidInput(f"label {label!r} carries no 'R:' or 'P:' class prefix")
    return classes


def default_grid() -> np.ndarray:
    """0.00 .. 1.00 in steps of 0.01."""
    return np.arange(101) / 100


def format_ratio(value: float) -> Union[float, str]:
    """JSON/CSV form of a ratio: the sentinels become 'inf' and 'undefined'."""
    if math.isnan(value):
        return UNDEFINED
    if math.isinf(value):
        return INFINITE
    return value


# --- Rescaling and graphs ---

def rescale_ete(m: Union[ETEMatrix, np.ndarray]) -> np.ndarray:
    """Min-max rescaling of the off-diagonal entries to [0, 1]; the diagonal is set to 0."""
    values = np.array(m.values if isinstance(m, ETEMatrix) else m, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got {values.shape}")
    off = ~np.eye(values.shape[0], dtype=bool)
    entries = values[off]
    if np.isinf(entries).any() or np.isnan(entries).all():
        raise InvalidInput("off-diagonal entries must be finite")
    lo, hi = np.nanmin(entries), np.nanmax(entries)
    if hi == lo:
        raise DegenerateRange(f"off-diagonal entries are all equal to {lo}")
    rescaled = (values - lo) / (hi - lo)
    np.fill_diagonal(rescaled, 0.0)
    return rescaled


def threshold_graph(m: np.ndarray, labels: Sequence[str], th: float,
                    classes: Optional[Sequence[NodeClass]] = None) -> DirectedGraph:
    """Directed graph with an edge j -> i for every m[i, j] >= th, i != j."""
    m = np.asarray(m, dtype=float)
    if m.shape != (len(labels), len(labels)):
        raise ShapeMismatch(f"matrix {m.shape} does not match {len(labels)} labels")
    classes = list(classes) if classes is not None else node_classes(labels)

    graph = nx.DiGraph(threshold=th)
    for label, kind in zip(labels, classes):
        graph.add_node(label, kind=NodeClass(kind))
    destinations, sources = np.nonzero(m >= th)
    for i, j in zip(destinations, sources):
        if i != j:
            graph.add_edge(labels[j], labels[i], weight=float(m[i, j]))
    return graph


@dataclass(frozen=True)
class DegreeRecord:
    nd_in: Dict[str, int]
    nd_out: Dict[str, int]

    @property
    def edges(self) -> int:
        return sum(self.nd_out.values())

    def to_frame(self, graph: DirectedGraph) -> pd.DataFrame:
        return pd.DataFrame({
            "label": list(graph.nodes),
            "class": [graph.nodes[n]["kind"].value for n in graph.nodes],
            "nd_in": [self.nd_in[n] for n in graph.nodes],
            "nd_out": [self.nd_out[n] for n in graph.nodes],
        })


def degrees(g: DirectedGraph) -> DegreeRecord:
    return DegreeRecord(dict(g.in_degree()), dict(g.out_degree()))


def _ratio(polarity_out: float, return_out: float) -> float:
    if return_out == 0:
        return math.inf if polarity_out > 0 else math.nan
    return polarity_out / return_out


def relative_out_degree(g: DirectedGraph, mode: RatioMode = "sum") -> float:
    """
    ND_out(polarity) / ND_out(returns). mode='sum' compares class totals,
    mode='mean' compares per-node averages. Returns inf when only polarity
    nodes send edges and nan when no node does.
    """
    out = {NodeClass.POLARITY: 0, NodeClass.RETURN: 0}
    size = {NodeClass.POLARITY: 0, NodeClass.RETURN: 0}
    for node, nd_out in g.out_degree():
        kind = g.nodes[node]["kind"]
        out[kind] += nd_out
        size[kind] += 1
    if not size[NodeClass.POLARITY] or not size[NodeClass.RETURN]:
        raise InvalidInput("the graph needs both polarity and return nodes")
    if mode == "mean":
        return _ratio(out[NodeClass.POLARITY] / size[NodeClass.POLARITY], out[NodeClass.RETURN] / size[NodeClass.RETURN])
    return _ratio(out[NodeClass.POLARITY], out[NodeClass.RETURN])


# --- Sweep ---

@dataclass(frozen=True)
class SweepPoint:
    th: float
    ratio: float
    ratio_mean: float
    edges: int
    polarity_out: int
    return_out: int

    def record(self) -> dict:
        return {
            "th": self.th,
            "ratio": format_ratio(self.ratio),
            "ratio_mean": format_ratio(self.ratio_mean),
            "edges": self.edges,
            "polarity_out": self.polarity_out,
            "return_out": self.return_out,
        }


@dataclass(frozen=True)
class SweepResult:
    points: List[SweepPoint]
    argmax: SweepPoint

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([p.record() for p in self.points],
                            columns=["th", "ratio", "edges", "polarity_out", "return_out", "ratio_mean"])


def _pick_argmax(points: Sequence[SweepPoint], mode: RatioMode = "sum") -> SweepPoint:
    field = "ratio" if mode == "sum" else "ratio_mean"
    finite = [p for p in points if math.isfinite(getattr(p, field))]
    if finite:
        best = max(getattr(p, field) for p in finite)
        return max((p for p in finite if getattr(p, field) == best), key=lambda p: p.th)
    infinite = [p for p in points if math.isinf(getattr(p, field))]
    return max(infinite or points, key=lambda p: p.th)


def threshold_sweep(m: np.ndarray, labels: Sequence[str], grid: Optional[Sequence[float]] = None,
                    classes: Optional[Sequence[NodeClass]] = None, mode: RatioMode = "sum") -> SweepResult:
    """
    Relative out-degree at every threshold of `grid` (default 0.00 .. 1.00).
    The argmax is taken over finite ratios (class totals, or per-node means
    with mode='mean') with ties going to the largest th. Sentinel ratios only
    win when no finite ratio exists.
    """
    m = np.asarray(m, dtype=float)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise InvalidInput("threshold grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) < 0) or grid.min() < 0 or grid.max() > 1:
        raise InvalidInput("threshold grid must be sorted and lie in [0, 1]")
    if m.shape != (len(labels), len(labels)):
        raise ShapeMismatch(f"matrix {m.shape} does not match {len(labels)} labels")
    classes = np.array([NodeClass(c) for c in (classes if classes is not None else node_classes(labels))])
    is_polarity = classes == NodeClass.POLARITY
    n_polarity, n_return = int(is_polarity.sum()), int((~is_polarity).sum())
    if not n_polarity or not n_return:
        raise InvalidInput("the network needs both polarity and return nodes")

    off = ~np.eye(len(labels), dtype=bool)
    points = []
    for th in grid:
        # column j of the mask holds the edges leaving node j
        out_degree = ((m >= th) & off).sum(axis=0)
        polarity_out = int(out_degree[is_polarity].sum())
        return_out = int(out_degree[~is_polarity].sum())
        points.append(SweepPoint(
            th=float(th),
            ratio=_ratio(polarity_out, return_out),
            ratio_mean=_ratio(polarity_out / n_polarity, return_out / n_return),
            edges=polarity_out + return_out,
            polarity_out=polarity_out,
            return_out=return_out,
        ))
    return SweepResult(points, _pick_argmax(points, mode))


# --- Export ---

def write_graph(g: DirectedGraph, edges_path: Union[str, Path], nodes_path: Union[str, Path]) -> None:
    edges = pd.DataFrame(
        [(src, dst, data["weight"]) for src, dst, data in g.edges(data=True)],
        columns=["src", "dst", "weight"],
    )
    edges.to_csv(edges_path, index=False)
    degrees(g).to_frame(g).to_csv(nodes_path, index=False)

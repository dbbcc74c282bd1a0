"""
Topic correlation networks.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd

from ..api import AllTracker, DataError

log = logging.getLogger(__name__)

__all__ = [
    "TopicGraph",
    "correlation_graph",
    "density",
    "degree_centrality",
    "sigma_correlation",
    "write_graph",
]

#: Default minimum correlation of linked topics.
DEFAULT_THRESHOLD = 0.01

__tracker = AllTracker(globals())


@dataclass(frozen=True)
class TopicGraph:
    """
    An undirected graph with one node per topic, linking topics whose proportions
    are correlated across documents.

    Nodes are numbered from 0; edges ``(i, j, weight)`` have ``i < j`` and are sorted.
    """

    #: the label of each node
    labels: Tuple[str, ...]
    #: the weighted edges
    edges: Tuple[Tuple[int, int, float], ...]
    #: the correlation threshold the edges exceed
    threshold: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        edges = tuple(sorted((int(i), int(j), float(w)) for i, j, w in self.edges))
        object.__setattr__(self, "edges", edges)
        n = len(self.labels)
        for i, j, weight in edges:
            if not 0 <= i < j < n:
                raise ValueError(
                    f"edge ({i}, {j}) must link distinct nodes i < j in range [0, {n})"
                )
            if not weight > self.threshold:
                raise ValueError(
                    f"edge ({i}, {j}) has weight {weight} not exceeding the "
                    f"threshold {self.threshold}"
                )

    @property
    def n_nodes(self) -> int:
        """
        The number of topics K.
        """
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        """
        The number of edges E.
        """
        return len(self.edges)

    def to_networkx(self) -> nx.Graph:
        """
        :return: this graph as a :class:`networkx.Graph`, with node attribute
            ``label`` and edge attribute ``weight``
        """
        graph = nx.Graph(threshold=self.threshold)
        for node, label in enumerate(self.labels):
            graph.add_node(node, label=label)
        graph.add_weighted_edges_from(self.edges)
        return graph


def correlation_graph(
    theta: np.ndarray,
    threshold: float = DEFAULT_THRESHOLD,
    labels: Optional[Sequence[str]] = None,
) -> TopicGraph:
    """
    Link topics whose proportions have a Pearson correlation across documents
    above a threshold.

    Topics with constant proportions are not linked.

    :param theta: the D × K topic proportions
    :param threshold: the minimum correlation of linked topics, exclusive
    :param labels: the labels of the topics; ``T1``, ``T2``, … if not stated
    :return: the graph, weighted by correlation
    :raise DataError: fewer than 3 documents
    """
    theta = np.asarray(theta, dtype=np.float64)
    n_documents, n_topics = theta.shape
    if n_documents < 3:
        raise DataError(
            f"topic correlations require at least 3 documents but got {n_documents}"
        )
    if labels is None:
        labels = [f"T{k + 1}" for k in range(n_topics)]
    elif len(labels) != n_topics:
        raise ValueError(
            f"arg labels has {len(labels)} entries but theta has {n_topics} columns"
        )

    variable = np.flatnonzero(theta.std(axis=0) > 0)
    if len(variable) < n_topics:
        constant = sorted(set(range(n_topics)) - set(variable.tolist()))
        log.warning(
            "topics with constant proportions are excluded from the network: "
            f"{', '.join(labels[k] for k in constant)}"
        )

    edges = []
    if len(variable) >= 2:
        correlation = np.clip(np.corrcoef(theta[:, variable], rowvar=False), -1.0, 1.0)
        for a in range(len(variable)):
            for b in range(a + 1, len(variable)):
                if correlation[a, b] > threshold:
                    edges.append(
                        (int(variable[a]), int(variable[b]), float(correlation[a, b]))
                    )

    return TopicGraph(labels=tuple(labels), edges=tuple(edges), threshold=threshold)


def density(g: TopicGraph) -> float:
    """
    Compute the share of realized edges among all possible edges, 2E / (K (K-1)).

    :param g: the graph; must have at least 2 nodes
    :return: the density
    """
    if g.n_nodes < 2:
        raise ValueError(f"density requires at least 2 nodes but the graph has {g.n_nodes}")
    return float(nx.density(g.to_networkx()))


def degree_centrality(g: TopicGraph) -> pd.DataFrame:
    """
    Count the links of each topic.

    Correlation networks are undirected, so each topic's in-degree equals its
    degree.

    :param g: the graph
    :return: a data frame indexed by node, with columns ``label``, ``in_degree``
        (the number of links) and ``weighted_in_degree`` (the sum of link weights)
    """
    graph = g.to_networkx()
    nodes = list(range(g.n_nodes))
    degree = dict(graph.degree())
    weighted = dict(graph.degree(weight="weight"))
    return pd.DataFrame(
        {
            "label": list(g.labels),
            "in_degree": [int(degree[node]) for node in nodes],
            "weighted_in_degree": [float(weighted[node]) for node in nodes],
        },
        index=pd.Index(nodes, name="node"),
    )


def sigma_correlation(sigma: np.ndarray) -> np.ndarray:
    """
    Convert a topic covariance to correlations.

    :param sigma: the (K-1) × (K-1) topic covariance of a fitted model
    :return: the correlation matrix
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    scale = np.sqrt(np.diag(sigma))
    correlation = sigma / np.outer(scale, scale)
    np.fill_diagonal(correlation, 1.0)
    return np.clip(correlation, -1.0, 1.0)


def write_graph(
    g: TopicGraph,
    directory: Union[str, Path],
    *,
    prevalence: Optional[Sequence[float]] = None,
) -> None:
    """
    Write a graph to files ``edges.csv`` (columns ``source``, ``target``,
    ``weight``), ``nodes.csv`` (columns ``id``, ``label``, ``degree``,
    ``weighted_degree``, ``prevalence``, ``rank``) and ``graph.graphml``.

    Topic ids in the CSV files count from 1.
    Nodes are ranked by degree, then weighted degree, both descending.

    :param g: the graph
    :param directory: the directory; created if it does not exist
    :param prevalence: the overall prevalence of each topic
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    pd.DataFrame(
        [(i + 1, j + 1, weight) for i, j, weight in g.edges],
        columns=["source", "target", "weight"],
    ).to_csv(
        directory / "edges.csv", index=False, float_format="%.6g", lineterminator="\n"
    )

    degrees = degree_centrality(g)
    nodes = pd.DataFrame(
        {
            "id": degrees.index + 1,
            "label": degrees["label"],
            "degree": degrees["in_degree"],
            "weighted_degree": degrees["weighted_in_degree"],
            "prevalence": (
                np.full(g.n_nodes, np.nan) if prevalence is None else list(prevalence)
            ),
        }
    )
    order = sorted(
        range(g.n_nodes),
        key=lambda node: (-nodes["degree"][node], -nodes["weighted_degree"][node], node),
    )
    nodes["rank"] = 0
    for rank, node in enumerate(order, start=1):
        nodes.loc[node, "rank"] = rank
    nodes.to_csv(
        directory / "nodes.csv", index=False, float_format="%.6g", lineterminator="\n"
    )

    nx.write_graphml(g.to_networkx(), directory / "graph.graphml")


__tracker.validate()

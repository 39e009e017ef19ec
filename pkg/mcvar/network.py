"""
Commodity Effect Networks

One directed graph per class: an edge i -> j exists when the lag-summed
coefficient of series i in the equation of series j is non-zero. Only
cross-commodity effects are kept, so there are no self-loops.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np
import pandas as pd

from mcvar.config import commodity_types
from mcvar.exceptions import NodeMismatchError, UntypedNodeError
from mcvar.model import MultiClassVarFit

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EffectNetwork:
    """
    Directed, Signed, Weighted Effect Network of One Class

    Nodes carry a `type` attribute, edges a `weight` (the lag-summed
    coefficient) and a `sign` of +1 or -1.
    """

    class_id: str
    graph: nx.DiGraph

    @property
    def nodes(self) -> list[str]:
        """
        Series identifiers in insertion order
        """
        return list(self.graph.nodes)

    @property
    def types(self) -> dict[str, str]:
        """
        Commodity type of every node
        """
        return dict(self.graph.nodes(data="type"))

    @property
    def edges(self) -> list[tuple[str, str, float, int]]:
        """
        `(source, target, weight, sign)` for every edge
        """
        return [
            (source, target, data["weight"], data["sign"])
            for source, target, data in self.graph.edges(data=True)
        ]

    def edge_set(self) -> set[tuple[str, str]]:
        """
        The support as `(source, target)` pairs
        """
        return set(self.graph.edges)

    @property
    def n_edges(self) -> int:
        """
        Number of edges
        """
        return int(self.graph.number_of_edges())

    @classmethod
    def from_matrix(
        cls,
        class_id: str,
        effects: np.ndarray,
        nodes: Sequence[str],
        types: Sequence[str | None],
    ) -> EffectNetwork:
        """
        Network of a J x J lag-summed matrix, entry (j, i) for i -> j
        """
        graph = nx.DiGraph(class_id=class_id)
        for node, node_type in zip(nodes, types):
            graph.add_node(node, type=node_type)
        targets, sources = np.nonzero(effects)
        for j, i in zip(targets.tolist(), sources.tolist()):
            if i == j:
                continue
            weight = float(effects[j, i])
            graph.add_edge(
                nodes[i], nodes[j], weight=weight, sign=1 if weight > 0 else -1
            )
        return cls(class_id=class_id, graph=graph)


def cancelled_pairs(fit: MultiClassVarFit, class_id: str | int) -> list[tuple[str, str]]:
    """
    Pairs with non-zero lag coefficients whose sum over lags is exactly zero
    """
    blocks = fit.lag_blocks(class_id)
    cancelled = (blocks != 0).any(axis=0) & (blocks.sum(axis=0) == 0)
    np.fill_diagonal(cancelled, False)
    targets, sources = np.nonzero(cancelled)
    return [
        (fit.series[i], fit.series[j])
        for j, i in zip(targets.tolist(), sources.tolist())
    ]


def build_network(fit: MultiClassVarFit, class_id: str | int) -> EffectNetwork:
    """
    Effect network of one class

    Raises
    ------
    ClassNotFoundError
        `class_id` names no class of the fit.
    """
    k = fit.class_index(class_id)
    if fit.lag_order > 1:
        cancelled = cancelled_pairs(fit, k)
        if cancelled:
            logger.warning(
                "Class `%s`: lag effects cancel to zero for %s",
                fit.classes[k],
                ", ".join(f"{source}->{target}" for source, target in cancelled),
            )
    return EffectNetwork.from_matrix(
        fit.classes[k], fit.effect_sums(k), fit.series, fit.types
    )


def build_networks(fit: MultiClassVarFit) -> list[EffectNetwork]:
    """
    Effect networks of every class, in class order
    """
    return [build_network(fit, k) for k in range(fit.n_classes)]


def _scaled(values: np.ndarray) -> np.ndarray:
    peak = values.max(initial=0)
    if peak == 0:
        return np.zeros(values.shape)
    return values / peak


def connectedness(network: EffectNetwork) -> pd.DataFrame:
    """
    In-going, out-going and total connectedness of every node

    Degrees are divided by their class maximum; when that maximum is zero
    every score is zero.

    Returns
    -------
    pd.DataFrame
        Indexed by series with columns `in`, `out` and `total`.
    """
    nodes = network.nodes
    in_degree = np.array([network.graph.in_degree(node) for node in nodes], dtype=float)
    out_degree = np.array(
        [network.graph.out_degree(node) for node in nodes], dtype=float
    )
    return pd.DataFrame(
        {
            "in": _scaled(in_degree),
            "out": _scaled(out_degree),
            "total": _scaled(in_degree + out_degree),
        },
        index=pd.Index(nodes, name="series"),
    )


def _check_same_nodes(networks: Sequence[EffectNetwork]) -> None:
    if not networks:
        return
    reference = networks[0].nodes
    for network in networks[1:]:
        if network.nodes != reference:
            msg = (
                f"Networks `{networks[0].class_id}` and `{network.class_id}` "
                "are built over different series"
            )
            raise NodeMismatchError(msg)


def shared_effects(networks: Sequence[EffectNetwork]) -> pd.DataFrame:
    """
    Proportion of the effects of the row class also present in the column class

    Rows of classes without any edge are undefined (NaN).

    Raises
    ------
    NodeMismatchError
        The networks do not share their node set.
    """
    _check_same_nodes(networks)
    labels = [network.class_id for network in networks]
    matrix = np.full((len(networks), len(networks)), np.nan)
    for a, row in enumerate(networks):
        row_edges = row.edge_set()
        if not row_edges:
            continue
        for b, column in enumerate(networks):
            matrix[a, b] = len(row_edges & column.edge_set()) / len(row_edges)
    return pd.DataFrame(
        matrix,
        index=pd.Index(labels, name="class"),
        columns=pd.Index(labels, name="class"),
    )


def _type_labels(
    network: EffectNetwork, type_labels: Sequence[str] | None
) -> list[str]:
    allowed = list(type_labels or commodity_types)
    for node, node_type in network.types.items():
        if not node_type or node_type not in allowed:
            msg = f"Node `{node}` has no usable commodity type ({node_type!r})"
            raise UntypedNodeError(msg)
    present = set(network.types.values())
    return [label for label in allowed if label in present]


def type_edge_counts(
    network: EffectNetwork, type_labels: Sequence[str] | None = None
) -> pd.DataFrame:
    """
    Edge counts from type a (rows) to type b (columns)
    """
    labels = _type_labels(network, type_labels)
    types = network.types
    counts = pd.DataFrame(
        0,
        index=pd.Index(labels, name="from"),
        columns=pd.Index(labels, name="to"),
    )
    for source, target in network.graph.edges:
        counts.loc[types[source], types[target]] += 1
    return counts


def type_effects(
    network: EffectNetwork, type_labels: Sequence[str] | None = None
) -> pd.DataFrame:
    """
    Within-type (diagonal) and spillover (off-diagonal) effect proportions

    Entry (a, b) is the edge count from type a to type b over the number of
    possible ordered pairs, m_a * m_b off the diagonal and m_a * (m_a - 1)
    on it. Cells without any possible pair are NaN.

    Raises
    ------
    UntypedNodeError
        A node has no type, or one outside `type_labels`.
    """
    counts = type_edge_counts(network, type_labels)
    sizes = pd.Series(list(network.types.values())).value_counts()
    m = sizes.reindex(counts.index).to_numpy(dtype=float)
    possible = np.outer(m, m) - np.diag(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        proportions = np.where(possible > 0, counts.to_numpy() / possible, np.nan)
    return pd.DataFrame(proportions, index=counts.index, columns=counts.columns)


def density(network: EffectNetwork) -> float:
    """
    Share of the J (J - 1) possible effects that are present
    """
    if network.graph.number_of_nodes() < 2:  # noqa: PLR2004
        return 0.0
    return float(nx.density(network.graph))


def network_summary(networks: Sequence[EffectNetwork]) -> pd.DataFrame:
    """
    Edge counts and density of every class
    """
    rows = []
    for network in networks:
        signs = [sign for *_, sign in network.edges]
        rows.append(
            {
                "class": network.class_id,
                "edges": network.n_edges,
                "positive": sum(1 for sign in signs if sign > 0),
                "negative": sum(1 for sign in signs if sign < 0),
                "density": density(network),
            }
        )
    return pd.DataFrame(rows, columns=["class", "edges", "positive", "negative", "density"])

"""
Effect Network Tests
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd
import pytest

from mcvar.exceptions import ClassNotFoundError, NodeMismatchError, UntypedNodeError
from mcvar.model import FitDiagnostics, MultiClassVarFit, PenaltyConfig
from mcvar.network import (
    EffectNetwork,
    build_network,
    build_networks,
    cancelled_pairs,
    connectedness,
    density,
    network_summary,
    shared_effects,
    type_edge_counts,
    type_effects,
)

NODES = ["a", "b", "c", "d"]
TYPES = ["energy", "energy", "metal", "agriculture"]


def effects_matrix(edges: dict[tuple[int, int], float]) -> np.ndarray:
    """
    J x J matrix with entry (j, i) set for every i -> j edge
    """
    effects = np.zeros((4, 4))
    for (source, target), weight in edges.items():
        effects[target, source] = weight
    return effects


@pytest.fixture
def world() -> EffectNetwork:
    """
    a -> b, a -> c (negative), c -> d, plus an ignored self effect
    """
    effects = effects_matrix({(0, 1): 0.5, (0, 2): -0.2, (2, 3): 0.3, (0, 0): 0.4})
    return EffectNetwork.from_matrix("world", effects, NODES, TYPES)


def fit_from_blocks(blocks: np.ndarray) -> MultiClassVarFit:
    """
    Fit holding K x P x J x J lag blocks
    """
    n_classes, n_lags, n_series, _ = blocks.shape
    coefficients = np.concatenate(list(np.moveaxis(blocks, 1, 0)), axis=2)
    return MultiClassVarFit(
        coefficients=coefficients,
        precisions=np.tile(np.eye(n_series), (n_classes, 1, 1)),
        penalty=PenaltyConfig(),
        diagnostics=FitDiagnostics(),
        classes=[f"k{k}" for k in range(n_classes)],
        series=NODES[:n_series],
        types=TYPES[:n_series],
    )


def test_from_matrix(world: EffectNetwork) -> None:
    """
    Non-zero off-diagonal entries become signed edges
    """
    assert world.nodes == NODES
    assert world.types == dict(zip(NODES, TYPES))
    assert world.edges == [
        ("a", "b", 0.5, 1),
        ("a", "c", -0.2, -1),
        ("c", "d", 0.3, 1),
    ]
    assert world.n_edges == 3
    assert ("a", "a") not in world.edge_set()


def test_connectedness(world: EffectNetwork) -> None:
    """
    Degrees scaled by the class maximum
    """
    scores = connectedness(world)
    assert list(scores.index) == NODES
    np.testing.assert_allclose(scores["in"], [0.0, 1.0, 1.0, 1.0])
    np.testing.assert_allclose(scores["out"], [1.0, 0.0, 0.5, 0.0])
    np.testing.assert_allclose(scores["total"], [1.0, 0.5, 1.0, 0.5])


def test_connectedness_of_empty_network() -> None:
    """
    A network without edges scores zero everywhere
    """
    empty = EffectNetwork.from_matrix("empty", np.eye(4), NODES, TYPES)
    scores = connectedness(empty)
    assert (scores.to_numpy() == 0).all()


def test_shared_effects(world: EffectNetwork) -> None:
    """
    Row-normalized overlap of edge sets, undefined for empty rows
    """
    other = EffectNetwork.from_matrix(
        "india",
        effects_matrix({(0, 1): 0.1, (2, 3): 0.1, (3, 1): 0.1}),
        NODES,
        TYPES,
    )
    empty = EffectNetwork.from_matrix("china", np.zeros((4, 4)), NODES, TYPES)
    shared = shared_effects([world, other, empty])
    assert list(shared.index) == ["world", "india", "china"]
    assert shared.loc["world", "world"] == 1.0
    assert shared.loc["world", "india"] == pytest.approx(2 / 3)
    assert shared.loc["india", "world"] == pytest.approx(2 / 3)
    assert shared.loc["world", "china"] == 0.0
    assert shared.loc["china"].isna().all()


def test_shared_effects_asymmetric() -> None:
    """
    Overlap is normalized by the row network's own edge count
    """
    first = EffectNetwork.from_matrix(
        "first", effects_matrix({(0, 1): 0.2, (1, 2): 0.2}), NODES, TYPES
    )
    second = EffectNetwork.from_matrix(
        "second",
        effects_matrix({(1, 2): -0.1, (2, 3): 0.1, (3, 0): 0.1}),
        NODES,
        TYPES,
    )
    shared = shared_effects([first, second])
    assert shared.loc["first", "second"] == pytest.approx(1 / 2)
    assert shared.loc["second", "first"] == pytest.approx(1 / 3)
    assert shared.loc["second", "second"] == 1.0


def test_shared_effects_node_mismatch(world: EffectNetwork) -> None:
    """
    Networks must be built over the same series
    """
    other = EffectNetwork.from_matrix(
        "india", np.zeros((4, 4)), ["a", "b", "c", "e"], TYPES
    )
    with pytest.raises(NodeMismatchError):
        shared_effects([world, other])


def test_type_effects(world: EffectNetwork) -> None:
    """
    Edge counts over the possible ordered pairs of each type combination
    """
    counts = type_edge_counts(world)
    assert list(counts.index) == ["energy", "metal", "agriculture"]
    assert counts.loc["energy", "energy"] == 1
    assert counts.loc["energy", "metal"] == 1
    assert counts.loc["metal", "agriculture"] == 1
    effects = type_effects(world)
    assert effects.loc["energy", "energy"] == pytest.approx(0.5)
    assert effects.loc["energy", "metal"] == pytest.approx(0.5)
    assert effects.loc["metal", "agriculture"] == pytest.approx(1.0)
    assert effects.loc["agriculture", "energy"] == 0.0
    assert np.isnan(effects.loc["metal", "metal"])
    assert np.isnan(effects.loc["agriculture", "agriculture"])


def test_untyped_node() -> None:
    """
    Every node needs a known type
    """
    network = EffectNetwork.from_matrix(
        "world", np.zeros((4, 4)), NODES, ["energy", None, "metal", "metal"]
    )
    with pytest.raises(UntypedNodeError):
        type_effects(network)


def test_density_and_summary(world: EffectNetwork) -> None:
    """
    Three of twelve possible effects, one of them negative
    """
    assert density(world) == pytest.approx(0.25)
    summary = network_summary([world])
    assert summary.to_dict("records") == [
        {"class": "world", "edges": 3, "positive": 2, "negative": 1, "density": 0.25}
    ]


def test_build_network_sums_lags() -> None:
    """
    Edges follow the lag-summed coefficients
    """
    blocks = np.zeros((1, 2, 3, 3))
    blocks[0, 0, 1, 0] = 0.2
    blocks[0, 1, 1, 0] = 0.1
    blocks[0, 1, 2, 1] = -0.4
    network = build_network(fit_from_blocks(blocks), "k0")
    assert network.edges == [("a", "b", pytest.approx(0.3), 1), ("b", "c", -0.4, -1)]


def test_cancelled_effects_warn(caplog: pytest.LogCaptureFixture) -> None:
    """
    Lag effects summing to zero drop the edge with a warning
    """
    blocks = np.zeros((2, 2, 3, 3))
    blocks[0, 0, 1, 0] = 0.3
    blocks[0, 1, 1, 0] = -0.3
    fit = fit_from_blocks(blocks)
    assert cancelled_pairs(fit, 0) == [("a", "b")]
    with caplog.at_level(logging.WARNING, logger="mcvar"):
        networks = build_networks(fit)
    assert [network.class_id for network in networks] == ["k0", "k1"]
    assert networks[0].n_edges == 0
    assert "a->b" in caplog.text
    with pytest.raises(ClassNotFoundError):
        build_network(fit, "k7")


def test_summary_columns_without_networks() -> None:
    """
    The summary keeps its columns when empty
    """
    summary = network_summary([])
    assert isinstance(summary, pd.DataFrame)
    assert list(summary.columns) == ["class", "edges", "positive", "negative", "density"]


def test_type_effects_proportions() -> None:
    """
    Four edges among five agricultural series and one energy to agriculture
    edge over ten possible pairs
    """
    nodes = ["crude", "gas", "wheat", "corn", "soy", "rice", "oats"]
    types = ["energy", "energy"] + ["agriculture"] * 5
    effects = np.zeros((7, 7))
    for source, target in [(2, 3), (3, 4), (4, 5), (5, 6)]:
        effects[target, source] = 0.1
    effects[2, 0] = 0.2
    network = EffectNetwork.from_matrix("world", effects, nodes, types)
    proportions = type_effects(network)
    assert proportions.loc["agriculture", "agriculture"] == pytest.approx(0.2)
    assert proportions.loc["energy", "agriculture"] == pytest.approx(0.1)
    assert proportions.loc["energy", "energy"] == 0.0

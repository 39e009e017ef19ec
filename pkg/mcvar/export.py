"""
Network Exports

Graphviz DOT and JSON documents of effect networks, plus the statistics
tables laid out with commodities or classes as rows.
"""

from __future__ import annotations

from typing import Any, Sequence

import pandas as pd

from mcvar.config import (
    negative_color,
    negative_gray,
    pen_width_range,
    positive_color,
    positive_gray,
)
from mcvar.network import EffectNetwork, connectedness


def _quote(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def pen_width(weight: float, max_weight: float) -> float:
    """
    Linear map of |weight| from [0, max_weight] onto the pen-width range
    """
    low, high = pen_width_range
    if max_weight == 0:
        return low
    return low + (high - low) * abs(weight) / max_weight


def to_dot(network: EffectNetwork, grayscale: bool = False) -> str:
    """
    Graphviz digraph of one class

    Each edge carries its signed effect in a custom `effect` attribute and
    leaves `weight` to the Graphviz layout. Pen width grows with |effect|;
    positive effects are drawn in blue and negative ones in red, or dark
    and light gray with `grayscale`.
    """
    colors = (positive_gray, negative_gray) if grayscale else (positive_color, negative_color)
    edges = network.edges
    max_weight = max((abs(weight) for _, _, weight, _ in edges), default=0.0)
    lines = [f"digraph {_quote(network.class_id)} {{"]
    for node, node_type in network.types.items():
        lines.append(f"  {_quote(node)} [type={_quote(str(node_type))}];")
    for source, target, weight, sign in edges:
        color = colors[0] if sign > 0 else colors[1]
        lines.append(
            f"  {_quote(source)} -> {_quote(target)} "
            f'[effect="{weight:.6g}", penwidth={pen_width(weight, max_weight):.3f}, '
            f"color={color}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(network: EffectNetwork) -> dict[str, Any]:
    """
    JSON-ready document with typed nodes and signed weighted edges
    """
    return {
        "class": network.class_id,
        "nodes": [
            {"id": node, "type": node_type} for node, node_type in network.types.items()
        ],
        "edges": [
            {"source": source, "target": target, "weight": weight, "sign": sign}
            for source, target, weight, sign in network.edges
        ],
    }


def connectedness_tables(networks: Sequence[EffectNetwork]) -> dict[str, pd.DataFrame]:
    """
    One table per measure (`in`, `out`, `total`): commodities x classes
    """
    scores = {network.class_id: connectedness(network) for network in networks}
    tables = {}
    for measure in ("in", "out", "total"):
        table = pd.DataFrame(
            {class_id: frame[measure] for class_id, frame in scores.items()}
        )
        table.index.name = "series"
        tables[measure] = table
    return tables

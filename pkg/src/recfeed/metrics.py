"""Offline ranking and session metrics."""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

from .catalog import Catalog, Item


def recall_at(ranking: Sequence[str], target_id: str, n: int) -> float:
    """1.0 when the target sits in the top n, else 0.0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1.0 if target_id in ranking[:n] else 0.0


def ndcg_at(ranking: Sequence[str], target_id: str, n: int) -> float:
    """Single-relevant-item NDCG: 1/log2(rank+1) inside the cutoff, else 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    for index, item_id in enumerate(ranking[:n]):
        if item_id == target_id:
            return 1.0 / math.log2(index + 2)
    return 0.0


def _designated_values(item: Item, keys: Sequence[str]) -> set[tuple[str, object]]:
    values: set[tuple[str, object]] = set()
    for key in keys:
        for v in item.attributes.get(key, ()):
            values.add((key, v))
    return values


def csr_at(
    ranking: Sequence[str],
    target: Item,
    n: int,
    catalog: Catalog,
    keys: Sequence[str],
) -> float | None:
    """Attribute coverage of the top n against the target, averaged per item.

    Each ranked item contributes |shared designated values| divided by the
    target's designated value count; value lists compare as sets. Returns
    None when the target carries no designated values, so callers can
    exclude it from aggregation.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    target_values = _designated_values(target, keys)
    if not target_values:
        return None
    top = ranking[:n]
    if not top:
        return 0.0
    total = 0.0
    for item_id in top:
        item_values = _designated_values(catalog.get(item_id), keys)
        total += len(item_values & target_values) / len(target_values)
    return total / len(top)


def pass_rate(outcomes: Sequence[bool]) -> float:
    """Fraction of sessions that delivered the target in time."""
    if not outcomes:
        raise ValueError("no sessions to aggregate")
    return sum(1.0 for passed in outcomes if passed) / len(outcomes)


def avg_rounds(rounds: Sequence[int | None], t_max: int) -> float:
    """Mean rounds to success; failures count as t_max + 1."""
    if not rounds:
        raise ValueError("no sessions to aggregate")
    total = sum(r if r is not None else t_max + 1 for r in rounds)
    return total / len(rounds)

"""Planning agent: pick a tool chain from the parsed preferences and run it.

Selection is rule-based over bucket occupancy: hard constraints activate
the Filter, positive soft signals or a non-empty history activate the
Matcher, negative soft signals activate the Attenuator, and any scoring
tool pulls in the Aggregator. Matcher and Attenuator share one stage and
both read the Filter's output snapshot.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .aia import AiaScorer
from .catalog import Catalog, Feed, Item, UserHistory
from .embedding import EmbeddingProvider, cosine_sim
from .preferences import Constraint, PreferenceState
from .tools import (
    AGGREGATOR,
    ATTENUATOR,
    DEFAULT_RANKER,
    FILTER,
    MATCHER,
    ScoreBreakdown,
    ToolParams,
    attenuate,
    filter_items,
    format_negative_intent,
    format_positive_intent,
    match_score,
)
from .tools import render_item_text


class PlanError(ValueError):
    """Tool chain violating its structural rules."""


@dataclass(frozen=True)
class ToolChain:
    """Ordered stage groups; tools inside one group may run concurrently."""

    stages: tuple[tuple[str, ...], ...]
    rationales: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        flat = [tool for group in self.stages for tool in group]
        if len(flat) != len(set(flat)):
            raise PlanError("a tool appears twice in the chain")
        if FILTER in flat and FILTER not in self.stages[0]:
            raise PlanError("Filter must run in the first stage")
        if AGGREGATOR in flat and AGGREGATOR not in self.stages[-1]:
            raise PlanError("Aggregator must run in the final stage")
        if FILTER in flat:
            for tool in self.stages[0]:
                if tool in (MATCHER, ATTENUATOR):
                    raise PlanError("scoring tools may not precede the Filter")
        if self.rationales and len(self.rationales) != len(self.stages):
            raise PlanError("one rationale per stage")

    def tools(self) -> tuple[str, ...]:
        return tuple(tool for group in self.stages for tool in group)

    def to_dict(self) -> dict[str, Any]:
        return {
            "stages": [list(group) for group in self.stages],
            "rationales": list(self.rationales),
        }

    @classmethod
    def from_dict(cls, record: dict[str, Any]) -> "ToolChain":
        return cls(
            stages=tuple(tuple(group) for group in record["stages"]),
            rationales=tuple(record.get("rationales", [])),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class PlanTrace:
    """Execution record of one chain run, for the UI and for distillation."""

    chain: ToolChain
    pool_before: int
    pool_after: int
    stage_seconds: list[float] = field(default_factory=list)
    dropped_constraints: list[dict[str, Any]] = field(default_factory=list)
    used_exclusions_only: bool = False
    empty_after_fallback: bool = False
    warnings: list[str] = field(default_factory=list)
    ranking: tuple[str, ...] = ()

    @property
    def fallback(self) -> bool:
        return bool(self.dropped_constraints) or self.used_exclusions_only or self.empty_after_fallback

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        record: dict[str, Any] = {
            "chain": self.chain.to_dict(),
            "pool_before": self.pool_before,
            "pool_after": self.pool_after,
            "fallback": self.fallback,
            "dropped_constraints": list(self.dropped_constraints),
            "used_exclusions_only": self.used_exclusions_only,
            "empty_after_fallback": self.empty_after_fallback,
            "warnings": list(self.warnings),
        }
        if include_timing:
            record["stage_seconds"] = list(self.stage_seconds)
        return record


def select_tools(prefs: PreferenceState, history: UserHistory | None = None) -> ToolChain:
    """Rule-based chain selection over bucket occupancy.

    Fully empty preferences fall back to the popularity ranker regardless
    of history; that is also how the opening feed is produced.
    """
    history_nonempty = bool(history)
    if prefs.is_empty():
        return ToolChain(
            stages=((DEFAULT_RANKER,),),
            rationales=("no preference signals; rank by popularity",),
        )
    stages: list[tuple[str, ...]] = []
    rationales: list[str] = []
    if prefs.positive_hard or prefs.negative_hard:
        stages.append((FILTER,))
        rationales.append("hard constraints present; prune the candidate pool first")
    scoring: list[str] = []
    reasons: list[str] = []
    if prefs.has_positive_soft_signal() or history_nonempty:
        scoring.append(MATCHER)
        reasons.append("positive signals or history available for match scoring")
    if prefs.has_negative_soft_signal():
        scoring.append(ATTENUATOR)
        reasons.append("negative soft signals call for attenuation")
    if scoring:
        stages.append(tuple(scoring))
        rationales.append("; ".join(reasons))
        stages.append((AGGREGATOR,))
        rationales.append("combine tool scores into the final ranking")
    return ToolChain(stages=tuple(stages), rationales=tuple(rationales))


def _run_filter(
    pool: Sequence[Item],
    prefs: PreferenceState,
    catalog: Catalog,
    trace: PlanTrace,
) -> list[Item]:
    """Filter with the relaxation ladder for over-constrained rounds.

    Positive hard constraints drop oldest-first until survivors exist;
    exclusions are never dropped, so a round where the exclusions alone
    empty the pool produces an empty feed rather than violating them.
    """
    positive = list(prefs.positive_hard)
    negative = list(prefs.negative_hard)
    survivors, warnings = filter_items(pool, positive, negative, catalog.attribute_schema)
    trace.warnings.extend(warnings)
    if survivors:
        return survivors
    ordered = sorted(range(len(positive)), key=lambda i: (positive[i].source_round, i))
    remaining = list(positive)
    for index in ordered:
        dropped = positive[index]
        remaining = [c for c in remaining if c is not dropped]
        trace.dropped_constraints.append(dropped.to_dict())
        survivors, _ = filter_items(pool, remaining, negative, catalog.attribute_schema)
        if survivors:
            return survivors
    trace.used_exclusions_only = True
    survivors, _ = filter_items(pool, [], negative, catalog.attribute_schema)
    if not survivors:
        trace.empty_after_fallback = True
    return survivors


def execute_chain(
    chain: ToolChain,
    prefs: PreferenceState,
    history: UserHistory,
    catalog: Catalog,
    params: ToolParams,
    provider: EmbeddingProvider,
    aia: AiaScorer | None,
    k: int,
    round: int,
) -> tuple[Feed, PlanTrace]:
    """Run the stages in order and assemble the next feed.

    The filtered pool feeds both scoring tools; when no scoring tool ran,
    survivors rank by popularity. The full surviving ranking is kept on
    the trace so reports can score beyond the feed size.
    """
    pool = list(catalog.items)
    trace = PlanTrace(chain=chain, pool_before=len(pool), pool_after=len(pool))
    breakdowns = {item.id: ScoreBreakdown() for item in pool}
    survivors = pool
    scored = False

    for group in chain.stages:
        started = time.perf_counter()
        if FILTER in group:
            survivors = _run_filter(pool, prefs, catalog, trace)
            trace.pool_after = len(survivors)
            kept = {item.id for item in survivors}
            for item_id, breakdown in breakdowns.items():
                breakdown.filtered_out = item_id not in kept
        if MATCHER in group or ATTENUATOR in group:
            positive_text = format_positive_intent(prefs)
            negative_text = format_negative_intent(prefs)
            if MATCHER in group:
                _run_matcher(survivors, positive_text, history, params, provider, aia, breakdowns)
                scored = True
            if ATTENUATOR in group:
                if negative_text:
                    for item in survivors:
                        breakdowns[item.id].s_atten = attenuate(
                            item, negative_text, params, provider
                        )
                scored = True
        if DEFAULT_RANKER in group:
            for item in survivors:
                breakdown = breakdowns[item.id]
                breakdown.s_match = item.popularity
                breakdown.s_final = item.popularity
        if AGGREGATOR in group:
            for item in survivors:
                breakdown = breakdowns[item.id]
                breakdown.s_final = breakdown.s_match + breakdown.s_atten
        trace.stage_seconds.append(time.perf_counter() - started)

    if not scored and DEFAULT_RANKER not in chain.tools():
        # Filter-only chains still need an order inside the survivors.
        for item in survivors:
            breakdown = breakdowns[item.id]
            breakdown.s_match = item.popularity
            breakdown.s_final = item.popularity

    entries = sorted(
        ((item.id, breakdowns[item.id]) for item in survivors),
        key=lambda entry: (-entry[1].s_final, entry[0]),
    )
    trace.ranking = tuple(item_id for item_id, _ in entries)
    feed = Feed(round=round, k=k, entries=tuple(entries[:k]))
    return feed, trace


def _run_matcher(
    survivors: Sequence[Item],
    positive_text: str,
    history: UserHistory,
    params: ToolParams,
    provider: EmbeddingProvider,
    aia: AiaScorer | None,
    breakdowns: dict[str, ScoreBreakdown],
) -> None:
    sem_skipped = not positive_text
    aia_skipped = aia is None or not history
    intent_vec = None
    if not sem_skipped:
        intent_vec = provider.embed(positive_text)
        item_vecs = provider.embed_many([render_item_text(item) for item in survivors])
    aia_scores: dict[str, float] = {}
    if not aia_skipped:
        assert aia is not None
        query = intent_vec if intent_vec is not None else aia.neutral_intent()
        raw, _ = aia.score_pool(np.asarray(query), history, [item.id for item in survivors])
        aia_scores = _maybe_standardize(raw, params)
    for index, item in enumerate(survivors):
        breakdown = breakdowns[item.id]
        breakdown.sem_skipped = sem_skipped
        breakdown.aia_skipped = aia_skipped
        if not sem_skipped:
            breakdown.s_sem = cosine_sim(item_vecs[index], intent_vec)
        if not aia_skipped:
            breakdown.s_aia = aia_scores[item.id]
        breakdown.s_match = match_score(
            breakdown.s_sem, breakdown.s_aia, params, sem_skipped, aia_skipped
        )


def _maybe_standardize(raw: dict[str, float], params: ToolParams) -> dict[str, float]:
    if not params.standardize_aia or not raw:
        return raw
    values = np.array(list(raw.values()))
    std = float(values.std())
    if std == 0.0:
        return {key: 0.0 for key in raw}
    mean = float(values.mean())
    return {key: (value - mean) / std for key, value in raw.items()}

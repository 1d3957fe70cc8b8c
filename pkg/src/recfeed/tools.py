"""The four scoring tools and their shared score bookkeeping.

Filter enforces hard constraints by binary selection, Matcher blends a
semantic path with the collaborative path, Attenuator penalizes
similarity to disliked content, Aggregator sums and orders. Every tool is
pure given (catalog, params, provider), so they compose freely and the
scoring stage can fan out per item.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .catalog import Catalog, Item, Quantity, format_number, render_item_text
from .embedding import EmbeddingProvider, cosine_sim
from .preferences import (
    FREE_TEXT_KEY,
    NUMERIC_OPS,
    Constraint,
    PreferenceState,
)


@dataclass
class ScoreBreakdown:
    """Per-item record of what each tool contributed.

    ``s_aia`` stores the value that entered the match blend (standardized
    when pool standardization is on). Skip flags record which match paths
    actually ran; a skipped path's weight moves to the other one.
    """

    s_sem: float = 0.0
    s_aia: float = 0.0
    s_match: float = 0.0
    s_atten: float = 0.0
    s_final: float = 0.0
    filtered_out: bool = False
    sem_skipped: bool = True
    aia_skipped: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "s_sem": self.s_sem,
            "s_aia": self.s_aia,
            "s_match": self.s_match,
            "s_atten": self.s_atten,
            "s_final": self.s_final,
            "filtered_out": self.filtered_out,
            "sem_skipped": self.sem_skipped,
            "aia_skipped": self.aia_skipped,
        }


@dataclass(frozen=True)
class ToolParams:
    """Knobs of the scoring stage.

    ``alpha`` balances the semantic and collaborative match paths;
    ``beta`` scales the attenuation penalty. ``standardize_aia``
    normalizes raw collaborative scores by their pool mean/stddev before
    blending, so dot products and cosines live on comparable scales.
    """

    alpha: float = 0.5
    beta: float = 1.0
    standardize_aia: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")


# -- Filter ------------------------------------------------------------------

def _text_eq(a: Any, b: Any) -> bool:
    if isinstance(a, str) and isinstance(b, str):
        return a.casefold() == b.casefold()
    return False


def _value_matches(item_value: Any, wanted: Any, substring: bool) -> bool:
    if isinstance(item_value, Quantity):
        if isinstance(wanted, (int, float)) and not isinstance(wanted, bool):
            return item_value.value == float(wanted)
        return False
    if isinstance(item_value, bool) or isinstance(wanted, bool):
        return item_value is wanted
    if isinstance(item_value, str):
        if not isinstance(wanted, str):
            return False
        if substring:
            return str(wanted).casefold() in item_value.casefold()
        return _text_eq(item_value, wanted)
    return item_value == wanted


def _any_value_match(item: Item, constraint: Constraint, substring: bool) -> bool:
    values = item.attributes.get(constraint.attribute, ())
    return any(
        _value_matches(v, wanted, substring) for v in values for wanted in constraint.values
    )


def _numeric_holds(item: Item, constraint: Constraint) -> bool:
    numbers = item.numeric_values(constraint.attribute)
    if not numbers:
        return False
    op = constraint.op
    if op == "between":
        low, high = constraint.values
        return any(low <= x <= high for x in numbers)
    bound = float(constraint.values[0])
    if op == "less_than":
        return any(x < bound for x in numbers)
    if op == "less_equal":
        return any(x <= bound for x in numbers)
    if op == "greater_than":
        return any(x > bound for x in numbers)
    return any(x >= bound for x in numbers)


def satisfies_positive_hard(item: Item, constraint: Constraint) -> bool:
    """Does the item meet a positive hard requirement?

    An item lacking the attribute fails the requirement, including for the
    ``excludes`` op; requirements are read conservatively.
    """
    if constraint.attribute not in item.attributes:
        return False
    if constraint.op in NUMERIC_OPS:
        return _numeric_holds(item, constraint)
    if constraint.op == "equals":
        return _any_value_match(item, constraint, substring=False)
    if constraint.op == "contains":
        return _any_value_match(item, constraint, substring=True)
    # excludes: holds when none of the values are present
    return not _any_value_match(item, constraint, substring=False)


def violates_negative_hard(item: Item, constraint: Constraint) -> bool:
    """Does the item trip a negative hard exclusion?

    An item lacking the attribute passes the exclusion; exclusions are
    read permissively so sparse catalogs do not empty out.
    """
    if constraint.attribute not in item.attributes:
        return False
    if constraint.op in NUMERIC_OPS:
        return _numeric_holds(item, constraint)
    if constraint.op == "contains":
        return _any_value_match(item, constraint, substring=True)
    # equals and excludes both name forbidden values here
    return _any_value_match(item, constraint, substring=False)


def filter_items(
    pool: Sequence[Item],
    positive_hard: Sequence[Constraint],
    negative_hard: Sequence[Constraint],
    schema: Mapping[str, str] | None = None,
) -> tuple[list[Item], list[str]]:
    """Binary selection over the pool; returns (survivors, warnings).

    Constraints naming an attribute outside the schema are skipped with a
    warning instead of aborting the round.
    """
    warnings: list[str] = []
    def _known(constraints: Sequence[Constraint]) -> list[Constraint]:
        if schema is None:
            return list(constraints)
        kept = []
        for c in constraints:
            if c.attribute in schema:
                kept.append(c)
            else:
                warnings.append(f"skipped constraint on unknown attribute {c.attribute!r}")
        return kept

    pos = _known(positive_hard)
    neg = _known(negative_hard)
    survivors = [
        item
        for item in pool
        if all(satisfies_positive_hard(item, c) for c in pos)
        and not any(violates_negative_hard(item, c) for c in neg)
    ]
    return survivors, warnings


# -- intent formatting --------------------------------------------------------

def _render_constraint_value(constraint: Constraint) -> list[str]:
    if constraint.op == "between":
        low, high = constraint.values
        return [f"between {format_number(low)} and {format_number(high)}"]
    if constraint.op in NUMERIC_OPS:
        return [f"{constraint.op} {format_number(float(constraint.values[0]))}"]
    out = []
    for v in constraint.values:
        if isinstance(v, bool):
            out.append("true" if v else "false")
        elif isinstance(v, (int, float)):
            out.append(format_number(float(v)))
        else:
            out.append(str(v))
    return out


def format_intent(constraints: Iterable[Constraint], free_text: Iterable[str] = ()) -> str:
    """One side of the preference state as structured text.

    Shape: ``attr: [value, ...], attr: [op value]`` with keys ascending;
    free-text phrases render under the ``style_hint`` key. Returns the
    empty string for an empty side.
    """
    grouped: dict[str, list[str]] = {}
    for constraint in constraints:
        rendered = grouped.setdefault(constraint.attribute, [])
        for value in _render_constraint_value(constraint):
            if value not in rendered:
                rendered.append(value)
    phrases = [p for p in free_text if p]
    if phrases:
        rendered = grouped.setdefault(FREE_TEXT_KEY, [])
        for phrase in phrases:
            if phrase not in rendered:
                rendered.append(phrase)
    if not grouped:
        return ""
    return ", ".join(f"{key}: [{', '.join(grouped[key])}]" for key in sorted(grouped))


def format_positive_intent(state: PreferenceState) -> str:
    return format_intent(
        state.positive_hard + state.positive_soft, state.free_text_positive
    )


def format_negative_intent(state: PreferenceState) -> str:
    return format_intent(
        state.negative_hard + state.negative_soft, state.free_text_negative
    )


# -- Matcher / Attenuator / Aggregator ----------------------------------------

def semantic_score(item: Item, intent_text: str, provider: EmbeddingProvider) -> float:
    """Cosine affinity between the item rendering and the intent text."""
    return cosine_sim(
        provider.embed(render_item_text(item)), provider.embed(intent_text)
    )


def match_score(
    s_sem: float,
    s_aia: float,
    params: ToolParams,
    sem_skipped: bool = False,
    aia_skipped: bool = False,
) -> float:
    """Blend the two match paths; a skipped path's weight moves to the other."""
    if sem_skipped and aia_skipped:
        return 0.0
    if sem_skipped:
        return s_aia
    if aia_skipped:
        return s_sem
    return params.alpha * s_sem + (1.0 - params.alpha) * s_aia


def attenuate(
    item: Item, negative_intent_text: str, params: ToolParams, provider: EmbeddingProvider
) -> float:
    """Penalty proportional to similarity with disliked content, always <= 0.

    Negative similarity clamps to zero first: being unlike disliked
    content must not turn into a bonus.
    """
    if not negative_intent_text:
        return 0.0
    similarity = semantic_score(item, negative_intent_text, provider)
    return -params.beta * max(0.0, similarity)


def aggregate(breakdowns: Mapping[str, ScoreBreakdown]) -> list[tuple[str, ScoreBreakdown]]:
    """Set final scores and order by (final desc, id asc)."""
    for breakdown in breakdowns.values():
        breakdown.s_final = breakdown.s_match + breakdown.s_atten
    return sorted(breakdowns.items(), key=lambda entry: (-entry[1].s_final, entry[0]))


# -- tool registry -------------------------------------------------------------

@dataclass(frozen=True)
class ToolSpec:
    name: str
    inputs: tuple[str, ...]
    output: str
    description: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "inputs": list(self.inputs),
            "output": self.output,
            "description": self.description,
        }


FILTER = "Filter"
MATCHER = "Matcher"
ATTENUATOR = "Attenuator"
AGGREGATOR = "Aggregator"
DEFAULT_RANKER = "DefaultRanker"

TOOL_REGISTRY: tuple[ToolSpec, ...] = (
    ToolSpec(
        name=FILTER,
        inputs=("item pool", "hard constraints"),
        output="filtered pool",
        description=(
            "Binary selection keeping items that satisfy every positive hard "
            "constraint and violate no negative hard constraint; everything "
            "else is dropped from the round."
        ),
    ),
    ToolSpec(
        name=MATCHER,
        inputs=("filtered pool", "positive intent", "interaction history"),
        output="match scores",
        description=(
            "Positive relevance from two paths: embedding similarity between "
            "item text and the stated intent, and an intent-aware attention "
            "scorer over the interaction history."
        ),
    ),
    ToolSpec(
        name=ATTENUATOR,
        inputs=("filtered pool", "negative intent"),
        output="penalty scores",
        description=(
            "Negative penalties proportional to embedding similarity with "
            "disliked content; never positive."
        ),
    ),
    ToolSpec(
        name=AGGREGATOR,
        inputs=("match scores", "penalty scores"),
        output="final ranking",
        description="Sums per-item scores and orders the feed by final score.",
    ),
    ToolSpec(
        name=DEFAULT_RANKER,
        inputs=("item pool",),
        output="final ranking",
        description="Popularity-descending ranking used when no preference signals exist.",
    ),
)


def tool_descriptions() -> list[dict[str, Any]]:
    return [spec.to_dict() for spec in TOOL_REGISTRY]

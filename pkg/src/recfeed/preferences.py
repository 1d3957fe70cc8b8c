"""Structured preference state: constraints split by polarity and strictness.

Hard constraints are deterministically checkable rules enforced by
filtering; soft constraints are semantic inclinations that only influence
scoring. Both sides also carry free-text phrases for content the grammar
could not map onto a schema attribute.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

OPS = (
    "equals",
    "contains",
    "less_than",
    "less_equal",
    "greater_than",
    "greater_equal",
    "between",
    "excludes",
)
NUMERIC_OPS = ("less_than", "less_equal", "greater_than", "greater_equal", "between")
STRICTNESS = ("hard", "soft")
POLARITY = ("positive", "negative")

FREE_TEXT_KEY = "style_hint"


class PreferenceError(ValueError):
    """Constraint or preference state violating its structural rules."""


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class Constraint:
    attribute: str
    op: str
    values: tuple[Any, ...]
    strictness: str
    polarity: str
    source_round: int = 0

    def __post_init__(self) -> None:
        # Numbers normalize to float so serialization is byte-stable.
        object.__setattr__(
            self,
            "values",
            tuple(float(v) if _is_number(v) else v for v in self.values),
        )
        if not self.attribute:
            raise PreferenceError("constraint attribute must be non-empty")
        if self.op not in OPS:
            raise PreferenceError(f"unknown op {self.op!r}")
        if self.strictness not in STRICTNESS:
            raise PreferenceError(f"unknown strictness {self.strictness!r}")
        if self.polarity not in POLARITY:
            raise PreferenceError(f"unknown polarity {self.polarity!r}")
        if not self.values:
            raise PreferenceError("constraint values must be non-empty")
        if self.op in NUMERIC_OPS and not all(_is_number(v) for v in self.values):
            raise PreferenceError(f"op {self.op!r} requires numeric values")
        if self.op == "between":
            if len(self.values) != 2:
                raise PreferenceError("between requires exactly two values")
            low, high = self.values
            if low > high:
                raise PreferenceError("between requires low <= high")

    def identity(self) -> tuple:
        """Equality key for dedup; the round a constraint came from is not part of it."""
        return (self.attribute, self.op, self.values, self.strictness, self.polarity)

    def cross_identity(self) -> tuple:
        return (self.attribute, self.op, self.values)

    def is_numeric(self) -> bool:
        return self.op in NUMERIC_OPS or (
            self.op in ("equals", "excludes") and all(_is_number(v) for v in self.values)
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "attribute": self.attribute,
            "op": self.op,
            "values": list(self.values),
            "strictness": self.strictness,
            "polarity": self.polarity,
            "source_round": self.source_round,
        }

    @classmethod
    def from_dict(cls, record: dict[str, Any]) -> "Constraint":
        if not isinstance(record, dict):
            raise PreferenceError(f"constraint record must be an object, got {record!r}")
        try:
            values = record["values"]
            if not isinstance(values, (list, tuple)):
                raise PreferenceError("constraint values must be a list")
            return cls(
                attribute=str(record["attribute"]),
                op=str(record["op"]),
                values=tuple(float(v) if _is_number(v) else v for v in values),
                strictness=str(record["strictness"]),
                polarity=str(record["polarity"]),
                source_round=int(record.get("source_round", 0)),
            )
        except KeyError as exc:
            raise PreferenceError(f"constraint record missing field {exc}") from None


_BUCKETS = (
    ("positive", "hard", "positive_hard"),
    ("positive", "soft", "positive_soft"),
    ("negative", "hard", "negative_hard"),
    ("negative", "soft", "negative_soft"),
)


@dataclass
class PreferenceState:
    """The four constraint buckets plus unmapped free-text inclinations."""

    positive_hard: list[Constraint] = field(default_factory=list)
    positive_soft: list[Constraint] = field(default_factory=list)
    negative_hard: list[Constraint] = field(default_factory=list)
    negative_soft: list[Constraint] = field(default_factory=list)
    free_text_positive: list[str] = field(default_factory=list)
    free_text_negative: list[str] = field(default_factory=list)

    @classmethod
    def empty(cls) -> "PreferenceState":
        return cls()

    def copy(self) -> "PreferenceState":
        return PreferenceState(
            positive_hard=list(self.positive_hard),
            positive_soft=list(self.positive_soft),
            negative_hard=list(self.negative_hard),
            negative_soft=list(self.negative_soft),
            free_text_positive=list(self.free_text_positive),
            free_text_negative=list(self.free_text_negative),
        )

    def is_empty(self) -> bool:
        return not (
            self.positive_hard
            or self.positive_soft
            or self.negative_hard
            or self.negative_soft
            or self.free_text_positive
            or self.free_text_negative
        )

    def bucket(self, polarity: str, strictness: str) -> list[Constraint]:
        return getattr(self, f"{polarity}_{strictness}")

    def constraints(self) -> Iterator[Constraint]:
        yield from self.positive_hard
        yield from self.positive_soft
        yield from self.negative_hard
        yield from self.negative_soft

    def constraints_on(self, attribute: str) -> list[Constraint]:
        return [c for c in self.constraints() if c.attribute == attribute]

    def has_positive_soft_signal(self) -> bool:
        return bool(self.positive_soft or self.free_text_positive)

    def has_negative_soft_signal(self) -> bool:
        return bool(self.negative_soft or self.free_text_negative)

    def insert(self, constraint: Constraint) -> None:
        """Add a constraint, keeping the state normalized.

        Normalization rules: identical constraints dedup; a new hard
        numeric bound replaces any earlier hard numeric bound on the same
        attribute and polarity; an identical (attribute, op, values)
        triple may not live in both polarities, the newer one wins.
        """
        bucket = self.bucket(constraint.polarity, constraint.strictness)
        if any(c.identity() == constraint.identity() for c in bucket):
            return
        insert_at = len(bucket)
        if constraint.strictness == "hard" and constraint.op in NUMERIC_OPS:
            # Replace in place so re-applying an extraction is order-stable.
            kept: list[Constraint] = []
            for c in bucket:
                if c.attribute == constraint.attribute and c.op in NUMERIC_OPS:
                    insert_at = min(insert_at, len(kept))
                else:
                    kept.append(c)
            bucket[:] = kept
            insert_at = min(insert_at, len(bucket))
        opposite = "negative" if constraint.polarity == "positive" else "positive"
        for strictness in STRICTNESS:
            other = self.bucket(opposite, strictness)
            other[:] = [c for c in other if c.cross_identity() != constraint.cross_identity()]
        bucket.insert(insert_at, constraint)

    def add_free_text(self, phrase: str, polarity: str) -> None:
        target = self.free_text_positive if polarity == "positive" else self.free_text_negative
        if phrase and phrase not in target:
            target.append(phrase)

    def remove_where(self, predicate) -> None:
        for _, _, name in _BUCKETS:
            bucket = getattr(self, name)
            bucket[:] = [c for c in bucket if not predicate(c)]

    def validate(self) -> None:
        for polarity, strictness, name in _BUCKETS:
            for c in getattr(self, name):
                if c.polarity != polarity or c.strictness != strictness:
                    raise PreferenceError(
                        f"constraint {c.to_dict()} filed under the wrong bucket {name}"
                    )
        for polarity in POLARITY:
            seen_numeric: set[str] = set()
            for c in self.bucket(polarity, "hard"):
                if c.op in NUMERIC_OPS:
                    if c.attribute in seen_numeric:
                        raise PreferenceError(
                            f"two hard numeric bounds on {c.attribute!r} ({polarity})"
                        )
                    seen_numeric.add(c.attribute)
        positive_ids = {c.cross_identity() for c in self.positive_hard + self.positive_soft}
        negative_ids = {c.cross_identity() for c in self.negative_hard + self.negative_soft}
        both = positive_ids & negative_ids
        if both:
            raise PreferenceError(f"constraints present in both polarities: {sorted(both)}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "positive_hard": [c.to_dict() for c in self.positive_hard],
            "positive_soft": [c.to_dict() for c in self.positive_soft],
            "negative_hard": [c.to_dict() for c in self.negative_hard],
            "negative_soft": [c.to_dict() for c in self.negative_soft],
            "free_text_positive": list(self.free_text_positive),
            "free_text_negative": list(self.free_text_negative),
        }

    @classmethod
    def from_dict(cls, record: dict[str, Any]) -> "PreferenceState":
        if not isinstance(record, dict):
            raise PreferenceError("preference record must be an object")
        state = cls(
            positive_hard=[Constraint.from_dict(r) for r in record.get("positive_hard", [])],
            positive_soft=[Constraint.from_dict(r) for r in record.get("positive_soft", [])],
            negative_hard=[Constraint.from_dict(r) for r in record.get("negative_hard", [])],
            negative_soft=[Constraint.from_dict(r) for r in record.get("negative_soft", [])],
            free_text_positive=[str(p) for p in record.get("free_text_positive", [])],
            free_text_negative=[str(p) for p in record.get("free_text_negative", [])],
        )
        state.validate()
        return state

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class FeedbackClass:
    """Outcome of the satisfaction / compatibility / conflict decision."""

    kind: str
    conflict_keys: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("satisfied", "compatible", "conflicting"):
            raise PreferenceError(f"unknown feedback kind {self.kind!r}")
        if (self.kind == "conflicting") != bool(self.conflict_keys):
            raise PreferenceError("conflict_keys must be non-empty exactly for conflicts")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "conflict_keys": list(self.conflict_keys)}

    @classmethod
    def from_dict(cls, record: dict[str, Any]) -> "FeedbackClass":
        if not isinstance(record, dict) or "kind" not in record:
            raise PreferenceError("feedback record must carry a kind")
        return cls(kind=str(record["kind"]), conflict_keys=tuple(record.get("conflict_keys", [])))

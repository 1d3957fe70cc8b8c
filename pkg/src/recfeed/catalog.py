"""Item catalog and the core values every other part of the engine shares.

The catalog file format is line-delimited JSON: the first line declares the
attribute schema, every following line is one item record. Records are
validated against the schema at load time and the catalog is immutable
afterwards, so it can be shared freely across sessions and threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

HISTORY_MAX_LEN = 50

VALUE_KINDS = ("text", "number", "boolean")


class CatalogError(ValueError):
    """Malformed catalog file or a record that violates the attribute schema."""


def format_number(x: float) -> str:
    """Render a number without a trailing '.0' when it is integral."""
    if math.isfinite(x) and float(x) == int(x):
        return str(int(x))
    return repr(float(x))


@dataclass(frozen=True)
class Quantity:
    """Numeric attribute value with an optional unit label.

    Units are opaque labels; no conversion is ever attempted.
    """

    value: float
    unit: str | None = None

    def render(self) -> str:
        text = format_number(self.value)
        return f"{text} {self.unit}" if self.unit else text


def render_value(value: Any) -> str:
    if isinstance(value, Quantity):
        return value.render()
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def value_to_jsonable(value: Any) -> Any:
    if isinstance(value, Quantity):
        if value.unit is None:
            return value.value
        return {"value": value.value, "unit": value.unit}
    return value


@dataclass(frozen=True)
class Item:
    """One catalog entry.

    Attributes are multi-valued: a key maps to a tuple of values, each a
    string, a bool, or a Quantity. ``image_features`` is a precomputed
    visual embedding; image encoding itself happens upstream.
    """

    id: str
    title: str
    description: str
    attributes: Mapping[str, tuple[Any, ...]] = field(default_factory=dict)
    image_features: tuple[float, ...] | None = None
    popularity: float = 0.0

    def numeric_values(self, attribute: str) -> list[float]:
        out = []
        for v in self.attributes.get(attribute, ()):
            if isinstance(v, Quantity):
                out.append(v.value)
            elif isinstance(v, bool):
                continue
            elif isinstance(v, (int, float)):
                out.append(float(v))
        return out

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "id": self.id,
            "title": self.title,
            "description": self.description,
            "attributes": {
                k: [value_to_jsonable(v) for v in vals]
                for k, vals in self.attributes.items()
            },
            "popularity": self.popularity,
        }
        if self.image_features is not None:
            record["image_features"] = list(self.image_features)
        return record


def render_item_text(item: Item) -> str:
    """Deterministic one-line rendering of an item, used for embeddings.

    Shape: ``title. description. key: value, value; key: value`` with
    attribute keys in ascending lexical order.
    """
    base = f"{item.title}. {item.description}."
    if not item.attributes:
        return base
    parts = []
    for key in sorted(item.attributes):
        values = ", ".join(render_value(v) for v in item.attributes[key])
        parts.append(f"{key}: {values}")
    return base + " " + "; ".join(parts)


@dataclass(frozen=True)
class Catalog:
    """Validated, immutable pool of candidate items."""

    items: tuple[Item, ...]
    attribute_schema: Mapping[str, str]

    def __post_init__(self) -> None:
        if not self.items:
            raise CatalogError("catalog must contain at least one item")
        for key, kind in self.attribute_schema.items():
            if not key:
                raise CatalogError("attribute schema contains an empty key")
            if kind not in VALUE_KINDS:
                raise CatalogError(f"unknown value kind {kind!r} for attribute {key!r}")

    @cached_property
    def by_id(self) -> dict[str, Item]:
        return {item.id: item for item in self.items}

    def get(self, item_id: str) -> Item:
        try:
            return self.by_id[item_id]
        except KeyError:
            raise CatalogError(f"unknown item id {item_id!r}") from None

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.by_id

    def __len__(self) -> int:
        return len(self.items)

    @cached_property
    def image_dim(self) -> int:
        for item in self.items:
            if item.image_features is not None:
                return len(item.image_features)
        return 0

    @cached_property
    def popularity_ranking(self) -> tuple[str, ...]:
        ordered = sorted(self.items, key=lambda it: (-it.popularity, it.id))
        return tuple(it.id for it in ordered)

    @cached_property
    def text_value_vocabulary(self) -> dict[str, str]:
        """Map from casefolded text attribute value to its attribute key.

        A value string carried by two attributes resolves to the
        lexicographically smaller key so lookups stay deterministic.
        """
        vocab: dict[str, str] = {}
        for item in self.items:
            for key, values in item.attributes.items():
                if self.attribute_schema.get(key) != "text":
                    continue
                for v in values:
                    token = str(v).casefold()
                    if token not in vocab or key < vocab[token]:
                        vocab[token] = key
        return vocab


def _parse_attribute_value(raw: Any, kind: str, where: str) -> Any:
    if kind == "number":
        if isinstance(raw, bool):
            raise CatalogError(f"{where}: expected a number, got a boolean")
        if isinstance(raw, (int, float)):
            value = float(raw)
            unit = None
        elif isinstance(raw, dict) and "value" in raw:
            try:
                value = float(raw["value"])
            except (TypeError, ValueError):
                raise CatalogError(f"{where}: non-numeric value {raw['value']!r}") from None
            unit = raw.get("unit")
            if unit is not None and not isinstance(unit, str):
                raise CatalogError(f"{where}: unit must be a string")
        else:
            raise CatalogError(f"{where}: expected a number, got {raw!r}")
        if not math.isfinite(value):
            raise CatalogError(f"{where}: numeric value must be finite")
        return Quantity(value=value, unit=unit)
    if kind == "boolean":
        if not isinstance(raw, bool):
            raise CatalogError(f"{where}: expected a boolean, got {raw!r}")
        return raw
    if not isinstance(raw, str):
        raise CatalogError(f"{where}: expected text, got {raw!r}")
    return raw


def item_from_record(record: Mapping[str, Any], schema: Mapping[str, str], where: str) -> Item:
    for required in ("id", "title", "description"):
        if required not in record or not isinstance(record[required], str):
            raise CatalogError(f"{where}: missing or non-string field {required!r}")
    attributes: dict[str, tuple[Any, ...]] = {}
    for key, raw_values in (record.get("attributes") or {}).items():
        if key not in schema:
            raise CatalogError(f"{where}: attribute {key!r} not declared in schema")
        if not isinstance(raw_values, list):
            raw_values = [raw_values]
        parsed = tuple(
            _parse_attribute_value(raw, schema[key], f"{where}, attribute {key!r}")
            for raw in raw_values
        )
        if parsed:
            attributes[key] = parsed
    image_features = None
    if record.get("image_features") is not None:
        raw = record["image_features"]
        if not isinstance(raw, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw):
            raise CatalogError(f"{where}: image_features must be an array of numbers")
        image_features = tuple(float(x) for x in raw)
        if not all(math.isfinite(x) for x in image_features):
            raise CatalogError(f"{where}: image_features must be finite")
    popularity = record.get("popularity", 0.0)
    if isinstance(popularity, bool) or not isinstance(popularity, (int, float)):
        raise CatalogError(f"{where}: popularity must be a number")
    popularity = float(popularity)
    if not math.isfinite(popularity) or popularity < 0:
        raise CatalogError(f"{where}: popularity must be finite and non-negative")
    return Item(
        id=record["id"],
        title=record["title"],
        description=record["description"],
        attributes=attributes,
        image_features=image_features,
        popularity=popularity,
    )


def load_catalog(path: str | Path) -> Catalog:
    """Load and validate a line-delimited catalog file.

    The first non-blank line must be the schema record
    ``{"schema": {"price": "number", ...}}``.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    schema: dict[str, str] | None = None
    items: list[Item] = []
    seen: set[str] = set()
    image_dim: int | None = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if schema is None:
            if not isinstance(record, dict) or "schema" not in record:
                raise CatalogError(f"line {lineno}: first record must declare the schema")
            schema = dict(record["schema"])
            for key, kind in schema.items():
                if kind not in VALUE_KINDS:
                    raise CatalogError(f"line {lineno}: unknown value kind {kind!r} for {key!r}")
            continue
        if not isinstance(record, dict):
            raise CatalogError(f"line {lineno}: expected an item record object")
        item = item_from_record(record, schema, f"line {lineno}")
        if item.id in seen:
            raise CatalogError(f"line {lineno}: duplicate item id {item.id!r}")
        seen.add(item.id)
        if item.image_features is not None:
            if image_dim is None:
                image_dim = len(item.image_features)
            elif len(item.image_features) != image_dim:
                raise CatalogError(
                    f"line {lineno}: image_features length {len(item.image_features)} "
                    f"differs from earlier length {image_dim}"
                )
        items.append(item)
    if schema is None:
        raise CatalogError("catalog file is empty")
    return Catalog(items=tuple(items), attribute_schema=schema)


def write_catalog(catalog: Catalog, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema": dict(catalog.attribute_schema)}, sort_keys=True) + "\n")
        for item in catalog.items:
            fh.write(json.dumps(item.to_dict(), sort_keys=True) + "\n")


@dataclass(frozen=True)
class UserHistory:
    """Chronological interaction ids, truncated to the most recent 50."""

    interactions: tuple[str, ...] = ()

    @classmethod
    def for_catalog(cls, ids: Iterable[str], catalog: Catalog) -> "UserHistory":
        ids = tuple(ids)
        unknown = [i for i in ids if i not in catalog]
        if unknown:
            raise CatalogError(f"history references unknown items: {', '.join(unknown)}")
        return cls(interactions=ids[-HISTORY_MAX_LEN:])

    def __len__(self) -> int:
        return len(self.interactions)

    def __bool__(self) -> bool:
        return bool(self.interactions)


@dataclass(frozen=True)
class Command:
    """One raw user utterance tied to the round it was issued in."""

    text: str
    round: int = 0

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("command text must be non-empty")


@dataclass(frozen=True)
class Feed:
    """Ordered top-k recommendation list with per-item score breakdowns.

    ``entries`` holds (item id, ScoreBreakdown) pairs already sorted by
    final score descending, ties broken by ascending item id.
    """

    round: int
    k: int
    entries: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self) -> None:
        ids = [item_id for item_id, _ in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("feed contains duplicate item ids")
        if len(self.entries) > self.k:
            raise ValueError("feed longer than its configured size")
        for (id_a, a), (id_b, b) in zip(self.entries, self.entries[1:]):
            if (-a.s_final, id_a) > (-b.s_final, id_b):
                raise ValueError("feed entries are not ordered by (score desc, id asc)")

    @classmethod
    def from_scores(cls, round: int, k: int, scored: Iterable[tuple[str, Any]]) -> "Feed":
        ordered = sorted(scored, key=lambda entry: (-entry[1].s_final, entry[0]))
        return cls(round=round, k=k, entries=tuple(ordered[:k]))

    def item_ids(self) -> tuple[str, ...]:
        return tuple(item_id for item_id, _ in self.entries)

    def item_at(self, position: int) -> str:
        """1-based feed position; negative positions count from the end."""
        if position == -1:
            return self.entries[-1][0]
        return self.entries[position - 1][0]

    def to_dict(self) -> dict[str, Any]:
        return {
            "round": self.round,
            "k": self.k,
            "entries": [
                {"item_id": item_id, "scores": breakdown.to_dict()}
                for item_id, breakdown in self.entries
            ],
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

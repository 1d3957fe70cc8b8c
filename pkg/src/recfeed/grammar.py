"""Deterministic command grammar for the rule parsing backend.

The grammar recognizes a constrained command language (version 1,
documented in docs/grammar.md):

* polarity markers: "want/show/more/prefer/like/love" lean positive,
  "don't/no/not/stop/too/hate/dislike/without" lean negative
* comparison phrases: "under/below/over/above/at most/at least/up to/
  between X and Y" become hard numeric bounds
* explicit pairs "attribute: value" become hard equality constraints
  (exclusions when the clause is negative)
* deictic references "like the first one" / "the #2 one" resolve against
  feed positions and copy that item's text attributes as soft constraints
* bare mentions of known attribute values become soft constraints
* change markers "instead of", "no longer", "different from before"
  flag the command as a preference revision
* anything left over lands in the free-text buckets

Commands split into clauses on ',', ';', '.', '!' and '?'. Each clause
carries its own polarity; a clause without markers is positive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .catalog import Catalog, Feed, Quantity
from .preferences import Constraint

GRAMMAR_VERSION = "1"

POSITIVE_MARKERS = frozenset(
    {"want", "show", "more", "prefer", "like", "love", "need", "keep", "yes"}
)
NEGATIVE_MARKERS = frozenset(
    {
        "don't",
        "dont",
        "no",
        "not",
        "stop",
        "too",
        "hate",
        "dislike",
        "never",
        "without",
        "avoid",
        "remove",
        "exclude",
    }
)

# Words that point at the price attribute when a bound has no explicit key.
PRICE_HINTS = frozenset(
    {"price", "priced", "prices", "expensive", "cheap", "cheaper", "cost", "costs", "budget"}
)

_STOPWORDS = frozenset(
    {
        "the", "a", "an", "of", "for", "me", "i", "it", "its", "is", "are", "am",
        "to", "in", "on", "and", "or", "with", "please", "something", "some",
        "one", "ones", "this", "these", "those", "that", "thanks", "thank",
        "but", "also", "just", "really", "maybe", "rather",
    }
)

_NUM = r"\$?\s*(\d+(?:\.\d+)?)"
_COMPARISONS = [
    (re.compile(rf"\bbetween\s+{_NUM}\s+and\s+{_NUM}\b"), "between"),
    (re.compile(rf"\bno\s+more\s+than\s+{_NUM}\b"), "less_equal"),
    (re.compile(rf"\bno\s+less\s+than\s+{_NUM}\b"), "greater_equal"),
    (re.compile(rf"\bat\s+most\s+{_NUM}\b"), "less_equal"),
    (re.compile(rf"\bup\s+to\s+{_NUM}\b"), "less_equal"),
    (re.compile(rf"\bat\s+least\s+{_NUM}\b"), "greater_equal"),
    (re.compile(rf"\bless\s+than\s+{_NUM}\b"), "less_than"),
    (re.compile(rf"\bcheaper\s+than\s+{_NUM}\b"), "less_than"),
    (re.compile(rf"\bunder\s+{_NUM}\b"), "less_than"),
    (re.compile(rf"\bbelow\s+{_NUM}\b"), "less_than"),
    (re.compile(rf"\bmore\s+than\s+{_NUM}\b"), "greater_than"),
    (re.compile(rf"\bgreater\s+than\s+{_NUM}\b"), "greater_than"),
    (re.compile(rf"\bover\s+{_NUM}\b"), "greater_than"),
    (re.compile(rf"\babove\s+{_NUM}\b"), "greater_than"),
]

_PAIR_RE = re.compile(
    r"\b([a-z][a-z0-9_]*)\s*:\s*([^:]+?)(?=\s+[a-z][a-z0-9_]*\s*:|$)"
)

_ORDINALS = {"first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5, "last": -1}
_DEICTIC_RE = re.compile(
    r"\b(?:the\s+)?(first|second|third|fourth|fifth|last|#\d+)\s+(?:one|item)s?\b"
)

_TOKEN_RE = re.compile(r"[a-z0-9$']+")
_CLAUSE_SPLIT_RE = re.compile(r"[,;.!?]+")

# "X instead of Y" and "X rather than Y" flip the trailing segment negative.
_SPLIT_CHANGE_RE = re.compile(r"\binstead\s+of\b|\brather\s+than\b")
# These merely negate what follows and mark the command as a revision.
_NEGATING_CHANGE_RE = re.compile(r"\bno\s+longer\b|\bdifferent\s+from\s+before\b")
# Bare "instead" / "switch to" mark a revision without changing polarity.
_PLAIN_CHANGE_RE = re.compile(r"\binstead\b|\bswitch\s+to\b|\bchange\s+to\b")


@dataclass
class Extraction:
    """Signals pulled out of one command before consolidation."""

    positive: list[Constraint] = field(default_factory=list)
    negative: list[Constraint] = field(default_factory=list)
    free_text_positive: list[str] = field(default_factory=list)
    free_text_negative: list[str] = field(default_factory=list)
    change_marker: bool = False

    def constraints(self) -> list[Constraint]:
        return self.positive + self.negative

    def is_empty(self) -> bool:
        return not (
            self.positive
            or self.negative
            or self.free_text_positive
            or self.free_text_negative
        )


@dataclass
class _Clause:
    text: str
    forced_negative: bool = False


def _parse_bool_word(raw: str) -> Optional[bool]:
    word = raw.strip().casefold()
    if word in ("true", "yes", "on"):
        return True
    if word in ("false", "no", "off"):
        return False
    return None


class CommandGrammar:
    """Rule-based extractor bound to one catalog's schema and vocabulary."""

    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self.schema = dict(catalog.attribute_schema)
        self._schema_by_fold = {key.casefold(): key for key in self.schema}
        self.vocabulary = catalog.text_value_vocabulary

    def extract(self, text: str, feed: Feed | None, round: int = 0) -> Extraction:
        extraction = Extraction()
        lowered = text.casefold()
        clauses = self._split_clauses(lowered, extraction)
        for clause in clauses:
            self._extract_clause(clause, lowered, feed, round, extraction)
        return extraction

    # -- clause handling -------------------------------------------------

    def _split_clauses(self, lowered: str, extraction: Extraction) -> list[_Clause]:
        segments: list[_Clause] = []
        parts = _SPLIT_CHANGE_RE.split(lowered)
        if len(parts) > 1:
            extraction.change_marker = True
        for index, part in enumerate(parts):
            segments.append(_Clause(text=part, forced_negative=index > 0))

        clauses: list[_Clause] = []
        for segment in segments:
            body = segment.text
            if _NEGATING_CHANGE_RE.search(body):
                extraction.change_marker = True
                body = _NEGATING_CHANGE_RE.sub(" not ", body)
            if _PLAIN_CHANGE_RE.search(body):
                extraction.change_marker = True
                body = _PLAIN_CHANGE_RE.sub(" ", body)
            first = True
            for piece in _CLAUSE_SPLIT_RE.split(body):
                if piece.strip():
                    # The flipped polarity of "instead of X" covers only the
                    # phrase right after it, not later clauses.
                    clauses.append(_Clause(piece.strip(), segment.forced_negative and first))
                    first = False
        return clauses

    def _extract_clause(
        self,
        clause: _Clause,
        command_text: str,
        feed: Feed | None,
        round: int,
        extraction: Extraction,
    ) -> None:
        working = clause.text
        comparisons: list[tuple[str, list[float]]] = []
        for pattern, op in _COMPARISONS:
            while True:
                match = pattern.search(working)
                if match is None:
                    break
                numbers = [float(g) for g in match.groups() if g is not None]
                comparisons.append((op, numbers))
                working = working[: match.start()] + " " + working[match.end() :]

        pairs: list[tuple[str, str]] = []
        def _consume_pair(match: re.Match) -> str:
            pairs.append((match.group(1), match.group(2).strip()))
            return " "
        working = _PAIR_RE.sub(_consume_pair, working)

        deictic_positions: list[int] = []
        def _consume_deictic(match: re.Match) -> str:
            token = match.group(1)
            position = int(token[1:]) if token.startswith("#") else _ORDINALS[token]
            deictic_positions.append(position)
            return " "
        working = _DEICTIC_RE.sub(_consume_deictic, working)

        tokens = _TOKEN_RE.findall(working)
        negative = clause.forced_negative or any(t in NEGATIVE_MARKERS for t in tokens)
        polarity = "negative" if negative else "positive"

        for op, numbers in comparisons:
            self._emit_comparison(clause.text, command_text, op, numbers, polarity, round, extraction)
        for key, value in pairs:
            self._emit_pair(key, value, polarity, round, extraction)
        for position in deictic_positions:
            self._emit_deictic(position, feed, polarity, round, extraction)

        leftovers = [t for t in tokens if t not in NEGATIVE_MARKERS and t not in POSITIVE_MARKERS]
        leftovers = self._consume_vocabulary(leftovers, polarity, round, extraction)
        phrase_tokens = [
            t
            for t in leftovers
            if t not in _STOPWORDS and t != "$" and t not in self._schema_by_fold
        ]
        phrase = " ".join(phrase_tokens)
        if not phrase and negative and not (comparisons or pairs or deictic_positions):
            # A clause made only of markers ("no!", "stop") still records
            # dissatisfaction so it cannot read as a satisfied turn.
            phrase = " ".join(t for t in tokens if t in NEGATIVE_MARKERS)
        if phrase:
            bucket = (
                extraction.free_text_negative if negative else extraction.free_text_positive
            )
            if phrase not in bucket:
                bucket.append(phrase)

    # -- emitters --------------------------------------------------------

    def _emit(self, constraint: Constraint, extraction: Extraction) -> None:
        bucket = extraction.negative if constraint.polarity == "negative" else extraction.positive
        if all(c.identity() != constraint.identity() for c in bucket):
            bucket.append(constraint)

    def _emit_comparison(
        self,
        clause_text: str,
        command_text: str,
        op: str,
        numbers: list[float],
        polarity: str,
        round: int,
        extraction: Extraction,
    ) -> None:
        attribute = self._numeric_attribute_for(clause_text)
        if attribute is None:
            # "too expensive, under 50" carries the hint in another clause.
            attribute = self._numeric_attribute_for(command_text)
        if attribute is None:
            return
        if op == "between" and len(numbers) == 2:
            low, high = sorted(numbers)
            values: tuple[Any, ...] = (low, high)
        else:
            values = tuple(numbers[:1])
        if not values:
            return
        self._emit(
            Constraint(
                attribute=attribute,
                op=op,
                values=values,
                strictness="hard",
                polarity=polarity,
                source_round=round,
            ),
            extraction,
        )

    def _numeric_attribute_for(self, clause_text: str) -> Optional[str]:
        """Pick the schema attribute a bare numeric bound talks about.

        Preference order: a numeric schema key named in the clause, then a
        price hint ('$', 'expensive', ...) when the schema has a price
        attribute, then the only numeric attribute if there is exactly one.
        """
        tokens = _TOKEN_RE.findall(clause_text)
        numeric_keys = [k for k, kind in self.schema.items() if kind == "number"]
        for token in tokens:
            key = self._schema_by_fold.get(token)
            if key is not None and self.schema[key] == "number":
                return key
        has_price_hint = "$" in clause_text or any(t in PRICE_HINTS for t in tokens)
        if has_price_hint:
            price_key = self._schema_by_fold.get("price")
            if price_key is not None and self.schema[price_key] == "number":
                return price_key
        if len(numeric_keys) == 1:
            return numeric_keys[0]
        return None

    def _emit_pair(
        self, key: str, raw_value: str, polarity: str, round: int, extraction: Extraction
    ) -> None:
        attribute = self._schema_by_fold.get(key.casefold())
        if attribute is None:
            phrase = f"{key} {raw_value}".strip()
            bucket = (
                extraction.free_text_negative
                if polarity == "negative"
                else extraction.free_text_positive
            )
            if phrase and phrase not in bucket:
                bucket.append(phrase)
            return
        kind = self.schema[attribute]
        value: Any
        if kind == "number":
            match = re.search(r"-?\d+(?:\.\d+)?", raw_value)
            if match is None:
                return
            value = float(match.group(0))
        elif kind == "boolean":
            parsed = _parse_bool_word(raw_value)
            if parsed is None:
                return
            value = parsed
        else:
            value = raw_value.strip()
            if not value:
                return
        op = "excludes" if polarity == "negative" else "equals"
        self._emit(
            Constraint(
                attribute=attribute,
                op=op,
                values=(value,),
                strictness="hard",
                polarity=polarity,
                source_round=round,
            ),
            extraction,
        )

    def _emit_deictic(
        self,
        position: int,
        feed: Feed | None,
        polarity: str,
        round: int,
        extraction: Extraction,
    ) -> None:
        if feed is None or not feed.entries:
            return
        if position != -1 and not (1 <= position <= len(feed.entries)):
            return
        item_id = feed.item_at(position)
        if item_id not in self.catalog:
            return
        item = self.catalog.get(item_id)
        for attribute in sorted(item.attributes):
            if self.schema.get(attribute) != "text":
                continue
            for value in item.attributes[attribute]:
                self._emit(
                    Constraint(
                        attribute=attribute,
                        op="contains",
                        values=(str(value),),
                        strictness="soft",
                        polarity=polarity,
                        source_round=round,
                    ),
                    extraction,
                )

    def _consume_vocabulary(
        self, tokens: list[str], polarity: str, round: int, extraction: Extraction
    ) -> list[str]:
        """Match leftover tokens against known attribute values.

        Bigrams are tried before unigrams so two-word values ("science
        fiction") win over their halves. Matched tokens are consumed.
        """
        consumed = [False] * len(tokens)
        for i in range(len(tokens) - 1):
            if consumed[i] or consumed[i + 1]:
                continue
            bigram = f"{tokens[i]} {tokens[i + 1]}"
            attribute = self.vocabulary.get(bigram)
            if attribute is not None:
                self._emit_soft(attribute, bigram, polarity, round, extraction)
                consumed[i] = consumed[i + 1] = True
        for i, token in enumerate(tokens):
            if consumed[i]:
                continue
            attribute = self.vocabulary.get(token)
            if attribute is not None:
                self._emit_soft(attribute, token, polarity, round, extraction)
                consumed[i] = True
        return [t for t, used in zip(tokens, consumed) if not used]

    def _emit_soft(
        self, attribute: str, value: str, polarity: str, round: int, extraction: Extraction
    ) -> None:
        self._emit(
            Constraint(
                attribute=attribute,
                op="contains",
                values=(value,),
                strictness="soft",
                polarity=polarity,
                source_round=round,
            ),
            extraction,
        )

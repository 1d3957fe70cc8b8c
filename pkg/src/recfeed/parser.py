"""Intent-understanding agent: commands become preference-state updates.

One backend interface, two implementations. The rule backend runs the
deterministic grammar and is the testing oracle for the whole pipeline;
the LLM backend prompts an external completion endpoint and validates its
structured output into the identical schema. Both funnel through the same
consolidation rules: satisfied turns preserve memory, compatible turns
merge, conflicting turns replace only what was contradicted.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional, Protocol

import httpx

from .catalog import Catalog, Command, Feed, render_value
from .grammar import CommandGrammar, Extraction
from .preferences import (
    NUMERIC_OPS,
    Constraint,
    FeedbackClass,
    PreferenceError,
    PreferenceState,
)


class LlmTransportError(RuntimeError):
    """Completion endpoint unreachable; carries the raw response if any."""

    def __init__(self, endpoint: str, detail: str, raw_response: str | None = None):
        super().__init__(f"llm endpoint {endpoint}: {detail}")
        self.endpoint = endpoint
        self.raw_response = raw_response


@dataclass
class ParseResult:
    state: PreferenceState
    feedback: FeedbackClass
    degraded: bool = False
    extraction: Extraction | None = None


class ParserBackend(Protocol):
    def parse(self, feed: Feed | None, command: Command, memory: PreferenceState) -> ParseResult: ...


# -- numeric interval reasoning -------------------------------------------

_INF = math.inf


def _op_interval(op: str, values: tuple) -> tuple[float, float, bool, bool]:
    """Allowed interval (lo, hi, lo_inclusive, hi_inclusive) for a bound."""
    if op == "less_than":
        return (-_INF, float(values[0]), False, False)
    if op == "less_equal":
        return (-_INF, float(values[0]), False, True)
    if op == "greater_than":
        return (float(values[0]), _INF, False, False)
    if op == "greater_equal":
        return (float(values[0]), _INF, True, False)
    if op == "between":
        return (float(values[0]), float(values[1]), True, True)
    # numeric equals / excludes reduce to point intervals
    return (float(values[0]), float(values[0]), True, True)


def _allowed_intervals(constraint: Constraint) -> list[tuple[float, float, bool, bool]]:
    base = _op_interval(constraint.op, constraint.values)
    if constraint.polarity == "positive" and constraint.op != "excludes":
        return [base]
    # exclusions allow everything outside the matched interval
    lo, hi, lo_inc, hi_inc = base
    pieces = []
    if lo > -_INF or lo_inc:
        pieces.append((-_INF, lo, False, not lo_inc))
    if hi < _INF or hi_inc:
        pieces.append((hi, _INF, not hi_inc, False))
    return [p for p in pieces if not (p[0] == p[1] and not (p[2] and p[3]))]


def _intervals_overlap(a: tuple, b: tuple) -> bool:
    lo = max(a[0], b[0])
    hi = min(a[1], b[1])
    if lo < hi:
        return True
    if lo > hi:
        return False
    lo_ok = (a[2] or a[0] < lo) and (b[2] or b[0] < lo)
    hi_ok = (a[3] or a[1] > hi) and (b[3] or b[1] > hi)
    return lo_ok and hi_ok


def _can_cohold(a: Constraint, b: Constraint) -> bool:
    for ia in _allowed_intervals(a):
        for ib in _allowed_intervals(b):
            if _intervals_overlap(ia, ib):
                return True
    return False


def _values_overlap(a: Constraint, b: Constraint) -> bool:
    fold = lambda v: v.casefold() if isinstance(v, str) else v
    return bool({fold(v) for v in a.values} & {fold(v) for v in b.values})


def constraints_contradict(memory_c: Constraint, new_c: Constraint, change_marker: bool) -> bool:
    """Does an incoming constraint contradict a remembered one?

    Three triggers: hard numeric ranges that cannot co-hold, an
    inclusion/exclusion clash on the same value, or an explicit change
    marker making the new constraint a revision of same-key memory.
    """
    if memory_c.attribute != new_c.attribute:
        return False
    if (
        memory_c.strictness == "hard"
        and new_c.strictness == "hard"
        and memory_c.is_numeric()
        and new_c.is_numeric()
    ):
        if not _can_cohold(memory_c, new_c):
            return True
    inclusion = ("equals", "contains")
    if memory_c.polarity != new_c.polarity and _values_overlap(memory_c, new_c):
        if memory_c.op in inclusion or new_c.op in inclusion:
            return True
    if change_marker:
        if memory_c.polarity == new_c.polarity and memory_c.strictness == new_c.strictness:
            return True
        if memory_c.polarity != new_c.polarity and _values_overlap(memory_c, new_c):
            return True
    return False


# -- the three consolidation operations ------------------------------------

def classify_feedback(
    memory: PreferenceState, extraction: Extraction, feed: Feed | None = None
) -> FeedbackClass:
    """Decide between satisfied, compatible, and conflicting.

    Satisfied means the turn extracted nothing actionable and carried no
    negatively-marked free text. Conflicts are keyed by attribute.
    """
    if not extraction.constraints() and not extraction.free_text_negative:
        return FeedbackClass(kind="satisfied")
    conflict_keys: set[str] = set()
    for new_c in extraction.constraints():
        for memory_c in memory.constraints_on(new_c.attribute):
            if constraints_contradict(memory_c, new_c, extraction.change_marker):
                conflict_keys.add(new_c.attribute)
                break
    if extraction.change_marker:
        conflict_keys.update(c.attribute for c in extraction.constraints())
    if conflict_keys:
        return FeedbackClass(kind="conflicting", conflict_keys=tuple(sorted(conflict_keys)))
    return FeedbackClass(kind="compatible")


def consolidate(
    memory: PreferenceState, extraction: Extraction, feedback: FeedbackClass
) -> PreferenceState:
    """Apply the preservation / integration / resolution rules."""
    if feedback.kind == "satisfied":
        return memory.copy()
    state = memory.copy()
    if feedback.kind == "conflicting":
        keys = set(feedback.conflict_keys)
        new_by_key: dict[str, list[Constraint]] = {}
        for c in extraction.constraints():
            new_by_key.setdefault(c.attribute, []).append(c)
        def _contradicted(c: Constraint) -> bool:
            if c.attribute not in keys:
                return False
            return any(
                constraints_contradict(c, new_c, extraction.change_marker)
                for new_c in new_by_key.get(c.attribute, [])
            )
        state.remove_where(_contradicted)
    for constraint in extraction.constraints():
        state.insert(constraint)
    for phrase in extraction.free_text_positive:
        state.add_free_text(phrase, "positive")
    for phrase in extraction.free_text_negative:
        state.add_free_text(phrase, "negative")
    return state


# -- backends ---------------------------------------------------------------

class RuleParserBackend:
    """Pure deterministic parser over the documented command grammar."""

    def __init__(self, catalog: Catalog):
        self.grammar = CommandGrammar(catalog)

    def extract(self, command: Command, feed: Feed | None) -> Extraction:
        return self.grammar.extract(command.text, feed, round=command.round)

    def parse(self, feed: Feed | None, command: Command, memory: PreferenceState) -> ParseResult:
        extraction = self.extract(command, feed)
        feedback = classify_feedback(memory, extraction, feed)
        state = consolidate(memory, extraction, feedback)
        return ParseResult(state=state, feedback=feedback, extraction=extraction)


def extract_signals(
    backend: RuleParserBackend, command: Command, feed: Feed | None
) -> Extraction:
    return backend.extract(command, feed)


def parse_command(
    backend: ParserBackend, feed: Feed | None, command: Command, memory: PreferenceState
) -> ParseResult:
    return backend.parse(feed, command, memory)


def render_feed_text(feed: Feed | None, catalog: Catalog) -> str:
    """Feed as the user saw it, one positioned line per item."""
    if feed is None or not feed.entries:
        return "(empty feed)"
    lines = []
    for position, (item_id, _) in enumerate(feed.entries, start=1):
        item = catalog.get(item_id)
        attrs = "; ".join(
            f"{key}: {', '.join(render_value(v) for v in item.attributes[key])}"
            for key in sorted(item.attributes)
        )
        suffix = f" [{attrs}]" if attrs else ""
        lines.append(f"{position}. {item.title} (id {item_id}){suffix}")
    return "\n".join(lines)


PARSER_PROMPT_TEMPLATE = """You update the structured preference memory of a recommendation feed.

Current feed:
{feed}

Preference memory (JSON):
{memory}

User command:
{command}

Return a single JSON object: {{"preferences": <memory schema>, "feedback": {{"kind": "satisfied|compatible|conflicting", "conflict_keys": [..]}}}}.
Apply these rules: keep the memory unchanged for satisfied or neutral turns;
merge compatible new constraints; on contradictions replace only the
conflicting attributes and keep everything else."""


def _strip_code_fence(text: str) -> str:
    match = re.search(r"```(?:json)?\s*(.*?)\s*```", text, re.DOTALL)
    if match:
        return match.group(1)
    return text.strip()


def _extract_json_object(text: str) -> dict[str, Any]:
    body = _strip_code_fence(text)
    try:
        parsed = json.loads(body)
        if isinstance(parsed, dict):
            return parsed
    except json.JSONDecodeError:
        pass
    start = body.find("{")
    if start >= 0:
        depth = 0
        for i in range(start, len(body)):
            if body[i] == "{":
                depth += 1
            elif body[i] == "}":
                depth -= 1
                if depth == 0:
                    parsed = json.loads(body[start : i + 1])
                    if isinstance(parsed, dict):
                        return parsed
                    break
    raise PreferenceError("no JSON object in response")


class LlmParserBackend:
    """Prompts a completion endpoint and validates its structured output.

    Wire contract: POST {"prompt": str} returning {"text": str}. One repair
    attempt is made for malformed output; after that the parse degrades to
    the unchanged memory with the ``degraded`` flag set, so a bad
    generation can never abort a session.
    """

    def __init__(
        self,
        catalog: Catalog,
        endpoint: str = "",
        complete: Callable[[str], str] | None = None,
        client: httpx.Client | None = None,
    ):
        if not endpoint and complete is None:
            raise ValueError("LlmParserBackend needs an endpoint or a complete callable")
        self.catalog = catalog
        self.endpoint = endpoint
        self._complete = complete
        self._client = client or httpx.Client(timeout=60.0)

    def _call(self, prompt: str) -> str:
        if self._complete is not None:
            return self._complete(prompt)
        try:
            response = self._client.post(self.endpoint, json={"prompt": prompt})
            response.raise_for_status()
            payload = response.json()
        except httpx.HTTPError as exc:
            raise LlmTransportError(self.endpoint, str(exc)) from exc
        except ValueError as exc:
            raise LlmTransportError(self.endpoint, f"invalid JSON: {exc}") from exc
        if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
            raise LlmTransportError(self.endpoint, "missing text field", str(payload))
        return payload["text"]

    def _validate(self, raw: str) -> tuple[PreferenceState, FeedbackClass]:
        record = _extract_json_object(raw)
        state = PreferenceState.from_dict(record.get("preferences", {}))
        feedback = FeedbackClass.from_dict(
            record.get("feedback", {"kind": "compatible"})
        )
        return state, feedback

    def parse(self, feed: Feed | None, command: Command, memory: PreferenceState) -> ParseResult:
        prompt = PARSER_PROMPT_TEMPLATE.format(
            feed=render_feed_text(feed, self.catalog),
            memory=memory.canonical_json(),
            command=command.text,
        )
        raw = self._call(prompt)
        try:
            state, feedback = self._validate(raw)
            return ParseResult(state=state, feedback=feedback)
        except (PreferenceError, json.JSONDecodeError, ValueError):
            pass
        repair_prompt = (
            prompt
            + "\n\nYour previous reply could not be parsed. Respond with exactly one valid JSON object and nothing else."
        )
        raw = self._call(repair_prompt)
        try:
            state, feedback = self._validate(raw)
            return ParseResult(state=state, feedback=feedback)
        except (PreferenceError, json.JSONDecodeError, ValueError):
            return ParseResult(
                state=memory.copy(),
                feedback=FeedbackClass(kind="compatible"),
                degraded=True,
            )

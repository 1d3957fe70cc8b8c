import json
import random

import httpx
import pytest

from recfeed.catalog import Command, Feed
from recfeed.grammar import Extraction
from recfeed.parser import (
    LlmParserBackend,
    LlmTransportError,
    RuleParserBackend,
    classify_feedback,
    consolidate,
    constraints_contradict,
    extract_signals,
    parse_command,
)
from recfeed.preferences import Constraint, FeedbackClass, PreferenceState
from recfeed.tools import ScoreBreakdown


def c(attr, op, values, strictness="hard", polarity="positive", round=0):
    return Constraint(
        attribute=attr, op=op, values=tuple(values),
        strictness=strictness, polarity=polarity, source_round=round,
    )


def state_of(*constraints, free_pos=(), free_neg=()):
    state = PreferenceState.empty()
    for constraint in constraints:
        state.insert(constraint)
    for phrase in free_pos:
        state.add_free_text(phrase, "positive")
    for phrase in free_neg:
        state.add_free_text(phrase, "negative")
    return state


def extraction_of(*constraints, free_pos=(), free_neg=(), marker=False):
    extraction = Extraction(change_marker=marker)
    for constraint in constraints:
        if constraint.polarity == "negative":
            extraction.negative.append(constraint)
        else:
            extraction.positive.append(constraint)
    extraction.free_text_positive.extend(free_pos)
    extraction.free_text_negative.extend(free_neg)
    return extraction


class TestClassify:
    def test_empty_extraction_satisfied(self):
        assert classify_feedback(state_of(), extraction_of()).kind == "satisfied"

    def test_positive_free_text_only_still_satisfied(self):
        fb = classify_feedback(state_of(), extraction_of(free_pos=["looks great"]))
        assert fb.kind == "satisfied"

    def test_negative_free_text_blocks_satisfied(self):
        fb = classify_feedback(state_of(), extraction_of(free_neg=["boring"]))
        assert fb.kind == "compatible"

    def test_disjoint_numeric_ranges_conflict(self):
        memory = state_of(c("price", "less_than", (50,)))
        extraction = extraction_of(c("price", "between", (100, 200)))
        fb = classify_feedback(memory, extraction)
        assert fb.kind == "conflicting"
        assert fb.conflict_keys == ("price",)

    def test_overlapping_numeric_ranges_compatible(self):
        memory = state_of(c("price", "less_than", (50,)))
        extraction = extraction_of(c("price", "less_than", (30,)))
        assert classify_feedback(memory, extraction).kind == "compatible"

    def test_disjoint_keys_compatible(self):
        memory = state_of(c("category", "equals", ("mystery",)))
        extraction = extraction_of(c("language", "equals", ("english",)))
        assert classify_feedback(memory, extraction).kind == "compatible"

    def test_equals_vs_excludes_same_value_conflicts(self):
        memory = state_of(c("category", "equals", ("mystery",)))
        extraction = extraction_of(
            c("category", "excludes", ("mystery",), polarity="negative")
        )
        fb = classify_feedback(memory, extraction)
        assert fb.kind == "conflicting" and fb.conflict_keys == ("category",)

    def test_change_marker_forces_conflict_on_extracted_keys(self):
        memory = state_of(c("category", "equals", ("mystery",)))
        extraction = extraction_of(c("category", "equals", ("scifi",)), marker=True)
        fb = classify_feedback(memory, extraction)
        assert fb.kind == "conflicting" and fb.conflict_keys == ("category",)

    def test_marker_without_constraints_not_conflicting(self):
        fb = classify_feedback(state_of(), extraction_of(free_neg=["hmm"], marker=True))
        assert fb.kind == "compatible"


def brute_force_cohold(a, b):
    """Independent oracle: scan candidate values for joint satisfiability."""
    def predicate(constraint, x):
        op = constraint.op
        vals = constraint.values
        if op == "less_than":
            matched = x < vals[0]
        elif op == "less_equal":
            matched = x <= vals[0]
        elif op == "greater_than":
            matched = x > vals[0]
        elif op == "greater_equal":
            matched = x >= vals[0]
        elif op == "between":
            matched = vals[0] <= x <= vals[1]
        else:  # equals / excludes on a number
            matched = any(x == v for v in vals)
            if op == "excludes":
                return (not matched) if constraint.polarity == "positive" else not matched
        return matched

    def allowed(constraint, x):
        matched = predicate(constraint, x)
        if constraint.op == "excludes":
            return not any(x == v for v in constraint.values)
        return matched if constraint.polarity == "positive" else not matched

    points = set()
    for constraint in (a, b):
        for v in constraint.values:
            points.update({v - 1.0, v - 0.5, v, v + 0.5, v + 1.0})
    points.update({-1e9, 1e9})
    return any(allowed(a, x) and allowed(b, x) for x in points)


class TestNumericConflictOracle:
    def test_random_pairs_match_brute_force(self):
        rng = random.Random(11)
        ops = ["less_than", "less_equal", "greater_than", "greater_equal", "between",
               "equals", "excludes"]
        checked = 0
        for _ in range(400):
            def make():
                op = rng.choice(ops)
                polarity = rng.choice(["positive", "negative"])
                if op == "between":
                    low = rng.randint(0, 50)
                    return c("price", op, (low, low + rng.randint(0, 30)), polarity=polarity)
                return c("price", op, (rng.randint(0, 80),), polarity=polarity)
            a, b = make(), make()
            memory = PreferenceState.empty()
            bucket = memory.bucket(a.polarity, "hard")
            bucket.append(a)
            fb = classify_feedback(memory, extraction_of(b))
            # The value-clash rule never applies here (no inclusion ops),
            # so conflicting must equal interval disjointness exactly.
            expected = not brute_force_cohold(a, b)
            assert (fb.kind == "conflicting") == expected, (a, b)
            checked += 1
        assert checked == 400


class TestConsolidate:
    def test_preservation(self):
        memory = state_of(c("price", "less_than", (50,)), free_pos=["cozy"])
        out = consolidate(memory, extraction_of(), FeedbackClass(kind="satisfied"))
        assert out == memory
        assert out is not memory

    def test_union_keeps_both(self):
        memory = state_of(c("price", "less_than", (50,)))
        extraction = extraction_of(c("category", "equals", ("mystery",)))
        out = consolidate(memory, extraction, FeedbackClass(kind="compatible"))
        assert len(out.positive_hard) == 2

    def test_resolution_replaces_only_conflicted_key(self):
        memory = state_of(
            c("brand", "equals", ("acme",)),
            c("price", "less_than", (50,)),
        )
        extraction = extraction_of(c("brand", "equals", ("zenith",)), marker=True)
        feedback = classify_feedback(memory, extraction)
        out = consolidate(memory, extraction, feedback)
        brands = [x for x in out.positive_hard if x.attribute == "brand"]
        prices = [x for x in out.positive_hard if x.attribute == "price"]
        assert [b.values for b in brands] == [("zenith",)]
        assert [p.values for p in prices] == [(50,)]

    def test_resolution_flips_polarity(self):
        # "no longer interested in mystery": drop the positive, add the exclusion.
        memory = state_of(c("category", "equals", ("mystery",)))
        extraction = extraction_of(
            c("category", "excludes", ("mystery",), polarity="negative"), marker=True
        )
        feedback = classify_feedback(memory, extraction)
        out = consolidate(memory, extraction, feedback)
        assert out.positive_hard == []
        assert [x.values for x in out.negative_hard] == [("mystery",)]

    def test_integration_idempotent(self):
        memory = state_of(c("price", "less_than", (50,)))
        extraction = extraction_of(c("category", "equals", ("mystery",)), free_pos=["fun"])
        once = consolidate(memory, extraction, FeedbackClass(kind="compatible"))
        twice = consolidate(once, extraction, FeedbackClass(kind="compatible"))
        assert once == twice


class TestParseCommand:
    def test_under_50_on_empty_memory(self, books_catalog):
        backend = RuleParserBackend(books_catalog)
        result = parse_command(backend, None, Command("under $50", 1), PreferenceState.empty())
        constraint = result.state.positive_hard[0]
        assert (constraint.attribute, constraint.op, constraint.values) == (
            "price", "less_than", (50.0,)
        )
        assert result.state.negative_hard == []

    def test_prefer_romantic_movies_soft(self, movies_catalog):
        backend = RuleParserBackend(movies_catalog)
        result = parse_command(
            backend, None, Command("prefer romantic movies", 1), PreferenceState.empty()
        )
        constraint = result.state.positive_soft[0]
        assert (constraint.attribute, constraint.op, constraint.values) == (
            "genre", "contains", ("romantic",)
        )

    def test_satisfied_leaves_memory(self, books_catalog):
        backend = RuleParserBackend(books_catalog)
        memory = state_of(c("price", "less_than", (50,)))
        result = parse_command(backend, None, Command("looks great!", 2), memory)
        assert result.state == memory
        assert result.feedback.kind == "satisfied"

    def test_rule_backend_byte_determinism(self, books_catalog):
        backend = RuleParserBackend(books_catalog)
        memory = state_of(c("category", "equals", ("mystery",)))
        command = Command("want language: english, under $40", 2)
        a = parse_command(backend, None, command, memory).state.canonical_json()
        b = parse_command(backend, None, command, memory).state.canonical_json()
        assert a == b

    def test_extract_signals_wrapper(self, books_catalog):
        backend = RuleParserBackend(books_catalog)
        extraction = extract_signals(backend, Command("want category: scifi", 1), None)
        assert extraction.positive[0].values == ("scifi",)


def valid_llm_reply(state, kind="compatible", keys=()):
    record = {"preferences": state.to_dict(),
              "feedback": {"kind": kind, "conflict_keys": list(keys)}}
    return json.dumps(record)


class TestLlmBackend:
    def test_valid_reply_parsed(self, books_catalog):
        target = state_of(c("category", "equals", ("mystery",)))
        backend = LlmParserBackend(
            books_catalog, complete=lambda prompt: valid_llm_reply(target)
        )
        result = backend.parse(None, Command("want mysteries", 1), PreferenceState.empty())
        assert result.state == target
        assert not result.degraded

    def test_fenced_reply_parsed(self, books_catalog):
        target = state_of(c("price", "less_than", (50,)))
        reply = "```json\n" + valid_llm_reply(target) + "\n```"
        backend = LlmParserBackend(books_catalog, complete=lambda prompt: reply)
        result = backend.parse(None, Command("cheap", 1), PreferenceState.empty())
        assert result.state == target

    def test_one_repair_attempt(self, books_catalog):
        target = state_of(c("category", "equals", ("scifi",)))
        calls = []

        def complete(prompt):
            calls.append(prompt)
            if len(calls) == 1:
                return "not json at all"
            return valid_llm_reply(target)

        backend = LlmParserBackend(books_catalog, complete=complete)
        result = backend.parse(None, Command("scifi please", 1), PreferenceState.empty())
        assert result.state == target
        assert len(calls) == 2
        assert "could not be parsed" in calls[1]

    def test_degrades_to_unchanged_memory(self, books_catalog):
        memory = state_of(c("price", "less_than", (50,)))
        backend = LlmParserBackend(books_catalog, complete=lambda prompt: "garbage")
        result = backend.parse(None, Command("whatever", 1), memory)
        assert result.degraded
        assert result.state == memory

    def test_schema_violating_reply_degrades(self, books_catalog):
        bad = json.dumps({
            "preferences": {
                "positive_hard": [{"attribute": "price", "op": "between",
                                   "values": [50, 10], "strictness": "hard",
                                   "polarity": "positive"}],
            },
            "feedback": {"kind": "compatible"},
        })
        memory = state_of(c("category", "equals", ("mystery",)))
        backend = LlmParserBackend(books_catalog, complete=lambda prompt: bad)
        result = backend.parse(None, Command("whatever", 1), memory)
        assert result.degraded and result.state == memory

    def test_transport_error_carries_endpoint(self, books_catalog):
        def handler(request):
            raise httpx.ConnectError("down")

        client = httpx.Client(transport=httpx.MockTransport(handler))
        backend = LlmParserBackend(books_catalog, endpoint="http://llm.test/v1", client=client)
        with pytest.raises(LlmTransportError) as exc:
            backend.parse(None, Command("hello", 1), PreferenceState.empty())
        assert exc.value.endpoint == "http://llm.test/v1"

    def test_prompt_carries_feed_memory_command(self, books_catalog, provider):
        prompts = []

        def complete(prompt):
            prompts.append(prompt)
            return valid_llm_reply(state_of())

        backend = LlmParserBackend(books_catalog, complete=complete)
        feed = Feed(round=0, k=2, entries=(
            ("i1", ScoreBreakdown(s_final=1.0)), ("i2", ScoreBreakdown(s_final=0.5)),
        ))
        memory = state_of(c("category", "equals", ("mystery",)))
        backend.parse(feed, Command("show me more", 1), memory)
        prompt = prompts[0]
        assert "The Quiet Clue" in prompt
        assert '"category"' in prompt
        assert "show me more" in prompt

import pytest

from recfeed.catalog import Command, Feed
from recfeed.grammar import CommandGrammar
from recfeed.tools import ScoreBreakdown


def feed_of(ids, k=5):
    entries = tuple(
        (item_id, ScoreBreakdown(s_final=float(len(ids) - i)))
        for i, item_id in enumerate(ids)
    )
    return Feed(round=0, k=k, entries=entries)


def only(constraints):
    assert len(constraints) == 1, constraints
    return constraints[0]


class TestComparisons:
    def test_under_dollar_sign_is_positive_hard_price(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract("under $50", None)
        constraint = only(extraction.positive)
        assert (constraint.attribute, constraint.op, constraint.values) == (
            "price", "less_than", (50.0,)
        )
        assert constraint.strictness == "hard"
        assert extraction.negative == []

    def test_between_with_attribute_word(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        constraint = only(grammar.extract("between 100 and 200 price", None).positive)
        assert (constraint.attribute, constraint.op, constraint.values) == (
            "price", "between", (100.0, 200.0)
        )

    def test_price_hint_in_other_clause(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract("too expensive, under 46", None)
        constraint = only(extraction.positive)
        assert (constraint.attribute, constraint.op, constraint.values) == (
            "price", "less_than", (46.0,)
        )
        assert extraction.free_text_negative == ["expensive"]

    def test_negated_comparison_lands_negative(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract("don't want pages over 400", None)
        constraint = only(extraction.negative)
        assert (constraint.attribute, constraint.op, constraint.values) == (
            "pages", "greater_than", (400.0,)
        )

    def test_at_most_and_at_least(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        le = only(grammar.extract("want price at most 45", None).positive)
        assert (le.op, le.values) == ("less_equal", (45.0,))
        ge = only(grammar.extract("want pages at least 300", None).positive)
        assert (ge.attribute, ge.op, ge.values) == ("pages", "greater_equal", (300.0,))

    def test_bound_without_any_hint_dropped(self, books_catalog):
        # Two numeric attributes and no hint: nothing to attach to.
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract("under 10", None)
        assert extraction.positive == [] and extraction.negative == []


class TestPairs:
    def test_positive_pair_is_hard_equals(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        constraint = only(grammar.extract("want category: mystery", None).positive)
        assert (constraint.attribute, constraint.op, constraint.values) == (
            "category", "equals", ("mystery",)
        )
        assert constraint.strictness == "hard"

    def test_negative_pair_is_hard_excludes(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        constraint = only(grammar.extract("no category: romance", None).negative)
        assert (constraint.op, constraint.values) == ("excludes", ("romance",))

    def test_multi_clause_command(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract(
            "want category: mystery, language: english, price at most 45", None
        )
        got = {(c.attribute, c.op, c.values) for c in extraction.positive}
        assert got == {
            ("category", "equals", ("mystery",)),
            ("language", "equals", ("english",)),
            ("price", "less_equal", (45.0,)),
        }

    def test_boolean_pair(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        constraint = only(grammar.extract("want hardcover: true", None).positive)
        assert constraint.values == (True,)

    def test_numeric_pair(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        constraint = only(grammar.extract("want pages: 320", None).positive)
        assert (constraint.op, constraint.values) == ("equals", (320.0,))

    def test_unknown_attribute_pair_becomes_free_text(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract("want flavor: sweet", None)
        assert extraction.positive == []
        assert extraction.free_text_positive == ["flavor sweet"]


class TestVocabularyAndDeixis:
    def test_bare_vocabulary_value_is_soft(self, movies_catalog):
        grammar = CommandGrammar(movies_catalog)
        extraction = grammar.extract("prefer romantic movies", None)
        constraint = only(extraction.positive)
        assert (constraint.attribute, constraint.op, constraint.values) == (
            "genre", "contains", ("romantic",)
        )
        assert constraint.strictness == "soft"

    def test_negative_vocabulary_value(self, clothes_catalog):
        grammar = CommandGrammar(clothes_catalog)
        extraction = grammar.extract("Don't want floral dresses", None)
        constraint = only(extraction.negative)
        assert (constraint.attribute, constraint.op, constraint.values) == (
            "style", "contains", ("floral",)
        )
        assert constraint.strictness == "soft"

    def test_deictic_first_one(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        feed = feed_of(["i3", "i2", "i1"])
        extraction = grammar.extract("more like the first one", feed)
        got = {(c.attribute, c.values[0]) for c in extraction.positive}
        # i3 carries category mystery+thriller and language german.
        assert got == {
            ("category", "mystery"),
            ("category", "thriller"),
            ("language", "german"),
        }
        assert all(c.strictness == "soft" for c in extraction.positive)
        assert extraction.free_text_positive == []

    def test_deictic_hash_position(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        feed = feed_of(["i3", "i5", "i1"])
        extraction = grammar.extract("like the #2 one", feed)
        assert {(c.attribute, c.values[0]) for c in extraction.positive} == {
            ("category", "cooking"),
            ("language", "english"),
        }

    def test_deictic_last_one_negative(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        feed = feed_of(["i3", "i5", "i8"])
        extraction = grammar.extract("don't want ones like the last one", feed)
        assert {(c.attribute, c.values[0]) for c in extraction.negative} == {
            ("category", "mystery"),
            ("language", "english"),
        }


class TestChangeMarkersAndFreeText:
    def test_instead_of_flips_trailing_segment(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract(
            "want category: romance instead of category: mystery", None
        )
        assert extraction.change_marker
        positive = only(extraction.positive)
        negative = only(extraction.negative)
        assert positive.values == ("romance",)
        assert (negative.op, negative.values) == ("excludes", ("mystery",))

    def test_no_longer_negates(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract("no longer interested in mystery", None)
        assert extraction.change_marker
        constraint = only(extraction.negative)
        assert (constraint.attribute, constraint.values) == ("category", ("mystery",))

    def test_leading_instead(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract("instead, want category: scifi", None)
        assert extraction.change_marker
        assert only(extraction.positive).values == ("scifi",)

    def test_satisfied_style_text(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract("looks great!", None)
        assert extraction.constraints() == []
        assert extraction.free_text_positive == ["looks great"]
        assert extraction.free_text_negative == []

    def test_bare_negative_marker_recorded(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        extraction = grammar.extract("no!", None)
        assert extraction.constraints() == []
        assert extraction.free_text_negative == ["no"]

    def test_determinism(self, books_catalog):
        grammar = CommandGrammar(books_catalog)
        a = grammar.extract("want category: mystery, under $30, not too long", None)
        b = grammar.extract("want category: mystery, under $30, not too long", None)
        assert [x.to_dict() for x in a.constraints()] == [x.to_dict() for x in b.constraints()]
        assert (a.free_text_positive, a.free_text_negative) == (
            b.free_text_positive, b.free_text_negative
        )

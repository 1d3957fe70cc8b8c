import pytest

from recfeed.aia import AiaParams, AiaScorer
from recfeed.catalog import Catalog, Item, Quantity
from recfeed.embedding import HashedEmbeddingProvider
from recfeed.parser import RuleParserBackend
from recfeed.session import SessionEngine
from recfeed.tools import ToolParams


def q(value, unit=None):
    return Quantity(value=float(value), unit=unit)


BOOKS_SCHEMA = {
    "category": "text",
    "language": "text",
    "binding": "text",
    "price": "number",
    "pages": "number",
    "hardcover": "boolean",
}


def make_books_catalog() -> Catalog:
    items = (
        Item("i1", "The Quiet Clue", "a detective story",
             {"category": ("mystery",), "language": ("english",),
              "price": (q(30),), "pages": (q(320),), "hardcover": (True,)},
             popularity=10),
        Item("i2", "Harbor Hearts", "a seaside love story",
             {"category": ("romance",), "language": ("english",),
              "price": (q(80),), "pages": (q(200),)},
             popularity=50),
        Item("i3", "Midnight Ledger", "a thriller of numbers",
             {"category": ("mystery", "thriller"), "language": ("german",),
              "price": (q(120),), "pages": (q(540),)},
             popularity=30),
        Item("i4", "Star Chart", "voyages between worlds",
             {"category": ("scifi",), "price": (q(45),)},
             popularity=70),
        Item("i5", "Pan and Flame", "weeknight recipes",
             {"category": ("cooking",), "language": ("english",),
              "price": (q(25),), "pages": (q(150),), "hardcover": (False,)},
             popularity=20),
        Item("i6", "Blank Slate", "a book about nothing", {}, popularity=90),
        Item("i7", "Lettres", "an epistolary romance",
             {"category": ("romance",), "language": ("french",),
              "price": (q(55),), "pages": (q(410),)},
             popularity=60),
        Item("i8", "Alley Shadows", "noir in the old town",
             {"category": ("mystery",), "language": ("english",),
              "price": (q(15),), "pages": (q(280),)},
             popularity=40),
    )
    return Catalog(items=items, attribute_schema=dict(BOOKS_SCHEMA))


def make_clothes_catalog() -> Catalog:
    schema = {"category": "text", "style": "text", "color": "text", "price": "number"}
    items = (
        Item("c1", "Summer Dress", "light and airy",
             {"category": ("dress",), "style": ("floral",), "color": ("blue",),
              "price": (q(120),)}, popularity=5),
        Item("c2", "Linen Shirt", "crisp cut",
             {"category": ("shirt",), "style": ("striped",), "color": ("white",),
              "price": (q(60),)}, popularity=9),
        Item("c3", "Evening Gown", "for formal nights",
             {"category": ("dress",), "style": ("plain",), "color": ("black",),
              "price": (q(240),)}, popularity=7),
    )
    return Catalog(items=items, attribute_schema=schema)


def make_movies_catalog() -> Catalog:
    schema = {"genre": "text", "era": "text", "language": "text", "price": "number"}
    items = (
        Item("m1", "Paris Letters", "two pen pals meet",
             {"genre": ("romantic",), "era": ("90s",), "language": ("english",),
              "price": (q(10),)}, popularity=3),
        Item("m2", "Iron Chase", "cars and explosions",
             {"genre": ("action",), "era": ("2000s",), "language": ("english",),
              "price": (q(12),)}, popularity=8),
        Item("m3", "Silent Garden", "a meditative drama",
             {"genre": ("drama",), "era": ("90s",), "language": ("french",),
              "price": (q(8),)}, popularity=5),
    )
    return Catalog(items=items, attribute_schema=schema)


@pytest.fixture(scope="session")
def books_catalog() -> Catalog:
    return make_books_catalog()


@pytest.fixture(scope="session")
def clothes_catalog() -> Catalog:
    return make_clothes_catalog()


@pytest.fixture(scope="session")
def movies_catalog() -> Catalog:
    return make_movies_catalog()


@pytest.fixture(scope="session")
def provider() -> HashedEmbeddingProvider:
    return HashedEmbeddingProvider()


def build_engine(catalog, provider=None, log_dir=None, params=None, with_aia=True,
                 parser_backend=None, aia_seed=0) -> SessionEngine:
    provider = provider or HashedEmbeddingProvider()
    aia = None
    if with_aia:
        aia = AiaScorer(
            catalog,
            provider,
            AiaParams.seeded(text_dim=provider.dim, image_dim=catalog.image_dim, seed=aia_seed),
        )
    return SessionEngine(
        catalog=catalog,
        provider=provider,
        parser_backend=parser_backend or RuleParserBackend(catalog),
        params=params or ToolParams(),
        aia=aia,
        log_dir=log_dir,
    )

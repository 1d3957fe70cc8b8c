"""Constructed synthetic benchmark: every target is pinned by three facts.

The catalog spans a category x style grid; each grid cell holds exactly
one "target" item that is strictly cheaper than every other item in its
cell. Category, style, and a price ceiling therefore identify each target
uniquely, so a user who reveals all three must converge.
"""

from __future__ import annotations

import random

from .catalog import Catalog, Item, Quantity
from .simulate import SimUser

CATEGORIES = (
    "mystery", "romance", "scifi", "fantasy", "history", "travel", "cooking",
    "sports", "music", "art", "science", "poetry", "drama", "comedy", "horror",
    "western", "thriller", "biography", "business", "health",
)
STYLES = (
    "classic", "modern", "vintage", "minimal", "ornate",
    "rustic", "elegant", "casual", "bold", "subtle",
)

SCHEMA = {"category": "text", "style": "text", "price": "number"}

IMAGE_DIM = 8


def make_benchmark(
    users: int = 200,
    catalog_size: int = 2000,
    seed: int = 7,
    history_min: int = 8,
    history_max: int = 15,
) -> tuple[Catalog, list[SimUser]]:
    """Build the grid catalog plus one user per targeted grid cell."""
    cells = [(c, s) for c in CATEGORIES for s in STYLES]
    if users > len(cells):
        raise ValueError(f"at most {len(cells)} users supported, got {users}")
    target_cells = cells[:users]
    if catalog_size < len(target_cells) + 1:
        raise ValueError("catalog must be larger than the target grid")
    rng = random.Random(seed)

    items: list[Item] = []
    target_ids: list[str] = []
    target_price: dict[tuple[str, str], int] = {}
    for index, (category, style) in enumerate(target_cells):
        price = rng.randint(10, 60)
        target_price[(category, style)] = price
        item_id = f"t{index:04d}"
        target_ids.append(item_id)
        items.append(_make_item(item_id, category, style, price, rng))

    filler_count = catalog_size - len(target_cells)
    for index in range(filler_count):
        category, style = rng.choice(cells)
        floor = target_price.get((category, style))
        if floor is not None:
            price = floor + rng.randint(5, 400)
        else:
            price = rng.randint(10, 460)
        items.append(_make_item(f"f{index:04d}", category, style, price, rng))

    catalog = Catalog(items=tuple(items), attribute_schema=dict(SCHEMA))

    filler_ids = [item.id for item in items if item.id.startswith("f")]
    sim_users: list[SimUser] = []
    for index in range(users):
        target_id = target_ids[index]
        history_len = rng.randint(history_min, history_max)
        history = tuple(rng.sample(filler_ids, history_len))
        pseudo_candidates = [t for t in target_ids if t != target_id]
        sim_users.append(
            SimUser(
                user_id=f"u{index:04d}",
                history=history,
                target_id=target_id,
                pseudo_target_id=rng.choice(pseudo_candidates),
            )
        )
    return catalog, sim_users


def _make_item(item_id: str, category: str, style: str, price: int, rng: random.Random) -> Item:
    title = f"{style} {category} piece {item_id}"
    description = f"a {style} take on {category}, listed at {price}"
    image = tuple(round(rng.uniform(-1.0, 1.0), 6) for _ in range(IMAGE_DIM))
    return Item(
        id=item_id,
        title=title,
        description=description,
        attributes={
            "category": (category,),
            "style": (style,),
            "price": (Quantity(value=float(price)),),
        },
        image_features=image,
        popularity=round(rng.uniform(0.0, 100.0), 3),
    )

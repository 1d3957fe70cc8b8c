"""Deterministic user simulation and the offline scenario benchmarks.

Simulated users hold a hidden target item and reveal its attributes
through grammar-conformant commands: everything at once in single-round
mode, one attribute per round in multi-round mode, and with a pseudo
target swapped for the real one mid-session in the interest-drift mode.
Complaints are grounded in the top-ranked feed item that violates the
attribute being revealed.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .catalog import Catalog, Command, Feed, Item, Quantity, format_number
from .metrics import avg_rounds, csr_at, ndcg_at, pass_rate, recall_at
from .session import Session, SessionConfig, SessionEngine

MODES = ("SR", "MR", "MRID")

SATISFIED_UTTERANCES = {
    "terse": "looks great!",
    "verbose": "these look wonderful, exactly what I was hoping for!",
}


@dataclass(frozen=True)
class Persona:
    """Behavioral knobs of a simulated user."""

    style: str = "mixed"  # terse | verbose | mixed
    negative_ratio: float = 0.57
    constraint_reveal_order: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.style not in ("terse", "verbose", "mixed"):
            raise ValueError(f"unknown persona style {self.style!r}")
        if not 0.0 <= self.negative_ratio <= 1.0:
            raise ValueError("negative_ratio must be in [0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str = "MR"
    t_max: int = 5
    k: int = 5
    drift_round: int = 3
    users: int = 100
    seed: int = 0
    ranking_mode: str = "full"  # "full" scores the surviving pool, "feed" clips to k
    csr_keys: tuple[str, ...] | None = None
    variant: str = "full"
    negative_ratio: float = 0.57

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown scenario mode {self.mode!r}")
        if self.mode == "MRID" and not self.drift_round < self.t_max:
            raise ValueError("drift_round must be below t_max")
        if self.ranking_mode not in ("full", "feed"):
            raise ValueError("ranking_mode must be 'full' or 'feed'")

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "t_max": self.t_max,
            "k": self.k,
            "drift_round": self.drift_round,
            "users": self.users,
            "seed": self.seed,
            "ranking_mode": self.ranking_mode,
            "csr_keys": list(self.csr_keys) if self.csr_keys else None,
            "variant": self.variant,
            "negative_ratio": self.negative_ratio,
        }


@dataclass(frozen=True)
class SimUser:
    user_id: str
    history: tuple[str, ...]
    target_id: str
    pseudo_target_id: str | None = None


class UserSimulator:
    """Generates one user's commands; deterministic given persona seed."""

    def __init__(
        self,
        catalog: Catalog,
        target: Item,
        persona: Persona,
        mode: str = "MR",
        pseudo_target: Item | None = None,
        drift_round: int = 3,
    ):
        self.catalog = catalog
        self.persona = persona
        self.mode = mode
        self.drift_round = drift_round
        self.true_target = target
        self.pseudo_target = pseudo_target
        self.rng = random.Random(persona.seed)
        self.revealed: set[str] = set()
        self._drifted = mode != "MRID"
        self._active_target = target if self._drifted else (pseudo_target or target)
        self._order = self._reveal_order(self._active_target)

    def _reveal_order(self, target: Item) -> list[str]:
        keys = sorted(target.attributes)
        order_rng = random.Random(f"{self.persona.constraint_reveal_order}:{target.id}")
        order_rng.shuffle(keys)
        return keys

    # -- phrasing ---------------------------------------------------------

    def _positive_phrase(self, attribute: str, target: Item) -> str:
        kind = self.catalog.attribute_schema.get(attribute, "text")
        values = target.attributes[attribute]
        if kind == "number":
            bound = _upper_bound(values)
            return f"want {attribute} at most {format_number(bound)}"
        rendered = str(values[0]) if kind == "text" else ("true" if values[0] else "false")
        return f"want {attribute}: {rendered}"

    def _complaint_phrase(self, attribute: str, target: Item, offender: Item) -> str | None:
        kind = self.catalog.attribute_schema.get(attribute, "text")
        if kind == "number":
            target_numbers = target.numeric_values(attribute)
            offender_numbers = offender.numeric_values(attribute)
            if not target_numbers or not offender_numbers:
                return None
            if max(offender_numbers) <= max(target_numbers):
                return None
            limit = math.floor(max(target_numbers)) + 1
            if attribute == "price":
                return f"too expensive, under {limit}"
            return f"too much, {attribute} under {limit}"
        if kind == "text":
            wanted = {str(v).casefold() for v in target.attributes[attribute]}
            offending = [
                str(v)
                for v in offender.attributes.get(attribute, ())
                if str(v).casefold() not in wanted
            ]
            if not offending:
                return None
            rendered = str(target.attributes[attribute][0])
            return f"don't want {attribute}: {offending[0]}, want {attribute}: {rendered}"
        return None

    def _next_attribute(self) -> str | None:
        for key in self._order:
            if key not in self.revealed:
                return key
        return None

    def _satisfied_utterance(self) -> str:
        style = self.persona.style
        if style == "mixed":
            style = "terse" if self.rng.random() < 0.5 else "verbose"
        return SATISFIED_UTTERANCES[style]

    # -- the simulation policy ---------------------------------------------

    def next_command(self, feed: Feed, round: int) -> Command:
        if self.mode == "SR":
            phrases = [
                self._positive_phrase(attr, self.true_target)
                for attr in self._order
            ]
            self.revealed.update(self._order)
            text = ", ".join(p.removeprefix("want ") for p in phrases)
            return Command(text=f"want {text}", round=round)

        prefix = ""
        if self.mode == "MRID" and not self._drifted and round >= self.drift_round:
            self._drifted = True
            self._active_target = self.true_target
            self.revealed = set()
            self._order = self._reveal_order(self.true_target)
            prefix = "instead, "

        attribute = self._next_attribute()
        if attribute is None:
            return Command(text=self._satisfied_utterance(), round=round)
        self.revealed.add(attribute)

        phrase = None
        if self.rng.random() < self.persona.negative_ratio and feed.entries:
            offender = self.catalog.get(feed.item_at(1))
            phrase = self._complaint_phrase(attribute, self._active_target, offender)
        if phrase is None:
            phrase = self._positive_phrase(attribute, self._active_target)
        return Command(text=prefix + phrase, round=round)


def _upper_bound(values: Sequence[Any]) -> float:
    numbers = [v.value if isinstance(v, Quantity) else float(v) for v in values]
    return max(numbers)


def simulate_feedback(
    feed: Feed,
    target: Item,
    persona: Persona,
    catalog: Catalog,
    revealed: set[str],
    round: int = 1,
    mode: str = "MR",
) -> Command:
    """One-shot functional wrapper around the simulator policy."""
    simulator = UserSimulator(catalog, target, persona, mode=mode)
    simulator.revealed = set(revealed)
    command = simulator.next_command(feed, round)
    revealed.clear()
    revealed.update(simulator.revealed)
    return command


# -- scenario runner ----------------------------------------------------------

METRIC_CUTOFFS = (10, 20, 50)


@dataclass
class UserTrace:
    user_id: str
    target_id: str
    passed: bool
    rounds: int | None
    final_rank: int | None
    commands: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "user_id": self.user_id,
            "target_id": self.target_id,
            "passed": self.passed,
            "rounds": self.rounds,
            "final_rank": self.final_rank,
            "commands": list(self.commands),
        }


@dataclass
class BenchmarkReport:
    config: ScenarioConfig
    recall: dict[int, float]
    ndcg: dict[int, float]
    csr: dict[int, float]
    pass_rate: float
    avg_rounds: float
    csr_excluded: int
    traces: list[UserTrace]
    csr_note: str = "per-item mean of shared designated attribute values over the target's"

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "metrics": {
                "recall": {str(n): v for n, v in self.recall.items()},
                "ndcg": {str(n): v for n, v in self.ndcg.items()},
                "csr": {str(n): v for n, v in self.csr.items()},
                "pass_rate": self.pass_rate,
                "avg_rounds": self.avg_rounds,
            },
            "csr_excluded": self.csr_excluded,
            "csr_note": self.csr_note,
            "traces": [t.to_dict() for t in self.traces],
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def sample_users(catalog: Catalog, config: ScenarioConfig) -> list[SimUser]:
    """Leave-one-out style users drawn from the catalog when none are given."""
    rng = random.Random(config.seed)
    ids = [item.id for item in catalog.items]
    users = []
    for index in range(config.users):
        target = rng.choice(ids)
        others = [i for i in ids if i != target]
        history_len = rng.randint(5, min(15, len(others)))
        history = tuple(rng.sample(others, history_len))
        pseudo = rng.choice([i for i in others if i not in history]) if config.mode == "MRID" else None
        users.append(
            SimUser(
                user_id=f"u{index:04d}",
                history=history,
                target_id=target,
                pseudo_target_id=pseudo,
            )
        )
    return users


def _csr_keys(catalog: Catalog, config: ScenarioConfig) -> tuple[str, ...]:
    if config.csr_keys:
        return config.csr_keys
    return tuple(
        sorted(k for k, kind in catalog.attribute_schema.items() if kind == "text")
    )


def run_scenario(
    config: ScenarioConfig,
    engine: SessionEngine,
    users: Sequence[SimUser] | None = None,
) -> BenchmarkReport:
    """Drive every simulated user through the engine and aggregate metrics."""
    catalog = engine.catalog
    users = list(users) if users is not None else sample_users(catalog, config)
    keys = _csr_keys(catalog, config)

    traces: list[UserTrace] = []
    recall_sums = {n: 0.0 for n in METRIC_CUTOFFS}
    ndcg_sums = {n: 0.0 for n in METRIC_CUTOFFS}
    csr_sums = {n: 0.0 for n in METRIC_CUTOFFS}
    csr_counted = 0
    csr_excluded = 0

    for index, user in enumerate(sorted(users, key=lambda u: u.user_id)):
        target = catalog.get(user.target_id)
        pseudo = catalog.get(user.pseudo_target_id) if user.pseudo_target_id else None
        persona = Persona(
            style="mixed",
            negative_ratio=config.negative_ratio,
            constraint_reveal_order=config.seed,
            seed=(config.seed * 100003 + index),
        )
        simulator = UserSimulator(
            catalog,
            target,
            persona,
            mode=config.mode,
            pseudo_target=pseudo,
            drift_round=config.drift_round,
        )
        t_max = 1 if config.mode == "SR" else config.t_max
        session = engine.create_session(
            user.user_id,
            user.history,
            SessionConfig(
                k=config.k,
                t_max=t_max,
                auto_target=user.target_id,
                variant=config.variant,
                seed=config.seed * 7919 + index,
            ),
        )
        commands: list[str] = []
        while session.status == "active":
            command = simulator.next_command(session.current_feed, session.t + 1)
            commands.append(command.text)
            engine.step(session, command)

        ranking = _final_ranking(session, config)
        final_rank = None
        if user.target_id in ranking:
            final_rank = ranking.index(user.target_id) + 1
        passed = session.status == "satisfied"
        traces.append(
            UserTrace(
                user_id=user.user_id,
                target_id=user.target_id,
                passed=passed,
                rounds=session.satisfied_round,
                final_rank=final_rank,
                commands=commands,
            )
        )
        for n in METRIC_CUTOFFS:
            recall_sums[n] += recall_at(ranking, user.target_id, n)
            ndcg_sums[n] += ndcg_at(ranking, user.target_id, n)
        coverage = {n: csr_at(ranking, target, n, catalog, keys) for n in METRIC_CUTOFFS}
        if any(v is None for v in coverage.values()):
            csr_excluded += 1
        else:
            csr_counted += 1
            for n in METRIC_CUTOFFS:
                csr_sums[n] += coverage[n]  # type: ignore[operator]

    count = len(traces)
    if count == 0:
        raise ValueError("scenario produced no sessions")
    t_max = 1 if config.mode == "SR" else config.t_max
    return BenchmarkReport(
        config=config,
        recall={n: recall_sums[n] / count for n in METRIC_CUTOFFS},
        ndcg={n: ndcg_sums[n] / count for n in METRIC_CUTOFFS},
        csr={
            n: (csr_sums[n] / csr_counted if csr_counted else 0.0)
            for n in METRIC_CUTOFFS
        },
        pass_rate=pass_rate([t.passed for t in traces]),
        avg_rounds=avg_rounds([t.rounds for t in traces], t_max),
        csr_excluded=csr_excluded,
        traces=traces,
    )


def _final_ranking(session: Session, config: ScenarioConfig) -> Sequence[str]:
    if config.ranking_mode == "feed":
        return session.current_feed.item_ids()
    trace = session.latest_trace
    if trace is not None and trace.ranking:
        return trace.ranking
    return session.current_feed.item_ids()

"""Interaction loop: one session per user, parser then planner per round.

Steps are atomic: every derived value is computed before the session is
mutated, so a provider failure mid-round leaves the session untouched.
Sessions persist as append-only event logs (one JSON record per line)
that replay into identical feeds and feed the distillation exporter.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from .aia import AiaScorer
from .catalog import Catalog, Command, Feed, UserHistory
from .embedding import EmbeddingProvider
from .parser import ParseResult, ParserBackend, parse_command, render_feed_text
from .planner import PlanTrace, ToolChain, execute_chain, select_tools
from .preferences import PreferenceState
from .tools import (
    AGGREGATOR,
    MATCHER,
    DEFAULT_RANKER,
    ScoreBreakdown,
    ToolParams,
)

VARIANTS = ("full", "semantic_only", "random")


class SessionError(ValueError):
    """Bad session inputs (unknown items, malformed config)."""


class SessionStateError(RuntimeError):
    """Step attempted on a session that is no longer active."""


@dataclass(frozen=True)
class SessionConfig:
    k: int = 5
    t_max: int = 5
    r0: str = "popularity"  # or "aia_neutral"
    auto_target: str | None = None  # simulation mode: satisfied when in top-k
    variant: str = "full"
    seed: int = 0  # drives the random ablation variant

    def __post_init__(self) -> None:
        if self.k <= 0 or self.t_max <= 0:
            raise SessionError("k and t_max must be positive")
        if self.variant not in VARIANTS:
            raise SessionError(f"unknown variant {self.variant!r}")
        if self.r0 not in ("popularity", "aia_neutral"):
            raise SessionError(f"unknown opening-feed strategy {self.r0!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "t_max": self.t_max,
            "r0": self.r0,
            "auto_target": self.auto_target,
            "variant": self.variant,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, record: dict[str, Any]) -> "SessionConfig":
        return cls(
            k=int(record.get("k", 5)),
            t_max=int(record.get("t_max", 5)),
            r0=record.get("r0", "popularity"),
            auto_target=record.get("auto_target"),
            variant=record.get("variant", "full"),
            seed=int(record.get("seed", 0)),
        )


@dataclass
class Session:
    id: str
    user_id: str
    history: UserHistory
    config: SessionConfig
    memory: PreferenceState = field(default_factory=PreferenceState.empty)
    feeds: list[Feed] = field(default_factory=list)
    commands: list[Command] = field(default_factory=list)
    traces: list[PlanTrace] = field(default_factory=list)
    t: int = 0
    status: str = "active"
    satisfied_round: int | None = None

    @property
    def current_feed(self) -> Feed:
        return self.feeds[-1]

    @property
    def latest_trace(self) -> PlanTrace | None:
        return self.traces[-1] if self.traces else None


def _random_feed(catalog: Catalog, k: int, seed: int, round: int) -> tuple[Feed, PlanTrace]:
    """Seeded uniform ranking, used only by the random ablation variant."""
    rng = random.Random(f"{seed}:{round}")
    ids = [item.id for item in catalog.items]
    rng.shuffle(ids)
    breakdowns = {}
    for rank, item_id in enumerate(ids):
        score = float(len(ids) - rank)
        breakdowns[item_id] = ScoreBreakdown(s_match=score, s_final=score)
    chain = ToolChain(stages=((DEFAULT_RANKER,),), rationales=("random ablation ranking",))
    trace = PlanTrace(chain=chain, pool_before=len(ids), pool_after=len(ids), ranking=tuple(ids))
    entries = tuple((item_id, breakdowns[item_id]) for item_id in ids[:k])
    return Feed(round=round, k=k, entries=entries), trace


class SessionEngine:
    """Owns the catalog, providers, and every live session's step logic."""

    def __init__(
        self,
        catalog: Catalog,
        provider: EmbeddingProvider,
        parser_backend: ParserBackend,
        params: ToolParams | None = None,
        aia: AiaScorer | None = None,
        log_dir: str | Path | None = None,
    ):
        self.catalog = catalog
        self.provider = provider
        self.parser_backend = parser_backend
        self.params = params or ToolParams()
        self.aia = aia
        self.log_dir = Path(log_dir) if log_dir else None
        if self.log_dir:
            self.log_dir.mkdir(parents=True, exist_ok=True)

    # -- event log ---------------------------------------------------------

    def _log_path(self, session_id: str) -> Path | None:
        if self.log_dir is None:
            return None
        return self.log_dir / f"{session_id}.log"

    def _append_event(self, session_id: str, kind: str, round: int, payload: dict[str, Any]) -> None:
        path = self._log_path(session_id)
        if path is None:
            return
        record = {"kind": kind, "round": round, "payload": payload, "ts": time.time()}
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    # -- lifecycle -----------------------------------------------------------

    def create_session(
        self,
        user_id: str,
        history_ids: Iterable[str] = (),
        config: SessionConfig | None = None,
        session_id: str | None = None,
    ) -> Session:
        config = config or SessionConfig()
        history = UserHistory.for_catalog(history_ids, self.catalog)
        session_id = session_id or f"s-{user_id}-{random.getrandbits(48):012x}"
        feed, trace = self._opening_feed(history, config)
        session = Session(
            id=session_id,
            user_id=user_id,
            history=history,
            config=config,
            feeds=[feed],
            traces=[trace],
        )
        self._append_event(
            session.id,
            "created",
            0,
            {
                "session_id": session.id,
                "user_id": user_id,
                "history": list(history.interactions),
                "config": config.to_dict(),
                "feed": feed.to_dict(),
                "feed_rendered": render_feed_text(feed, self.catalog),
            },
        )
        return session

    def _opening_feed(self, history: UserHistory, config: SessionConfig) -> tuple[Feed, PlanTrace]:
        if config.variant == "random":
            return _random_feed(self.catalog, config.k, config.seed, 0)
        empty = PreferenceState.empty()
        if config.r0 == "aia_neutral" and history and self.aia is not None:
            chain = ToolChain(
                stages=((MATCHER,), (AGGREGATOR,)),
                rationales=("open with history-aware ranking", "order by match score"),
            )
        else:
            chain = select_tools(empty, history)
        return execute_chain(
            chain, empty, history, self.catalog, self.params, self.provider, self.aia, config.k, 0
        )

    def _plan(self, session: Session, memory: PreferenceState) -> ToolChain:
        variant = session.config.variant
        if variant == "semantic_only":
            return ToolChain(
                stages=((MATCHER,), (AGGREGATOR,)),
                rationales=("semantic-only ablation", "order by match score"),
            )
        return select_tools(memory, session.history)

    def step(
        self,
        session: Session,
        command: Command,
        satisfy_signal: bool | None = None,
    ) -> Feed:
        """Parse the command, re-plan, and produce the next feed atomically."""
        if session.status != "active":
            raise SessionStateError(f"session {session.id} is {session.status}, not active")
        memory_before = session.memory
        result: ParseResult = parse_command(
            self.parser_backend, session.current_feed, command, memory_before
        )
        new_round = session.t + 1
        if session.config.variant == "random":
            feed, trace = _random_feed(self.catalog, session.config.k, session.config.seed, new_round)
        else:
            params = self.params
            aia = self.aia
            if session.config.variant == "semantic_only":
                params = ToolParams(alpha=1.0, beta=self.params.beta,
                                    standardize_aia=self.params.standardize_aia)
                aia = None
            chain = self._plan(session, result.state)
            feed, trace = execute_chain(
                chain,
                result.state,
                session.history,
                self.catalog,
                params,
                self.provider,
                aia,
                session.config.k,
                new_round,
            )

        # All derived values exist; mutate the session only from here on.
        session.memory = result.state
        session.commands.append(command)
        session.feeds.append(feed)
        session.traces.append(trace)
        session.t = new_round

        satisfied = bool(satisfy_signal)
        if session.config.auto_target is not None:
            satisfied = satisfied or session.config.auto_target in feed.item_ids()
        if satisfied:
            session.status = "satisfied"
            session.satisfied_round = new_round
        elif session.t >= session.config.t_max:
            session.status = "exhausted"

        self._append_event(
            session.id,
            "step",
            new_round,
            {
                "command": command.text,
                "satisfy_signal": bool(satisfy_signal),
                "memory_before": memory_before.to_dict(),
                "memory_after": result.state.to_dict(),
                "feedback": result.feedback.to_dict(),
                "degraded": result.degraded,
                "chain": trace.chain.to_dict(),
                "trace": trace.to_dict(),
                "feed": feed.to_dict(),
                "feed_rendered": render_feed_text(feed, self.catalog),
            },
        )
        if session.status != "active":
            self._append_event(
                session.id, "status", session.t, {"status": session.status}
            )
        return feed


# -- replay ---------------------------------------------------------------

def read_event_log(path: str | Path) -> list[dict[str, Any]]:
    events = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            events.append(json.loads(line))
    return events


@dataclass
class ReplayResult:
    session_id: str
    rounds: int
    feeds_match: bool
    mismatched_rounds: list[int] = field(default_factory=list)


def replay_log(path: str | Path, engine: SessionEngine) -> ReplayResult:
    """Re-run a logged session and compare every produced feed byte for byte."""
    events = read_event_log(path)
    created = next(e for e in events if e["kind"] == "created")
    payload = created["payload"]
    config = SessionConfig.from_dict(payload["config"])
    session = engine.create_session(
        payload["user_id"], payload["history"], config, session_id=f"replay-{payload['session_id']}"
    )
    expected: list[tuple[int, str, dict[str, Any]]] = []
    for event in events:
        if event["kind"] == "step":
            expected.append((event["round"], event["payload"]["command"],
                             event["payload"]))
    mismatched = []
    r0_expected = json.dumps(payload["feed"], sort_keys=True)
    if session.current_feed.canonical_json() != r0_expected:
        mismatched.append(0)
    for round_no, command_text, step_payload in expected:
        feed = engine.step(
            session,
            Command(text=command_text, round=round_no),
            satisfy_signal=step_payload.get("satisfy_signal") or None,
        )
        if feed.canonical_json() != json.dumps(step_payload["feed"], sort_keys=True):
            mismatched.append(round_no)
    return ReplayResult(
        session_id=payload["session_id"],
        rounds=len(expected),
        feeds_match=not mismatched,
        mismatched_rounds=mismatched,
    )

"""Extract training corpora for the two agents from session event logs.

Every successful (non-degraded) step yields one parsing sample, mapping
(rendered feed, command, serialized memory) to the updated memory, and
one planning sample, mapping (updated memory, tool descriptions) to the
executed chain. Prompts are versioned so exports stay comparable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .tools import tool_descriptions

TEMPLATE_VERSION = "1"

PARSER_SAMPLE_TEMPLATE = """Update the preference memory of a recommendation feed.

Feed shown to the user:
{feed}

Memory before the command (JSON):
{memory}

User command:
{command}

Return the updated memory as one JSON object."""

PLANNER_SAMPLE_TEMPLATE = """Choose the tool chain for a recommendation round.

Available tools (JSON):
{tools}

Parsed preferences (JSON):
{preferences}

Return the chain as one JSON object with ordered stages."""


@dataclass(frozen=True)
class ParserSample:
    prompt: str
    target: str
    session_id: str
    round: int

    @property
    def input_hash(self) -> str:
        return hashlib.sha256(self.prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PlannerSample:
    prompt: str
    target: str
    session_id: str
    round: int

    @property
    def input_hash(self) -> str:
        return hashlib.sha256(self.prompt.encode("utf-8")).hexdigest()


@dataclass
class CollectResult:
    parser_samples: list[ParserSample] = field(default_factory=list)
    planner_samples: list[PlannerSample] = field(default_factory=list)
    skipped_lines: int = 0
    skipped_degraded: int = 0


def parser_prompt(feed_rendered: str, command: str, memory_json: str) -> str:
    return PARSER_SAMPLE_TEMPLATE.format(
        feed=feed_rendered, memory=memory_json, command=command
    )


def planner_prompt(preferences_json: str) -> str:
    tools_json = json.dumps(tool_descriptions(), sort_keys=True)
    return PLANNER_SAMPLE_TEMPLATE.format(tools=tools_json, preferences=preferences_json)


def collect(log_paths: Iterable[str | Path]) -> CollectResult:
    """Walk event logs and build deduplicated sample lists.

    Corrupt lines are counted and skipped, never fatal. Dedup is on the
    prompt hash, first occurrence wins; files are read in sorted order so
    the result does not depend on directory listing order.
    """
    result = CollectResult()
    seen_parser: set[str] = set()
    seen_planner: set[str] = set()
    for path in sorted(Path(p) for p in log_paths):
        previous_feed_rendered: dict[str, str] = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                event = json.loads(line)
                kind = event["kind"]
                payload = event["payload"]
            except (json.JSONDecodeError, KeyError, TypeError):
                result.skipped_lines += 1
                continue
            if kind == "created":
                previous_feed_rendered[payload["session_id"]] = payload["feed_rendered"]
                continue
            if kind != "step":
                continue
            try:
                session_id = _session_for(path, payload)
                feed_before = previous_feed_rendered.get(session_id, "(empty feed)")
                if payload.get("degraded"):
                    result.skipped_degraded += 1
                    previous_feed_rendered[session_id] = payload["feed_rendered"]
                    continue
                memory_before = json.dumps(payload["memory_before"], sort_keys=True)
                memory_after = json.dumps(payload["memory_after"], sort_keys=True)
                chain = json.dumps(payload["chain"], sort_keys=True)
                round_no = int(event["round"])
                p_sample = ParserSample(
                    prompt=parser_prompt(feed_before, payload["command"], memory_before),
                    target=memory_after,
                    session_id=session_id,
                    round=round_no,
                )
                if p_sample.input_hash not in seen_parser:
                    seen_parser.add(p_sample.input_hash)
                    result.parser_samples.append(p_sample)
                t_sample = PlannerSample(
                    prompt=planner_prompt(memory_after),
                    target=chain,
                    session_id=session_id,
                    round=round_no,
                )
                if t_sample.input_hash not in seen_planner:
                    seen_planner.add(t_sample.input_hash)
                    result.planner_samples.append(t_sample)
                previous_feed_rendered[session_id] = payload["feed_rendered"]
            except (KeyError, TypeError, ValueError):
                result.skipped_lines += 1
    return result


def _session_for(path: Path, payload: dict[str, Any]) -> str:
    return payload.get("session_id") or path.stem


def export_mixed(
    parser_samples: Sequence[ParserSample],
    planner_samples: Sequence[PlannerSample],
    path: str | Path,
) -> None:
    """Write the merged corpus: header line, then hash-ordered records."""
    if not parser_samples and not planner_samples:
        raise ValueError("nothing to export")
    records = []
    for sample in parser_samples:
        records.append(
            {
                "task": "parser",
                "prompt": sample.prompt,
                "target": sample.target,
                "meta": {
                    "session_id": sample.session_id,
                    "round": sample.round,
                    "input_hash": sample.input_hash,
                },
            }
        )
    for sample in planner_samples:
        records.append(
            {
                "task": "planner",
                "prompt": sample.prompt,
                "target": sample.target,
                "meta": {
                    "session_id": sample.session_id,
                    "round": sample.round,
                    "input_hash": sample.input_hash,
                },
            }
        )
    records.sort(key=lambda r: (r["meta"]["input_hash"], r["task"]))
    digest = hashlib.sha256(
        "".join(r["meta"]["input_hash"] for r in records).encode("ascii")
    ).hexdigest()
    header = {
        "template_version": TEMPLATE_VERSION,
        "source_digest": digest,
        "parser_count": len(parser_samples),
        "planner_count": len(planner_samples),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

"""Operator CLI: serve the API, run benchmarks, export corpora, replay logs."""

from __future__ import annotations

import json
from pathlib import Path

import click

from .aia import AiaParams, AiaScorer
from .catalog import load_catalog, write_catalog
from .distill import collect, export_mixed
from .embedding import (
    DEFAULT_DIM,
    EmbeddingProviderConfig,
    build_provider,
)
from .parser import LlmParserBackend, RuleParserBackend
from .session import SessionEngine, replay_log
from .simulate import ScenarioConfig, run_scenario
from .report import write_report
from .synthetic import make_benchmark
from .tools import ToolParams


def _build_engine(
    catalog,
    log_dir=None,
    alpha: float = 0.5,
    beta: float = 1.0,
    embed_endpoint: str | None = None,
    llm_endpoint: str | None = None,
    aia_seed: int = 0,
) -> SessionEngine:
    provider_config = EmbeddingProviderConfig(
        kind="external" if embed_endpoint else "hashed",
        dim=DEFAULT_DIM,
        endpoint=embed_endpoint,
    )
    provider = build_provider(provider_config)
    if llm_endpoint:
        backend = LlmParserBackend(catalog, endpoint=llm_endpoint)
    else:
        backend = RuleParserBackend(catalog)
    aia = AiaScorer(
        catalog,
        provider,
        AiaParams.seeded(text_dim=provider.dim, image_dim=catalog.image_dim, seed=aia_seed),
    )
    return SessionEngine(
        catalog=catalog,
        provider=provider,
        parser_backend=backend,
        params=ToolParams(alpha=alpha, beta=beta),
        aia=aia,
        log_dir=log_dir,
    )


@click.group()
def main() -> None:
    """Interactive recommendation feed engine."""


@main.command()
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--log-dir", type=click.Path(), default=None, help="Session event log directory.")
@click.option("--alpha", default=0.5, show_default=True, envvar="RECFEED_ALPHA")
@click.option("--beta", default=1.0, show_default=True, envvar="RECFEED_BETA")
@click.option("--embed-endpoint", default=None, envvar="RECFEED_EMBED_ENDPOINT")
@click.option("--llm-endpoint", default=None, envvar="RECFEED_LLM_ENDPOINT")
def serve(catalog_path, port, host, log_dir, alpha, beta, embed_endpoint, llm_endpoint) -> None:
    """Serve the session API over HTTP."""
    import uvicorn

    from .service import create_app

    catalog = load_catalog(catalog_path)
    engine = _build_engine(
        catalog,
        log_dir=log_dir,
        alpha=alpha,
        beta=beta,
        embed_endpoint=embed_endpoint,
        llm_endpoint=llm_endpoint,
    )
    app = create_app(engine)
    click.echo(f"serving catalog of {len(catalog)} items on {host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--mode", type=click.Choice(["sr", "mr", "mrid"]), default="mr", show_default=True)
@click.option("--users", default=100, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None,
              help="Catalog file; omitted means the built-in synthetic benchmark.")
@click.option("--report-out", type=click.Path(), required=True)
@click.option("--variant", type=click.Choice(["full", "semantic_only", "random"]),
              default="full", show_default=True)
@click.option("--ranking-mode", type=click.Choice(["full", "feed"]), default="full",
              show_default=True)
@click.option("--k", default=5, show_default=True)
@click.option("--t-max", default=5, show_default=True)
@click.option("--alpha", default=0.5, show_default=True, envvar="RECFEED_ALPHA")
@click.option("--beta", default=1.0, show_default=True, envvar="RECFEED_BETA")
def bench(mode, users, seed, catalog_path, report_out, variant, ranking_mode, k, t_max,
          alpha, beta) -> None:
    """Run an offline scenario benchmark and write the report bundle."""
    sim_users = None
    if catalog_path:
        catalog = load_catalog(catalog_path)
    else:
        catalog, sim_users = make_benchmark(users=users, seed=seed)
    engine = _build_engine(catalog, alpha=alpha, beta=beta, aia_seed=seed)
    config = ScenarioConfig(
        mode=mode.upper(),
        users=users,
        seed=seed,
        variant=variant,
        ranking_mode=ranking_mode,
        k=k,
        t_max=t_max,
    )
    if sim_users is not None:
        sim_users = sim_users[:users]
    report = run_scenario(config, engine, users=sim_users)
    paths = write_report(report, report_out)
    click.echo(f"mode={config.mode} users={len(report.traces)} variant={variant}")
    click.echo(f"pass_rate={report.pass_rate:.4f} avg_rounds={report.avg_rounds:.4f}")
    for n in sorted(report.recall):
        click.echo(
            f"recall@{n}={report.recall[n]:.4f} ndcg@{n}={report.ndcg[n]:.4f} "
            f"csr@{n}={report.csr[n]:.4f}"
        )
    click.echo(f"report written to {paths['report']}")


@main.command()
@click.option("--logs", required=True, type=click.Path(exists=True),
              help="Event log file or directory of .log files.")
@click.option("--out", required=True, type=click.Path())
def distill(logs, out) -> None:
    """Export the mixed training corpus from session event logs."""
    logs_path = Path(logs)
    paths = sorted(logs_path.glob("*.log")) if logs_path.is_dir() else [logs_path]
    result = collect(paths)
    export_mixed(result.parser_samples, result.planner_samples, out)
    click.echo(
        f"exported {len(result.parser_samples)} parser + "
        f"{len(result.planner_samples)} planner samples to {out} "
        f"(skipped {result.skipped_lines} corrupt lines, "
        f"{result.skipped_degraded} degraded steps)"
    )


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--alpha", default=0.5, show_default=True, envvar="RECFEED_ALPHA")
@click.option("--beta", default=1.0, show_default=True, envvar="RECFEED_BETA")
def replay(log_path, catalog_path, alpha, beta) -> None:
    """Re-run a logged session and verify the feeds reproduce exactly."""
    catalog = load_catalog(catalog_path)
    engine = _build_engine(catalog, alpha=alpha, beta=beta)
    result = replay_log(log_path, engine)
    click.echo(
        f"session {result.session_id}: {result.rounds} rounds, "
        f"feeds_match={result.feeds_match}"
    )
    if not result.feeds_match:
        click.echo(f"mismatched rounds: {result.mismatched_rounds}")
        raise SystemExit(1)


@main.command("make-catalog")
@click.option("--out", required=True, type=click.Path())
@click.option("--size", default=2000, show_default=True)
@click.option("--seed", default=7, show_default=True)
def make_catalog(out, size, seed) -> None:
    """Write the synthetic benchmark catalog to a file."""
    targets = min(200, max(1, size // 2))
    catalog, _ = make_benchmark(users=targets, catalog_size=size, seed=seed)
    write_catalog(catalog, out)
    click.echo(f"wrote {len(catalog)} items to {out}")


if __name__ == "__main__":
    main()

"""Interactive recommendation feed engine.

Users steer a feed with free-form commands; a parsing agent turns each
command into a structured preference state and a planning agent chains
filtering, matching, attenuation, and aggregation tools over the catalog
to produce the next feed.
"""

from .catalog import (
    Catalog,
    CatalogError,
    Command,
    Feed,
    Item,
    Quantity,
    UserHistory,
    load_catalog,
    render_item_text,
    write_catalog,
)
from .embedding import (
    EmbeddingProviderConfig,
    ExternalEmbeddingProvider,
    HashedEmbeddingProvider,
    build_provider,
    cosine_sim,
)
from .preferences import Constraint, FeedbackClass, PreferenceError, PreferenceState
from .grammar import CommandGrammar, Extraction, GRAMMAR_VERSION
from .parser import (
    LlmParserBackend,
    ParseResult,
    RuleParserBackend,
    classify_feedback,
    consolidate,
    extract_signals,
    parse_command,
)
from .aia import AiaParams, AiaScorer, aia_score
from .tools import (
    ScoreBreakdown,
    ToolParams,
    aggregate,
    attenuate,
    filter_items,
    format_intent,
    match_score,
    semantic_score,
    tool_descriptions,
)
from .planner import PlanTrace, ToolChain, execute_chain, select_tools
from .session import Session, SessionConfig, SessionEngine, replay_log
from .metrics import avg_rounds, csr_at, ndcg_at, pass_rate, recall_at
from .simulate import (
    BenchmarkReport,
    Persona,
    ScenarioConfig,
    SimUser,
    UserSimulator,
    run_scenario,
    simulate_feedback,
)
from .synthetic import make_benchmark
from .distill import collect, export_mixed

__version__ = "0.1.0"

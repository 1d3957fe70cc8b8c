import type {
  FeedItem,
  PreferencesView,
  ScoreBreakdown,
  SessionView,
  TraceView,
} from "../src/types.js";

export function scores(partial: Partial<ScoreBreakdown> = {}): ScoreBreakdown {
  return {
    s_sem: 0,
    s_aia: 0,
    s_match: 0,
    s_atten: 0,
    s_final: 0,
    filtered_out: false,
    sem_skipped: true,
    aia_skipped: true,
    ...partial,
  };
}

export function feedItem(id: string, partial: Partial<FeedItem> = {}): FeedItem {
  return {
    item_id: id,
    title: `Title ${id}`,
    price: 20,
    attributes: { category: ["mystery"] },
    scores: scores(),
    ...partial,
  };
}

export function emptyPreferences(): PreferencesView {
  return {
    positive_hard: [],
    positive_soft: [],
    negative_hard: [],
    negative_soft: [],
    free_text_positive: [],
    free_text_negative: [],
  };
}

export function trace(partial: Partial<TraceView> = {}): TraceView {
  return {
    chain: { stages: [["DefaultRanker"]], rationales: ["no signals"] },
    pool_before: 10,
    pool_after: 10,
    fallback: false,
    dropped_constraints: [],
    used_exclusions_only: false,
    empty_after_fallback: false,
    warnings: [],
    ...partial,
  };
}

export function sessionView(partial: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "s-1",
    user_id: "u-1",
    round: 0,
    status: "active",
    k: 5,
    t_max: 5,
    feed: [feedItem("a"), feedItem("b")],
    preferences: emptyPreferences(),
    trace: trace(),
    fallback: false,
    ...partial,
  };
}

export interface Scripted {
  status: number;
  body: unknown;
  delayMs?: number;
}

/** fetch stub fed by a queue of scripted responses; records every call. */
export function scriptedFetch(queue: Scripted[]) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const next = queue.shift();
    if (!next) throw new Error(`unscripted fetch: ${url}`);
    if (next.delayMs) {
      await new Promise((resolve) => setTimeout(resolve, next.delayMs));
    }
    return new Response(JSON.stringify(next.body), {
      status: next.status,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetchFn, calls };
}

/** Mirrors of the session API payloads. The UI renders these verbatim and
 * never computes scores or rankings on its own. */

export interface ScoreBreakdown {
  s_sem: number;
  s_aia: number;
  s_match: number;
  s_atten: number;
  s_final: number;
  filtered_out: boolean;
  sem_skipped: boolean;
  aia_skipped: boolean;
}

export type AttributeValue = string | number | boolean;

export interface FeedItem {
  item_id: string;
  title: string;
  price: number | null;
  attributes: Record<string, AttributeValue[]>;
  scores: ScoreBreakdown;
}

export interface ConstraintView {
  attribute: string;
  op: string;
  values: AttributeValue[];
  strictness: "hard" | "soft";
  polarity: "positive" | "negative";
  source_round: number;
}

export interface PreferencesView {
  positive_hard: ConstraintView[];
  positive_soft: ConstraintView[];
  negative_hard: ConstraintView[];
  negative_soft: ConstraintView[];
  free_text_positive: string[];
  free_text_negative: string[];
}

export interface ChainView {
  stages: string[][];
  rationales: string[];
}

export interface TraceView {
  chain: ChainView;
  pool_before: number;
  pool_after: number;
  fallback: boolean;
  dropped_constraints: ConstraintView[];
  used_exclusions_only: boolean;
  empty_after_fallback: boolean;
  warnings: string[];
}

export type SessionStatus = "active" | "satisfied" | "exhausted";

export interface SessionView {
  session_id: string;
  user_id: string;
  round: number;
  status: SessionStatus;
  k: number;
  t_max: number;
  feed: FeedItem[];
  preferences: PreferencesView;
  trace: TraceView | null;
  fallback: boolean;
}

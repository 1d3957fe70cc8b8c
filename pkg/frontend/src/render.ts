import type { UiState } from "./model.js";
import type {
  ConstraintView,
  FeedItem,
  SessionView,
  TraceView,
} from "./types.js";

/** Pure HTML renderers. Every number shown here is a server field; the
 * feed keeps the exact server order. */

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function formatValue(value: string | number | boolean): string {
  if (typeof value === "number") return String(value);
  if (typeof value === "boolean") return value ? "true" : "false";
  return value;
}

export function renderBanners(state: UiState): string {
  const parts: string[] = [];
  if (state.endedBanner && state.view) {
    parts.push(
      `<div class="banner banner-ended" data-testid="ended-banner">` +
        `Session ended (${escapeHtml(state.view.status)}). Start a new one to continue.</div>`,
    );
  }
  const trace = state.view?.trace;
  if (trace && trace.fallback) {
    const dropped = trace.dropped_constraints
      .map((c) => escapeHtml(c.attribute))
      .join(", ");
    const detail = trace.empty_after_fallback
      ? "nothing matches your exclusions"
      : dropped
        ? `relaxed: ${dropped}`
        : "exclusions only";
    parts.push(
      `<div class="banner banner-relaxed" data-testid="relaxation-banner">` +
        `Some requirements could not all be met (${detail}).</div>`,
    );
  }
  if (state.errorToast) {
    parts.push(
      `<div class="banner banner-error" data-testid="error-toast">` +
        `${escapeHtml(state.errorToast)} <button data-action="retry">retry</button></div>`,
    );
  }
  if (state.stale) {
    parts.push(
      `<div class="banner banner-stale" data-testid="stale-banner">Showing stale data.</div>`,
    );
  }
  return parts.join("");
}

function renderScores(item: FeedItem): string {
  const s = item.scores;
  const rows: Array<[string, string]> = [
    ["semantic", s.sem_skipped ? "skipped" : s.s_sem.toFixed(4)],
    ["collaborative", s.aia_skipped ? "skipped" : s.s_aia.toFixed(4)],
    ["match", s.s_match.toFixed(4)],
    ["attenuation", s.s_atten.toFixed(4)],
    ["final", s.s_final.toFixed(4)],
  ];
  const body = rows
    .map(([k, v]) => `<tr><td>${k}</td><td>${v}</td></tr>`)
    .join("");
  return `<details class="scores"><summary>scores</summary><table>${body}</table></details>`;
}

function renderCard(item: FeedItem, position: number): string {
  const price = item.price === null ? "" : `<span class="price">${item.price}</span>`;
  const attrs = Object.entries(item.attributes)
    .map(
      ([key, values]) =>
        `<li>${escapeHtml(key)}: ${escapeHtml(values.map(formatValue).join(", "))}</li>`,
    )
    .join("");
  return (
    `<article class="card" data-position="${position}" data-item-id="${escapeHtml(item.item_id)}">` +
    `<header><span class="position">#${position}</span>` +
    `<h3>${escapeHtml(item.title)}</h3>${price}</header>` +
    `<ul class="attrs">${attrs}</ul>` +
    renderScores(item) +
    `<button class="deictic" data-action="deictic" data-position="${position}">more like this</button>` +
    `</article>`
  );
}

export function renderFeed(state: UiState): string {
  const view = state.view;
  if (!view) {
    return `<div class="empty" data-testid="empty-feed">No session yet.</div>`;
  }
  if (view.feed.length === 0) {
    return `<div class="empty" data-testid="empty-feed">Nothing matches right now.</div>`;
  }
  const cards = view.feed.map((item, index) => renderCard(item, index + 1)).join("");
  return `<div class="grid" data-testid="feed-grid">${cards}</div>`;
}

const BUCKETS: Array<[keyof SessionView["preferences"], string]> = [
  ["positive_hard", "require"],
  ["positive_soft", "prefer"],
  ["negative_hard", "exclude"],
  ["negative_soft", "avoid"],
];

export function constraintChip(constraint: ConstraintView): string {
  const values = constraint.values.map(formatValue).join(", ");
  return `${constraint.attribute} ${constraint.op} ${values}`;
}

export function renderPreferences(view: SessionView | null): string {
  if (!view) return "";
  const sections = BUCKETS.map(([bucket, label]) => {
    const chips = view.preferences[bucket] as ConstraintView[];
    const rendered = chips
      .map(
        (c) =>
          `<span class="chip chip-${bucket}" data-bucket="${bucket}">` +
          `${escapeHtml(constraintChip(c))}</span>`,
      )
      .join("");
    return (
      `<section class="bucket" data-testid="bucket-${bucket}">` +
      `<h4>${label}</h4>${rendered || '<span class="none">none</span>'}</section>`
    );
  });
  const freeText = [
    ...view.preferences.free_text_positive.map(
      (p) => `<span class="chip chip-hint">+ ${escapeHtml(p)}</span>`,
    ),
    ...view.preferences.free_text_negative.map(
      (p) => `<span class="chip chip-hint">- ${escapeHtml(p)}</span>`,
    ),
  ].join("");
  const hints = freeText
    ? `<section class="bucket" data-testid="bucket-hints"><h4>hints</h4>${freeText}</section>`
    : "";
  return `<div class="preferences">${sections.join("")}${hints}</div>`;
}

export function renderTrace(trace: TraceView | null): string {
  if (!trace) return "";
  const rows = trace.chain.stages
    .map((group, index) => {
      const tools = group
        .map((tool) => `<span class="tool">${escapeHtml(tool)}</span>`)
        .join("");
      const rationale = trace.chain.rationales[index] ?? "";
      return (
        `<li class="stage" data-testid="stage-row">` +
        `${tools}<span class="why">${escapeHtml(rationale)}</span></li>`
      );
    })
    .join("");
  const pool = `<div class="pool">pool ${trace.pool_before} &rarr; ${trace.pool_after}</div>`;
  return `<ol class="chain" data-testid="chain">${rows}</ol>${pool}`;
}

export function renderStatus(state: UiState): string {
  const view = state.view;
  if (!view) return "";
  const latency =
    state.lastLatencyMs === null ? "" : ` &middot; ${Math.round(state.lastLatencyMs)} ms`;
  return (
    `<div class="status" data-testid="status">round ${view.round}/${view.t_max}` +
    ` &middot; ${escapeHtml(view.status)}${latency}</div>`
  );
}

/** Whole-app render; main.ts re-renders on every model update. */
export function renderApp(state: UiState): string {
  const disabled = !state.view || state.view.status !== "active" || state.inFlight;
  const submitDisabled = disabled || state.pendingCommand.trim().length === 0;
  return `
  <div class="layout">
    ${renderBanners(state)}
    ${renderStatus(state)}
    <div class="columns">
      <main>
        ${renderFeed(state)}
      </main>
      <aside>
        <h3>Preferences</h3>
        ${renderPreferences(state.view)}
        <h3>Tool chain</h3>
        ${renderTrace(state.view?.trace ?? null)}
      </aside>
    </div>
    <footer class="composer">
      <input type="text" id="command" placeholder="e.g. under $50, no floral"
             value="${escapeHtml(state.pendingCommand)}"
             ${state.inFlight ? "disabled" : ""} />
      <button data-action="submit" ${submitDisabled ? "disabled" : ""}>send</button>
      <button data-action="satisfied" ${disabled ? "disabled" : ""}>satisfied</button>
    </footer>
  </div>`;
}

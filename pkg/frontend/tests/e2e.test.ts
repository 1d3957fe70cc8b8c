/** End-to-end: drive a real server through the client, model, and renderers.
 *
 * Spawns `recfeed serve` on a seeded synthetic catalog, so the Python
 * package must be installed. Everything asserted on screen is compared
 * against the API's own state.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionModel } from "../src/model.js";
import { renderApp, renderBanners, renderFeed, renderPreferences, constraintChip } from "../src/render.js";

const PORT = 8787;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;

async function waitForHealth(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("server did not become healthy in time");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "recfeed-ui-e2e-"));
  const catalog = join(dir, "catalog.jsonl");
  const made = spawnSync(
    "python3",
    ["-m", "recfeed.cli", "make-catalog", "--out", catalog, "--size", "300", "--seed", "7"],
    { encoding: "utf-8" },
  );
  if (made.status !== 0) {
    throw new Error(`make-catalog failed: ${made.stderr}`);
  }
  server = spawn(
    "python3",
    ["-m", "recfeed.cli", "serve", "--catalog", catalog, "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForHealth(60000);
});

afterAll(() => {
  server?.kill();
});

describe("live session through the UI stack", () => {
  it("filters the visible feed on 'under 50' or shows the relaxation banner", async () => {
    const model = new SessionModel(new ApiClient(BASE));
    await model.start("e2e-user");
    expect(model.getState().view?.round).toBe(0);

    model.setPendingCommand("under 50");
    await model.submitCommand();
    const state = model.getState();
    expect(state.view?.round).toBe(1);

    const banner = renderBanners(state);
    const relaxed = banner.includes("relaxation-banner");
    const prices = (state.view?.feed ?? []).map((item) => item.price);
    if (!relaxed) {
      expect(prices.length).toBeGreaterThan(0);
      for (const price of prices) {
        expect(price).not.toBeNull();
        expect(price as number).toBeLessThan(50);
      }
    }
    // The rendered cards show exactly the server's feed, in order.
    const html = renderFeed(state);
    for (const item of state.view?.feed ?? []) {
      expect(html).toContain(`data-item-id="${item.item_id}"`);
    }
  });

  it("preference chips equal the GET state buckets", async () => {
    const api = new ApiClient(BASE);
    const model = new SessionModel(api);
    await model.start("e2e-chips");
    model.setPendingCommand("want category: mystery, under 40");
    await model.submitCommand();

    const view = model.getState().view;
    expect(view).not.toBeNull();
    const fresh = await api.getSession(view!.session_id);
    expect(fresh.preferences).toEqual(view!.preferences);

    const html = renderPreferences(view);
    const buckets = [
      "positive_hard",
      "positive_soft",
      "negative_hard",
      "negative_soft",
    ] as const;
    for (const bucket of buckets) {
      for (const constraint of fresh.preferences[bucket]) {
        expect(html).toContain(constraintChip(constraint));
      }
    }
    expect(fresh.preferences.positive_hard.length).toBe(2);
  });

  it("the satisfied button terminates the session in the UI and on the server", async () => {
    const api = new ApiClient(BASE);
    const model = new SessionModel(api);
    await model.start("e2e-satisfied");
    await model.markSatisfied();

    const state = model.getState();
    expect(state.view?.status).toBe("satisfied");
    expect(state.endedBanner).toBe(true);
    expect(renderBanners(state)).toContain("ended-banner");
    expect(renderApp(state)).toContain('data-action="satisfied" disabled');

    await expect(
      api.postCommand(state.view!.session_id, "one more"),
    ).rejects.toMatchObject({ status: 409 });
  });
});

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionModel } from "../src/model.js";
import { scriptedFetch, sessionView } from "./helpers.js";

function modelWith(queue: Parameters<typeof scriptedFetch>[0]) {
  const { fetchFn, calls } = scriptedFetch(queue);
  const model = new SessionModel(new ApiClient("http://test", fetchFn));
  return { model, calls };
}

describe("SessionModel.start", () => {
  it("loads the opening view", async () => {
    const { model } = modelWith([{ status: 201, body: sessionView() }]);
    await model.start("u-1");
    expect(model.getState().view?.round).toBe(0);
    expect(model.getState().inFlight).toBe(false);
  });

  it("surfaces a toast when creation fails", async () => {
    const { model } = modelWith([{ status: 400, body: { detail: "bad history" } }]);
    await model.start("u-1");
    expect(model.getState().view).toBeNull();
    expect(model.getState().errorToast).toContain("bad history");
  });
});

describe("SessionModel.submitCommand", () => {
  it("refuses empty input", async () => {
    const { model, calls } = modelWith([{ status: 201, body: sessionView() }]);
    await model.start("u-1");
    model.setPendingCommand("   ");
    expect(model.canSubmit()).toBe(false);
    await model.submitCommand();
    expect(calls.length).toBe(1); // only the create call went out
  });

  it("disables input while a request is in flight", async () => {
    const next = sessionView({ round: 1 });
    const { model } = modelWith([
      { status: 201, body: sessionView() },
      { status: 200, body: next, delayMs: 20 },
    ]);
    await model.start("u-1");
    model.setPendingCommand("under 50");
    const pending = model.submitCommand();
    expect(model.getState().inFlight).toBe(true);
    expect(model.canSubmit()).toBe(false);
    await pending;
    expect(model.getState().inFlight).toBe(false);
  });

  it("swaps feed, preferences, and trace atomically and clears the box", async () => {
    const next = sessionView({
      round: 1,
      feed: [],
      preferences: {
        ...sessionView().preferences,
        positive_hard: [
          {
            attribute: "price",
            op: "less_than",
            values: [50],
            strictness: "hard",
            polarity: "positive",
            source_round: 1,
          },
        ],
      },
    });
    const { model } = modelWith([
      { status: 201, body: sessionView() },
      { status: 200, body: next },
    ]);
    await model.start("u-1");
    model.setPendingCommand("under 50");
    await model.submitCommand();
    const state = model.getState();
    expect(state.view?.round).toBe(1);
    expect(state.view?.preferences.positive_hard.length).toBe(1);
    expect(state.pendingCommand).toBe("");
    expect(state.lastLatencyMs).not.toBeNull();
  });

  it("shows the ended banner on 409 and refreshes", async () => {
    const terminal = sessionView({ round: 2, status: "satisfied" });
    const { model } = modelWith([
      { status: 201, body: sessionView() },
      { status: 409, body: { detail: "session is satisfied" } },
      { status: 200, body: terminal },
    ]);
    await model.start("u-1");
    model.setPendingCommand("more");
    await model.submitCommand();
    const state = model.getState();
    expect(state.endedBanner).toBe(true);
    expect(state.view?.status).toBe("satisfied");
  });

  it("keeps the previous view untouched on 502", async () => {
    const opening = sessionView();
    const { model } = modelWith([
      { status: 201, body: opening },
      { status: 502, body: { detail: "embedding endpoint down" } },
    ]);
    await model.start("u-1");
    const before = model.getState().view;
    model.setPendingCommand("under 50");
    await model.submitCommand();
    const state = model.getState();
    expect(state.view).toEqual(before);
    expect(state.errorToast).toContain("embedding endpoint down");
    expect(state.endedBanner).toBe(false);
  });

  it("marks a session ended when the step itself terminates it", async () => {
    const { model } = modelWith([
      { status: 201, body: sessionView() },
      { status: 200, body: sessionView({ round: 5, status: "exhausted" }) },
    ]);
    await model.start("u-1");
    model.setPendingCommand("anything");
    await model.submitCommand();
    expect(model.getState().endedBanner).toBe(true);
  });
});

describe("SessionModel.markSatisfied", () => {
  it("sends the satisfied flag", async () => {
    const { model, calls } = modelWith([
      { status: 201, body: sessionView() },
      { status: 200, body: sessionView({ status: "satisfied", round: 1 }) },
    ]);
    await model.start("u-1");
    await model.markSatisfied();
    const body = JSON.parse(String(calls[1]?.init?.body));
    expect(body.satisfied).toBe(true);
    expect(body.text.length).toBeGreaterThan(0);
    expect(model.getState().view?.status).toBe("satisfied");
    expect(model.getState().endedBanner).toBe(true);
  });

  it("does nothing on a terminal session", async () => {
    const { model, calls } = modelWith([
      { status: 201, body: sessionView({ status: "exhausted" }) },
    ]);
    await model.start("u-1");
    await model.markSatisfied();
    expect(calls.length).toBe(1);
  });
});

describe("deictic helper", () => {
  it("inserts the grammar phrase for a clicked card", async () => {
    const { model } = modelWith([{ status: 201, body: sessionView() }]);
    await model.start("u-1");
    model.insertDeictic(2);
    expect(model.getState().pendingCommand).toBe("like the #2 one");
    model.insertDeictic(1);
    expect(model.getState().pendingCommand).toBe("like the #2 one, like the #1 one");
  });
});

describe("SessionModel.refresh", () => {
  it("marks data stale when the read fails", async () => {
    const { model } = modelWith([
      { status: 201, body: sessionView() },
      { status: 500, body: { detail: "boom" } },
    ]);
    await model.start("u-1");
    await model.refresh();
    expect(model.getState().stale).toBe(true);
    expect(model.getState().view).not.toBeNull();
  });
});

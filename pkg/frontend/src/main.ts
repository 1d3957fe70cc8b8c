import { ApiClient } from "./api.js";
import { SessionModel } from "./model.js";
import { renderApp } from "./render.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8000";
const userId = params.get("user") ?? "browser";

const model = new SessionModel(new ApiClient(baseUrl));
const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

function redraw(): void {
  const state = model.getState();
  const active = document.activeElement;
  const hadFocus = active instanceof HTMLInputElement && active.id === "command";
  root!.innerHTML = renderApp(state);
  if (hadFocus) {
    const input = document.getElementById("command") as HTMLInputElement | null;
    if (input) {
      input.focus();
      input.setSelectionRange(input.value.length, input.value.length);
    }
  }
}

model.subscribe(redraw);

root.addEventListener("click", (event) => {
  const target = event.target as HTMLElement | null;
  const action = target?.dataset.action;
  if (action === "submit") void model.submitCommand();
  if (action === "satisfied") void model.markSatisfied();
  if (action === "retry") void model.refresh();
  if (action === "deictic") {
    const position = Number(target?.dataset.position ?? "0");
    if (position > 0) model.insertDeictic(position);
  }
});

root.addEventListener("input", (event) => {
  const target = event.target as HTMLInputElement | null;
  if (target?.id === "command") model.setPendingCommand(target.value);
});

root.addEventListener("keydown", (event) => {
  const target = event.target as HTMLElement | null;
  if (target instanceof HTMLInputElement && target.id === "command" && event.key === "Enter") {
    void model.submitCommand();
  }
});

redraw();
void model.start(userId);

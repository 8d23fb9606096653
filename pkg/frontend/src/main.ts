// Bootstrap: attach to an existing session (?session=<id>) or create one
// from the setup form, then run the answer/refresh loop.

import { SessionApi } from "./api.js";
import { renderApp } from "./render.js";
import { SessionController } from "./session.js";

const api = new SessionApi("");

function mountSession(sessionId: string): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const controller = new SessionController(api, sessionId);
  controller.onChange((view) => {
    root.innerHTML = renderApp(view);
    document.getElementById("btn-must")?.addEventListener("click", () => {
      void controller.answer("must");
    });
    document.getElementById("btn-cannot")?.addEventListener("click", () => {
      void controller.answer("cannot");
    });
  });
  void controller.refresh();
}

function mountSetupForm(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  root.innerHTML = `<div class="setup">
    <h2>Start a session</h2>
    <p>Paste a session config (JSON, same fields as the CLI config file):</p>
    <textarea id="cfg" rows="8">{
  "data": "wine.csv",
  "n_c": 3,
  "query_budget": 100,
  "seed": 0
}</textarea>
    <button id="btn-create">Create</button>
    <p id="setup-error" class="error"></p>
  </div>`;
  document.getElementById("btn-create")?.addEventListener("click", () => {
    const box = document.getElementById("cfg") as HTMLTextAreaElement;
    const errBox = document.getElementById("setup-error");
    void (async () => {
      try {
        const id = await api.createSession(JSON.parse(box.value));
        window.location.search = `?session=${id}`;
      } catch (err) {
        if (errBox) {
          errBox.textContent = String(err);
        }
      }
    })();
  });
}

const params = new URLSearchParams(window.location.search);
const sessionId = params.get("session");
if (sessionId) {
  mountSession(sessionId);
} else {
  mountSetupForm();
}

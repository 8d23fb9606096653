// Pure view -> HTML string rendering, kept DOM-free so it is testable in node.

import { SampleMeta } from "./api.js";
import { sparklineSvg } from "./sparkline.js";
import { UiSessionView } from "./session.js";

function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function sampleCard(meta: SampleMeta): string {
  const body = meta.image
    ? `<img src="${escapeHtml(meta.image)}" alt="sample ${meta.id}">`
    : meta.features && meta.features.length
      ? sparklineSvg(meta.features)
      : `<span class="no-meta">no preview</span>`;
  return `<div class="sample-card" data-sample="${meta.id}">
    <div class="sample-id">#${meta.id}</div>
    ${body}
  </div>`;
}

export function renderQueryPanel(view: UiSessionView): string {
  if (view.status === "finished") {
    return `<div class="query-panel finished">
      <h2>Session finished</h2>
      <p>${view.queriesUsed} questions answered; final cluster count ${view.nC}.</p>
    </div>`;
  }
  if (view.status === "processing" || view.status === "loading" || !view.pair) {
    return `<div class="query-panel"><p class="waiting">waiting for the engine…</p></div>`;
  }
  const [i, j] = view.pair;
  const disabled = view.submitting ? "disabled" : "";
  return `<div class="query-panel" data-pair="${i},${j}">
    <h2>Do these two belong together?</h2>
    <div class="pair">${view.sampleMeta.map(sampleCard).join("")}</div>
    <div class="actions">
      <button id="btn-must" ${disabled}>Must-link</button>
      <button id="btn-cannot" ${disabled}>Cannot-link</button>
    </div>
    <p class="progress">question ${view.queriesUsed + 1}, budget ${view.budget}</p>
  </div>`;
}

export function renderClusterView(view: UiSessionView): string {
  const sets = view.certainSets
    .map((members, idx) =>
      `<li><span class="set-name">Z${idx + 1}</span> {${members.join(", ")}}</li>`)
    .join("");
  const clusters = view.clusters
    .map((members, idx) =>
      `<li><span class="set-name">cluster ${idx}</span> ${members.length} samples</li>`)
    .join("");
  const metrics = view.metrics
    ? `<p class="metrics">JCC ${view.metrics.jcc.toFixed(3)} · ` +
      `V ${view.metrics.v_measure.toFixed(3)}</p>`
    : "";
  return `<div class="cluster-view">
    <h2>Clustering (n_c = <span id="nc">${view.nC}</span>)</h2>
    ${metrics}
    <h3>Certain sets (${view.certainSets.length})</h3>
    <ul class="certain-sets">${sets}</ul>
    <h3>Current clusters</h3>
    <ul class="clusters">${clusters}</ul>
  </div>`;
}

export function renderBanner(view: UiSessionView): string {
  return view.error
    ? `<div class="banner error">${escapeHtml(view.error)}</div>`
    : "";
}

export function renderApp(view: UiSessionView): string {
  return `${renderBanner(view)}
  <div class="columns">
    ${renderQueryPanel(view)}
    ${renderClusterView(view)}
  </div>`;
}

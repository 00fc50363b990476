// Build with:
//   cargo build --release --target wasm32-unknown-unknown -p review-insight-wasm-demo
//   wasm-bindgen --target web --out-dir crates/wasm-demo/www/pkg \
//     target/wasm32-unknown-unknown/release/review_insight_wasm_demo.wasm
import init, { models, pack, rank, simulate_rate_limit } from "./pkg/review_insight_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function escapeHtml(s) {
  return String(s).replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]);
}

function showError(el, out) {
  el.innerHTML = `<p class="err">${escapeHtml(out.error)}: ${escapeHtml(out.message)}</p>`;
}

function runPack() {
  const out = JSON.parse(pack($("pack-model").value, num("pack-count"), num("pack-chars"), BigInt(num("pack-overhead"))));
  const el = $("pack-out");
  if (out.error) return showError(el, out);
  const pct = (100 * out.total_tokens) / out.prompt_window;
  el.innerHTML = `
    <p><strong>${out.selected}</strong> reviews fit, <strong>${out.dropped}</strong> dropped.
    ${out.tokens_per_review} tokens per review, ${out.total_tokens} of ${out.available_tokens} available tokens used
    (window ${out.prompt_window}).</p>
    <div class="bar" style="width:${Math.min(pct, 100)}%"></div>`;
}

function runRank() {
  const q = $("rank-q").value;
  const el = $("rank-out");
  if (!q.trim()) {
    el.innerHTML = "";
    return;
  }
  const out = JSON.parse(rank(q, BigInt(num("rank-window")), 8));
  if (out.error) return showError(el, out);
  const rows = out.hits
    .map((h) => `<tr><td>${h.score.toFixed(3)}</td><td>${escapeHtml(h.date)}</td><td>${escapeHtml(h.snippet)}…</td></tr>`)
    .join("");
  el.innerHTML = `
    ${out.insufficient_evidence ? '<p class="warn">No review mentions these words; an answer would carry the not-enough-information notice.</p>' : ""}
    <p>${out.selected} of ${out.corpus_reviews} reviews fit the window (${out.total_tokens} tokens).</p>
    <table><tr><th>Score</th><th>Date</th><th>Review</th></tr>${rows}</table>`;
}

function runRateLimit() {
  const out = JSON.parse(simulate_rate_limit(num("rl-count"), num("rl-spacing"), BigInt(num("rl-tokens")), num("rl-rpm")));
  $("rl-out").innerHTML = `<p><strong>${out.granted}</strong> granted, <strong>${out.denied}</strong> refused.</p>`;
  $("timeline").innerHTML = out.events
    .map((e) => {
      const denied = e.permit.outcome !== "granted";
      let title = `t=${e.at_s.toFixed(1)}s ${e.permit.outcome}`;
      if (e.permit.wait) title += ` (retry in ${(e.permit.wait.secs + e.permit.wait.nanos / 1e9).toFixed(1)}s)`;
      return `<span class="${denied ? "denied" : ""}" title="${title}"></span>`;
    })
    .join("");
}

await init();
for (const m of JSON.parse(models())) {
  const opt = new Option(`${m.display_name} (${m.prompt_window.toLocaleString()} tokens)`, m.model_id);
  $("pack-model").add(opt);
}
for (const id of ["pack-model", "pack-count", "pack-chars", "pack-overhead"]) $(id).addEventListener("input", runPack);
for (const id of ["rank-q", "rank-window"]) $(id).addEventListener("input", runRank);
for (const id of ["rl-count", "rl-spacing", "rl-tokens", "rl-rpm"]) $(id).addEventListener("input", runRateLimit);
runPack();
runRank();
runRateLimit();

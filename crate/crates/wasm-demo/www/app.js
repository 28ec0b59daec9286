import init, { redact, fim, similarity } from "./pkg/curator_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function esc(s) {
  return s.replace(/[&<>]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;" })[c]);
}

function runRedact() {
  const r = JSON.parse(redact($("pii-in").value, $("pii-kind").value, num("pii-seed")));
  if (r.error) {
    $("pii-out").textContent = r.error;
    return;
  }
  $("pii-out").textContent = r.redacted;
  $("pii-spans").textContent = r.spans
    .map((s) => `${s.kind.padEnd(10)} [${s.start}, ${s.end})  ${s.matched_text}`)
    .join("\n") || "no spans";
}

function runFim() {
  const r = JSON.parse(
    fim($("fim-in").value, num("fim-rate"), num("fim-psm"), $("fim-reordered").checked, num("fim-seed")),
  );
  if (r.error) {
    $("fim-out").textContent = r.error;
    $("fim-parts").innerHTML = "";
    return;
  }
  const note = r.fallback ? ` (fallback: ${r.fallback})` : "";
  $("fim-parts").innerHTML =
    `<p>mode <b>${r.mode}</b>${note}</p>` +
    `<pre><span class="pre">${esc(r.prefix)}</span><span class="mid">${esc(r.middle)}</span>` +
    `<span class="suf">${esc(r.suffix)}</span></pre>`;
  $("fim-out").textContent = r.serialized;
}

function drawCurve(canvas, r) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 28;
  const x = (s) => pad + s * (w - 2 * pad);
  const y = (p) => h - pad - p * (h - 2 * pad);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText("Jaccard", w / 2 - 18, h - 8);
  ctx.fillText("P(candidate)", 2, 14);

  ctx.strokeStyle = "#1565c0";
  ctx.beginPath();
  r.curve.forEach(([s, p], i) => (i ? ctx.lineTo(x(s), y(p)) : ctx.moveTo(x(s), y(p))));
  ctx.stroke();

  ctx.strokeStyle = "#c62828";
  ctx.setLineDash([4, 3]);
  ctx.beginPath();
  ctx.moveTo(x(r.threshold), y(0));
  ctx.lineTo(x(r.threshold), y(1));
  ctx.stroke();
  ctx.setLineDash([]);

  ctx.fillStyle = "#2e7d32";
  ctx.beginPath();
  ctx.arc(x(r.exact), y(r.candidate_probability), 5, 0, 2 * Math.PI);
  ctx.fill();
}

function runSimilarity() {
  const r = JSON.parse(similarity($("sim-a").value, $("sim-b").value));
  $("sim-out").textContent = [
    `shingles          ${r.shingles[0]} / ${r.shingles[1]}`,
    `exact Jaccard     ${r.exact.toFixed(4)}`,
    `MinHash estimate  ${r.estimate.toFixed(4)}`,
    `P(candidate)      ${r.candidate_probability.toFixed(4)}  (S-curve midpoint ${r.implied_threshold.toFixed(3)})`,
    `near duplicate    ${r.duplicate ? "yes" : "no"} at threshold ${r.threshold}`,
  ].join("\n");
  drawCurve($("sim-curve"), r);
}

await init();
$("pii-go").onclick = runRedact;
$("fim-go").onclick = runFim;
$("fim-next").onclick = () => {
  $("fim-seed").value = num("fim-seed") + 1;
  runFim();
};
$("sim-go").onclick = runSimilarity;
runRedact();
runFim();
runSimilarity();

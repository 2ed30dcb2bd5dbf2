import init, { synth_signal, analyze_json, sweep_json } from "./pkg/splinefit_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
let t = [];
let y = [];
let fitted = null;

function model() {
  return [num("model"), num("degree"), num("intervals")];
}

function guard(fn) {
  return () => {
    $("error").textContent = "";
    try {
      fn();
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
}

function drawSignal() {
  const c = $("signal");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (!t.length) return;
  const lo = Math.min(...y, ...(fitted ?? []));
  const hi = Math.max(...y, ...(fitted ?? []));
  const sx = (v) => ((v - t[0]) / (t[t.length - 1] - t[0] || 1)) * (c.width - 20) + 10;
  const sy = (v) => c.height - 10 - ((v - lo) / (hi - lo || 1)) * (c.height - 20);
  g.fillStyle = "#246";
  t.forEach((ti, i) => g.fillRect(sx(ti) - 1, sy(y[i]) - 1, 2, 2));
  if (fitted) {
    g.strokeStyle = "#d40";
    g.beginPath();
    t.forEach((ti, i) => (i ? g.lineTo(sx(ti), sy(fitted[i])) : g.moveTo(sx(ti), sy(fitted[i]))));
    g.stroke();
  }
}

function synth() {
  const n = num("samples");
  const end = num("tend");
  y = Array.from(synth_signal(...model(), n, end, num("omega"), num("tau"), num("seed"), num("noise")));
  t = Array.from({ length: n }, (_, i) => (n > 1 ? (end * i) / (n - 1) : 0));
  fitted = null;
  drawSignal();
}

function analyze() {
  if (!t.length) synth();
  const v = JSON.parse(analyze_json(Float64Array.from(t), ...model(), num("omega"), num("tau")));
  const by = v.by ? ` by ${v.by}` : "";
  const why = v.reason ? ` (${v.reason})` : "";
  const rank = v.numeric_rank != null ? `, numeric rank ${v.numeric_rank}/${v.columns}` : "";
  $("verdict").textContent = `${v.status}${by}${why}${rank}`;
  const rows = v.per_interval
    .map((d) => `<tr><td>${d.k}</td><td>${d.n_k}</td><td>${d.z_k}</td><td>${d.required}</td><td>${d.margin}</td><td style="text-align:left">${d.note ?? ""}</td></tr>`)
    .join("");
  $("intervals-table").innerHTML =
    "<tr><th>k</th><th>N_k</th><th>Z_k</th><th>required</th><th>margin</th><th>note</th></tr>" + rows;
}

function range(id) {
  const parts = $(id).value.split(":").map(Number);
  if (parts.length !== 3 || parts.some(Number.isNaN)) throw new Error(`${id}: expected start:end:step`);
  return parts;
}

function sweep() {
  if (!t.length) synth();
  const [o0, o1, os] = range("orange");
  const [t0, t1, ts] = range("trange");
  const r = JSON.parse(sweep_json(Float64Array.from(t), Float64Array.from(y), ...model(), o0, o1, os, t0, t1, ts));
  fitted = r.fitted;
  drawSignal();

  const c = $("heat");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const rows = r.omegas.length;
  const cols = r.taus.length;
  const logs = r.sse.map((s) => Math.log10(s + 1e-300));
  const lo = Math.min(...logs);
  const hi = Math.max(...logs);
  const w = c.width / cols;
  const h = c.height / rows;
  logs.forEach((l, idx) => {
    const i = Math.floor(idx / cols);
    const j = idx % cols;
    const s = Math.round(255 * (hi > lo ? (l - lo) / (hi - lo) : 0));
    g.fillStyle = `rgb(${s},${Math.round(s * 0.8)},${255 - s})`;
    g.fillRect(j * w, i * h, Math.ceil(w), Math.ceil(h));
  });
  const b = r.best;
  g.strokeStyle = "#fff";
  g.lineWidth = 2;
  g.strokeRect((b.index % cols) * w + 1, Math.floor(b.index / cols) * h + 1, w - 2, h - 2);
  $("best").innerHTML =
    `<p>best ω = ${b.omega}, τ = ${b.tau.toFixed(6)}<br>SSE = ${b.sse.toExponential(3)}<br>solver: ${b.method}<br>` +
    `${r.ties.length} tied cell(s)</p><p>rows: ω ${r.omegas[0]}…${r.omegas[rows - 1]}, columns: τ; colour is log₁₀ SSE</p>`;
}

await init();
$("synth").onclick = guard(synth);
$("analyze").onclick = guard(analyze);
$("sweep").onclick = guard(sweep);
guard(synth)();

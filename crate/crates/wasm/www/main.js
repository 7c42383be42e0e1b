// Expects the wasm-bindgen output (--target web) in ./pkg.
import init, { Demo, families } from "./pkg/topo_adv_wasm.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c"];

let demo = null;
let state = null;
let yaw = 0.6, pitch = 0.4;

function alphaValue() {
  // quadratic slider so small scales get resolution; hull slivers make
  // max_value huge, so the range ends just past the last finite death
  const finite = state.diagram.filter((d) => d[2] !== null).map((d) => d[2]);
  const top = Math.min(state.max_value, 1.1 * Math.max(1e-9, ...finite));
  const t = $("alpha").value / 1000;
  return t * t * top;
}

function project([x, y, z]) {
  const cy = Math.cos(yaw), sy = Math.sin(yaw);
  const cp = Math.cos(pitch), sp = Math.sin(pitch);
  const x1 = cy * x + sy * z, z1 = -sy * x + cy * z;
  const y1 = cp * y - sp * z1, z2 = sp * y + cp * z1;
  const s = 150;
  return [260 + s * x1, 260 - s * y1, z2];
}

function drawCloud() {
  const ctx = $("cloud").getContext("2d");
  ctx.clearRect(0, 0, 520, 520);
  const alpha = alphaValue();
  const cx = JSON.parse(demo.complex(alpha));
  const p = state.points.map(project);
  ctx.fillStyle = "rgba(44, 160, 44, 0.12)";
  for (const [a, b, c] of cx.triangles) {
    ctx.beginPath();
    ctx.moveTo(p[a][0], p[a][1]);
    ctx.lineTo(p[b][0], p[b][1]);
    ctx.lineTo(p[c][0], p[c][1]);
    ctx.fill();
  }
  ctx.strokeStyle = "rgba(80, 80, 80, 0.35)";
  ctx.beginPath();
  for (const [a, b] of cx.edges) {
    ctx.moveTo(p[a][0], p[a][1]);
    ctx.lineTo(p[b][0], p[b][1]);
  }
  ctx.stroke();
  ctx.fillStyle = "#1f77b4";
  for (const [x, y] of p) ctx.fillRect(x - 1.5, y - 1.5, 3, 3);
  $("alpha-value").textContent =
    `alpha = ${alpha.toExponential(3)}   Betti = (${cx.betti.join(", ")})`;
  return alpha;
}

function drawDiagram(alpha) {
  const ctx = $("diagram").getContext("2d");
  const W = 420, pad = 30;
  ctx.clearRect(0, 0, W, W);
  const finite = state.diagram.filter((d) => d[2] !== null).map((d) => d[2]);
  const top = Math.max(1e-9, ...finite) * 1.05;
  const sx = (v) => pad + (v / top) * (W - 2 * pad);
  const sy = (v) => W - pad - (v / top) * (W - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(sx(0), sy(0));
  ctx.lineTo(sx(top), sy(top));
  ctx.stroke();
  ctx.strokeStyle = "#f0a";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(sx(Math.min(alpha, top)), sy(0));
  ctx.lineTo(sx(Math.min(alpha, top)), sy(top));
  ctx.stroke();
  ctx.setLineDash([]);
  for (const [dim, birth, death] of state.diagram) {
    if (dim === 0 && birth === 0 && death !== null && death < top * 1e-3) continue;
    ctx.fillStyle = COLORS[dim] || "#000";
    const y = death === null ? sy(top) : sy(death);
    ctx.beginPath();
    ctx.arc(sx(birth), y, death === null ? 4 : 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.fillStyle = "#222";
  ctx.fillText("birth", W / 2, W - 8);
  ctx.fillText("death", 4, 14);
  ctx.fillText("H0", W - 80, 20); ctx.fillText("H1", W - 55, 20); ctx.fillText("H2", W - 30, 20);
  COLORS.forEach((c, i) => { ctx.fillStyle = c; ctx.fillRect(W - 92 + 25 * i, 12, 8, 8); });
}

function redraw() {
  drawDiagram(drawCloud());
}

function setState(json) {
  state = JSON.parse(json);
  redraw();
}

function run(fn) {
  try {
    fn();
  } catch (e) {
    $("status").textContent = `error: ${e.message ?? e}`;
  }
}

function generate() {
  run(() => {
    demo?.free();
    const t0 = performance.now();
    demo = new Demo($("family").value, Number($("npoints").value), Number($("seed").value));
    setState(demo.state());
    $("status").textContent = `${state.points.length} points, ${state.diagram.length} pairs, ` +
      `${(performance.now() - t0).toFixed(0)} ms`;
  });
}

function push() {
  run(() => {
    const t0 = performance.now();
    const out = JSON.parse(demo.push(Number($("steps").value), Number($("step-size").value), $("creation").checked));
    state = out.state;
    redraw();
    $("status").textContent = `${out.mode}: loss ${out.loss.toFixed(5)}, ` +
      `max displacement ${out.max_displacement.toFixed(4)}, ${(performance.now() - t0).toFixed(0)} ms`;
  });
}

function enableRotation() {
  let last = null;
  const c = $("cloud");
  c.addEventListener("pointerdown", (e) => { last = [e.clientX, e.clientY]; c.setPointerCapture(e.pointerId); });
  c.addEventListener("pointerup", () => { last = null; });
  c.addEventListener("pointermove", (e) => {
    if (!last) return;
    yaw += (e.clientX - last[0]) * 0.01;
    pitch += (e.clientY - last[1]) * 0.01;
    last = [e.clientX, e.clientY];
    drawCloud();
  });
}

await init();
for (const f of JSON.parse(families())) $("family").add(new Option(f, f));
$("family").value = "torus";
$("generate").onclick = generate;
$("alpha").oninput = () => state && redraw();
$("push").onclick = push;
$("reset").onclick = () => run(() => { demo.reset(); setState(demo.state()); });
enableRotation();
generate();

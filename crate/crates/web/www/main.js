import init, { solve_field, convergence_curve, error_tail } from "./pkg/obsfem_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function colour(t) {
  // blue → white → red
  const c = Math.max(0, Math.min(1, t));
  const r = c < 0.5 ? 2 * c : 1;
  const b = c < 0.5 ? 1 : 2 - 2 * c;
  const g = 1 - Math.abs(2 * c - 1);
  return `rgb(${Math.round(255 * r)},${Math.round(255 * (0.3 + 0.7 * g))},${Math.round(255 * b)})`;
}

function fieldFrame(canvas, vertices) {
  const xs = vertices.map((v) => v[0]);
  const ys = vertices.map((v) => v[1]);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const pad = 20;
  const s = (Math.min(canvas.width, canvas.height) - 2 * pad) / Math.max(x1 - x0, y1 - y0);
  return (x, y) => [pad + (x - x0) * s, canvas.height - pad - (y - y0) * s];
}

function drawField(view, which) {
  const canvas = $("f-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const values = which === "err" ? view.u.map((u, i) => u - view.exact[i]) : view[which];
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (which === "err") {
    hi = Math.max(Math.abs(lo), Math.abs(hi));
    lo = -hi;
  }
  const span = hi - lo || 1;
  const map = fieldFrame(canvas, view.vertices);
  for (const tri of view.triangles) {
    const mean = (values[tri[0]] + values[tri[1]] + values[tri[2]]) / 3;
    ctx.fillStyle = colour((mean - lo) / span);
    ctx.strokeStyle = "rgba(0,0,0,0.15)";
    ctx.beginPath();
    tri.forEach((v, j) => {
      const [px, py] = map(...view.vertices[v]);
      j ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
    });
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
  }
  ctx.fillStyle = "#000";
  for (const [x, y] of view.sites) {
    const [px, py] = map(x, y);
    ctx.fillRect(px - 1, py - 1, 2, 2);
  }
  return [lo, hi];
}

let lastField = null;

function runField() {
  try {
    lastField = JSON.parse(solve_field($("f-domain").value, num("f-k"), num("f-n"), num("f-sigma"), num("f-seed")));
    const [lo, hi] = drawField(lastField, $("f-show").value);
    $("f-out").textContent =
      `sites ${lastField.n}   L2 error ${lastField.l2.toExponential(4)}   H1 error ${lastField.h1.toExponential(4)}\n` +
      `colour range [${lo.toFixed(3)}, ${hi.toFixed(3)}]   KKT residual ${lastField.residual.toExponential(2)}`;
  } catch (e) {
    $("f-out").textContent = `error: ${e}`;
  }
}

function plotLogLog(canvas, series, xLabel) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pts = series.flatMap((s) => s.points);
  const lx = pts.map((p) => Math.log10(p[0]));
  const ly = pts.map((p) => Math.log10(p[1]));
  const [x0, x1, y0, y1] = [Math.min(...lx), Math.max(...lx), Math.min(...ly), Math.max(...ly)];
  const pad = 40;
  const sx = (x) => pad + ((Math.log10(x) - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - ((Math.log10(y) - y0) / (y1 - y0 || 1)) * (canvas.height - 2 * pad);
  axes(ctx, canvas, pad, `log ${xLabel}`, "log error");
  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.colour;
    ctx.beginPath();
    s.points.forEach(([x, y], j) => (j ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
    s.points.forEach(([x, y]) => ctx.fillRect(sx(x) - 2, sy(y) - 2, 4, 4));
    const [lxp, lyp] = s.points[s.points.length - 1];
    ctx.fillText(s.label, sx(lxp) + 6, sy(lyp));
  }
}

function axes(ctx, canvas, pad, xl, yl) {
  ctx.strokeStyle = "#444";
  ctx.fillStyle = "#444";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, canvas.height - pad);
  ctx.lineTo(canvas.width - pad / 2, canvas.height - pad);
  ctx.stroke();
  ctx.fillText(xl, canvas.width / 2 - 20, canvas.height - 12);
  ctx.save();
  ctx.translate(12, canvas.height / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yl, 0, 0);
  ctx.restore();
}

function runCurve() {
  try {
    const c = JSON.parse(
      convergence_curve($("c-domain").value, $("c-ks").value, num("c-i"), num("c-sigma"), num("c-trials"), 0),
    );
    plotLogLog(
      $("c-canvas"),
      [
        { label: "L2", colour: "#c22", points: c.points.map((p) => [p.h, p.l2]) },
        { label: "H1", colour: "#22c", points: c.points.map((p) => [p.h, p.h1]) },
      ],
      "h",
    );
    const rate = (r) => (r === null ? "n/a" : r.toFixed(3));
    $("c-out").textContent =
      c.points.map((p) => `h=${p.h.toFixed(4)} n=${p.n} L2=${p.l2.toExponential(3)} H1=${p.h1.toExponential(3)}`).join("\n") +
      `\nendpoint rates: L2 ${rate(c.rate_l2)}  H1 ${rate(c.rate_h1)}`;
  } catch (e) {
    $("c-out").textContent = `error: ${e}`;
  }
}

function runTail() {
  try {
    const t = JSON.parse(error_tail(num("t-k"), num("t-i"), num("t-sigma"), num("t-trials"), 0));
    const canvas = $("t-canvas");
    const ctx = canvas.getContext("2d");
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (!t.fit) {
      $("t-out").textContent = `deterministic errors (median ${t.median.toExponential(3)}); nothing to fit`;
      return;
    }
    const z2 = t.z.map((z) => z * z);
    const [a, b, r2] = t.fit;
    const xmax = Math.max(...z2);
    const ymin = Math.min(...t.log_survival, a - b * xmax);
    const ymax = Math.max(0, a);
    const pad = 40;
    const sx = (x) => pad + (x / xmax) * (canvas.width - 2 * pad);
    const sy = (y) => pad / 2 + ((ymax - y) / (ymax - ymin || 1)) * (canvas.height - 1.5 * pad);
    axes(ctx, canvas, pad, "z²", "ln S");
    ctx.fillStyle = "#c22";
    z2.forEach((x, j) => ctx.fillRect(sx(x) - 2, sy(t.log_survival[j]) - 2, 4, 4));
    ctx.strokeStyle = "#22c";
    ctx.beginPath();
    ctx.moveTo(sx(0), sy(a));
    ctx.lineTo(sx(xmax), sy(a - b * xmax));
    ctx.stroke();
    $("t-out").textContent =
      `median ${t.median.toExponential(3)}   p99/median ${(t.p99 / t.median).toFixed(3)}\n` +
      `fit ln S = ${a.toFixed(3)} - ${b.toFixed(3)} z²   R² = ${r2.toFixed(4)}`;
  } catch (e) {
    $("t-out").textContent = `error: ${e}`;
  }
}

await init();
$("f-run").onclick = runField;
$("f-show").onchange = () => lastField && drawField(lastField, $("f-show").value);
$("c-run").onclick = runCurve;
$("t-run").onclick = runTail;
runField();

import init, { evaluateOccluders, generateScene, wheelFraction } from "./pkg/occlusion_meter_web.js";

const $ = (id) => document.getElementById(id);
const canvas = $("scene");
const ctx = canvas.getContext("2d");
const colors = { wheel: "40,90,200", frame: "200,60,40", handlebar: "30,140,60" };

let occluders = [];
let view = null;
let drag = null;

function fmt(v) {
  return v.toFixed(1);
}

function run(f) {
  try {
    $("error").textContent = "";
    return f();
  } catch (e) {
    $("error").textContent = String(e.message ?? e);
    return null;
  }
}

function evaluate() {
  const out = run(() => JSON.parse(evaluateOccluders(JSON.stringify(occluders))));
  if (out) {
    view = out;
    draw();
  }
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const p of view.parts) {
    ctx.beginPath();
    p.polygon.forEach((pt, i) => (i ? ctx.lineTo(pt.x, pt.y) : ctx.moveTo(pt.x, pt.y)));
    ctx.closePath();
    ctx.fillStyle = `rgba(${colors[p.class]},${0.15 + 0.6 * p.visible_fraction})`;
    ctx.fill();
    ctx.strokeStyle = `rgb(${colors[p.class]})`;
    ctx.stroke();
  }
  ctx.fillStyle = "rgba(90,90,90,0.55)";
  for (const [x0, y0, x1, y1] of view.occluders) ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
  ctx.setLineDash([6, 4]);
  for (const d of view.detections) {
    const [x0, y0, x1, y1] = d.bbox;
    ctx.strokeStyle = `rgb(${colors[d.class]})`;
    ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
  }
  ctx.setLineDash([]);
  if (drag) {
    ctx.strokeStyle = "#333";
    ctx.strokeRect(drag.x0, drag.y0, drag.x1 - drag.x0, drag.y1 - drag.y0);
  }

  $("ex-vis").textContent = fmt(view.exact.visibility_pct);
  $("ex-occ").textContent = fmt(view.exact.occlusion_pct);
  $("ex-band").textContent = view.exact.band;
  const est = view.estimated;
  $("es-vis").textContent = est ? fmt(est.visibility_pct) : "0.0";
  $("es-occ").textContent = est ? fmt(est.occlusion_pct) : "100.0";
  $("es-band").textContent = est ? est.band : "severe (nothing detected)";

  const names = ["rear wheel", "front wheel", "frame", "handlebar"];
  $("parts").innerHTML =
    "<tr><th>part</th><th>visible</th></tr>" +
    view.parts.map((p, i) => `<tr><td>${names[i]}</td><td>${(100 * p.visible_fraction).toFixed(1)}%</td></tr>`).join("") +
    "<tr><th>detection</th><th>share</th></tr>" +
    view.detections.map((d) => `<tr><td>${d.class}</td><td>${fmt(d.contribution_pct)}</td></tr>`).join("");
}

function point(e) {
  const r = canvas.getBoundingClientRect();
  return { x: e.clientX - r.left, y: e.clientY - r.top };
}

canvas.addEventListener("mousedown", (e) => {
  const p = point(e);
  drag = { x0: p.x, y0: p.y, x1: p.x, y1: p.y };
});
canvas.addEventListener("mousemove", (e) => {
  if (!drag) return;
  const p = point(e);
  drag.x1 = p.x;
  drag.y1 = p.y;
  draw();
});
window.addEventListener("mouseup", () => {
  if (!drag) return;
  const { x0, y0, x1, y1 } = drag;
  drag = null;
  if (Math.abs(x1 - x0) > 2 && Math.abs(y1 - y0) > 2) occluders.push([x0, y0, x1, y1]);
  evaluate();
});

$("clear").onclick = () => {
  occluders = [];
  evaluate();
};
$("undo").onclick = () => {
  occluders.pop();
  evaluate();
};
$("random").onclick = () => {
  const out = run(() =>
    JSON.parse(generateScene($("seed").value, Number($("count").value), Number($("coverage").value)))
  );
  if (out) {
    occluders = out.occluders;
    view = out;
    draw();
  }
};

function wheel() {
  const w = Number($("ww").value);
  const h = Number($("wh").value);
  $("ww-v").textContent = w;
  $("wh-v").textContent = h;
  const out = run(() => JSON.parse(wheelFraction(w, h)));
  if (!out) return;
  const c = $("wheel").getContext("2d");
  c.clearRect(0, 0, 220, 220);
  c.strokeStyle = `rgb(${colors.wheel})`;
  c.strokeRect(110 - w / 2, 110 - h / 2, w, h);
  $("wheel-out").textContent =
    `ratio ${out.ratio.toFixed(3)} → fraction ${out.fraction} → ${fmt(out.contribution_pct)}% of the bicycle ` +
    `(steps at ${out.thresholds.join(", ")})`;
}
$("ww").oninput = wheel;
$("wh").oninput = wheel;

await init();
evaluate();
wheel();

import init, { ensemble_mean_z, spectrum_vs_environment, i_integral_curve } from "./pkg/chiral_web.js";

const COLORS = ["#1f5fa8", "#c0392b", "#2e8b57", "#8e44ad"];

// Draws series = [{xs, ys, color, label}] with linear or log axes.
function plot(canvas, series, { xlabel = "", ylabel = "", logX = false, logY = false } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  const pad = { l: 64, r: 12, t: 12, b: 40 };
  ctx.clearRect(0, 0, w, h);
  const fx = logX ? Math.log10 : (v) => v;
  const fy = logY ? Math.log10 : (v) => v;
  const pts = series.flatMap((s) => s.xs.map((x, i) => [fx(x), fy(s.ys[i])])).filter(([x, y]) => isFinite(x) && isFinite(y));
  if (pts.length === 0) return;
  let [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...pts.map((p) => p[1])), Math.max(...pts.map((p) => p[1]))];
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  if (x1 === x0) { x0 -= 1; x1 += 1; }
  const X = (x) => pad.l + ((x - x0) / (x1 - x0)) * (w - pad.l - pad.r);
  const Y = (y) => h - pad.b - ((y - y0) / (y1 - y0)) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#333";
  ctx.font = "12px system-ui, sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad.l, pad.t);
  ctx.lineTo(pad.l, h - pad.b);
  ctx.lineTo(w - pad.r, h - pad.b);
  ctx.stroke();
  const tick = (v, log) => (log ? "1e" + v.toFixed(0) : Math.abs(v) < 1e-3 && v !== 0 ? v.toExponential(1) : +v.toPrecision(3));
  for (let k = 0; k <= 4; k++) {
    const xv = x0 + ((x1 - x0) * k) / 4, yv = y0 + ((y1 - y0) * k) / 4;
    ctx.fillText(tick(xv, logX), X(xv) - 12, h - pad.b + 16);
    ctx.fillText(tick(yv, logY), 4, Y(yv) + 4);
  }
  ctx.fillText(xlabel, w / 2, h - 6);
  ctx.save();
  ctx.translate(14, h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  if (y0 < 0 && y1 > 0 && !logY) {
    ctx.strokeStyle = "#ddd";
    ctx.beginPath();
    ctx.moveTo(pad.l, Y(0));
    ctx.lineTo(w - pad.r, Y(0));
    ctx.stroke();
  }

  series.forEach((s, j) => {
    ctx.strokeStyle = s.color || COLORS[j % COLORS.length];
    ctx.lineWidth = 1.4;
    ctx.beginPath();
    s.xs.forEach((x, i) => {
      const px = X(fx(x)), py = Y(fy(s.ys[i]));
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.stroke();
    if (s.label) {
      ctx.fillStyle = ctx.strokeStyle;
      ctx.fillText(s.label, w - pad.r - 120, pad.t + 14 * (j + 1));
    }
  });
}

const num = (form, name) => Number(form.elements[name].value);

function rows(flat, width) {
  const out = [];
  for (let i = 0; i + width <= flat.length; i += width) out.push(flat.slice(i, i + width));
  return out;
}

let previous = null;

function runEnsemble(ev) {
  ev?.preventDefault();
  const f = document.getElementById("ens");
  const out = document.getElementById("ens-out");
  out.textContent = "running…";
  // let the message paint before the blocking computation
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const flat = ensemble_mean_z(num(f, "n"), num(f, "nEnv"), num(f, "envEps"), num(f, "lambda"), num(f, "z0"),
        num(f, "tFinal"), f.elements.paper.checked, BigInt(num(f, "seed")));
      const avg = flat[flat.length - 2], se = flat[flat.length - 1];
      const pts = rows(flat.subarray(0, flat.length - 2), 2);
      const current = { xs: pts.map((p) => p[0]), ys: pts.map((p) => p[1]), label: `ε_i = ${num(f, "envEps")}` };
      const series = previous ? [{ ...previous, color: "#bbb" }, current] : [current];
      plot(document.getElementById("ens-plot"), series, { xlabel: "t", ylabel: "⟨Z(t)⟩" });
      previous = current;
      out.textContent = `time-averaged Z = ${avg.toFixed(4)} ± ${isFinite(se) ? se.toFixed(4) : "n/a"} ` +
        `(${((performance.now() - t0) / 1000).toFixed(1)} s)`;
    } catch (e) {
      out.textContent = "error: " + e.message;
    }
  }, 10);
}

function drawSpectrum() {
  const f = document.getElementById("spec");
  try {
    const r = rows(spectrum_vs_environment(num(f, "delta"), num(f, "eps"), num(f, "lambda"), num(f, "nEnv"), 201), 5);
    const xs = r.map((p) => p[0]);
    plot(document.getElementById("spec-plot"), [
      { xs, ys: r.map((p) => p[1]), label: "λ₊" },
      { xs, ys: r.map((p) => p[2]), label: "λ₋" },
      { xs, ys: r.map((p) => p[3]), label: "E_L" },
      { xs, ys: r.map((p) => p[4]), label: "E_R" },
    ], { xlabel: "m", ylabel: "energy" });
  } catch (e) {
    plot(document.getElementById("spec-plot"), []);
  }
}

function drawIntegral() {
  const f = document.getElementById("iint");
  const out = document.getElementById("iint-out");
  try {
    const r = rows(i_integral_curve(num(f, "rMin"), num(f, "rMax"), 120), 2);
    plot(document.getElementById("iint-plot"), [{ xs: r.map((p) => p[0]), ys: r.map((p) => p[1]), label: "I(r)" }],
      { xlabel: "r [1/m_e]", ylabel: "I(r)", logX: true, logY: true });
    out.textContent = `I(${r[0][0].toPrecision(3)}) = ${r[0][1].toExponential(4)}, ` +
      `I(${r[r.length - 1][0].toPrecision(3)}) = ${r[r.length - 1][1].toExponential(4)}`;
  } catch (e) {
    out.textContent = "error: " + e.message;
  }
}

await init();
document.getElementById("ens").addEventListener("submit", runEnsemble);
document.getElementById("spec").addEventListener("input", drawSpectrum);
document.getElementById("iint").addEventListener("input", drawIntegral);
drawSpectrum();
drawIntegral();
runEnsemble();

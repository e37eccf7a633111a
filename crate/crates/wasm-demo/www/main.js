import init, { qaoa_distribution, zne_curve, solver_comparison } from "./pkg/qport_wasm_demo.js";

const fmt = (x, d = 4) => Number(x).toFixed(d);

function el(tag, attrs = {}, ...children) {
  const e = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) e.setAttribute(k, v);
  for (const c of children) e.append(c);
  return e;
}

function table(head, rows) {
  const t = el("table");
  t.append(el("tr", {}, ...head.map((h) => el("th", {}, h))));
  for (const r of rows) t.append(el("tr", {}, ...r.map((c) => el("td", {}, c))));
  return t;
}

function bind(id, handler) {
  const section = document.getElementById(id);
  const form = section.querySelector("form");
  const out = section.querySelector(".out");
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const v = Object.fromEntries([...new FormData(form)].map(([k, x]) => [k, Number(x)]));
    out.replaceChildren(el("p", { class: "note" }, "running..."));
    // yield so the note paints before the synchronous call
    setTimeout(() => {
      try {
        out.replaceChildren(...handler(v));
      } catch (e) {
        out.replaceChildren(el("p", { class: "error" }, String(e)));
      }
    }, 10);
  });
}

bind("dist", (v) => {
  const r = JSON.parse(qaoa_distribution(v.n, v.k, v.seed, v.gamma, v.beta, v.layers));
  const max = Math.max(...r.top.map((o) => o.probability));
  const rows = r.top.map((o) => {
    const bar = el("div", { class: "bar", style: `width:${(160 * o.probability) / max}px` });
    return [o.bitstring, fmt(o.probability), fmt(o.score), bar];
  });
  return [
    el("p", {}, `warm start ${r.warm_start} (score ${fmt(r.warm_score)}), expectation ${fmt(r.expectation_score)}, leakage ${r.leakage.toExponential(1)}`),
    table(["bitstring", "probability", "score", ""], rows),
  ];
});

function curvePlot(r) {
  const e = r.estimate;
  const pts = e.lambdas.map((l, i) => [l, e.values[i]]);
  const est = [["linear", e.linear_e0], ["quadratic", e.quadratic_e0], ["richardson", e.richardson_e0]];
  const ys = [...e.values, r.noiseless, ...est.map((x) => x[1]).filter((y) => y !== null)];
  const [lo, hi] = [Math.min(...ys), Math.max(...ys)];
  const W = 420, H = 220, pad = 36;
  const sx = (l) => pad + (l / 3.2) * (W - 2 * pad);
  const sy = (y) => H - pad - ((y - lo) / (hi - lo || 1)) * (H - 2 * pad);
  const ns = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(ns, "svg");
  svg.setAttribute("width", W);
  svg.setAttribute("height", H);
  const add = (tag, a) => {
    const n = document.createElementNS(ns, tag);
    for (const [k, v] of Object.entries(a)) n.setAttribute(k, v);
    svg.append(n);
    return n;
  };
  add("line", { x1: pad, y1: H - pad, x2: W - pad, y2: H - pad, stroke: "#999" });
  add("line", { x1: sx(0), y1: pad / 2, x2: sx(0), y2: H - pad, stroke: "#999" });
  add("line", { x1: pad, y1: sy(r.noiseless), x2: W - pad, y2: sy(r.noiseless), stroke: "#2a9d55", "stroke-dasharray": "4 3" });
  for (const [l, y] of pts) add("circle", { cx: sx(l), cy: sy(y), r: 4, fill: "#4a7bd0" });
  const colors = { linear: "#e07b39", quadratic: "#8a4fd0", richardson: "#c0392b" };
  for (const [name, y] of est) {
    if (y === null) continue;
    add("rect", { x: sx(0) - 4, y: sy(y) - 4, width: 8, height: 8, fill: colors[name] });
  }
  for (const l of [0, 1, 2, 3]) {
    add("text", { x: sx(l) - 4, y: H - pad + 16, "font-size": 11 }).textContent = l;
  }
  add("text", { x: W - pad - 60, y: H - 6, "font-size": 11 }).textContent = "noise scale";
  return svg;
}

bind("zne", (v) => {
  const r = JSON.parse(zne_curve(v.n, v.k, v.seed, v.p, v.shots));
  const e = r.estimate;
  const rows = e.lambdas.map((l, i) => [`E(${l})`, fmt(e.values[i]), fmt(r.feasible_rates[i], 3)]);
  const est = [
    ["linear", e.linear_e0],
    ["quadratic", e.quadratic_e0],
    ["richardson", e.richardson_e0],
  ].map(([n, y]) => (y === null ? [n, "n/a", "n/a"] : [n, fmt(y), fmt(Math.abs(y - r.noiseless))]));
  return [
    el("p", {}, `noiseless ${fmt(r.noiseless)} (dashed), fully mixed ${fmt(r.mixed)}`),
    curvePlot(r),
    table(["scale", "mean score", "feasible"], rows),
    table(["extrapolation", "E0", "|E0 - noiseless|"], est),
  ];
});

bind("solvers", (v) => {
  const r = JSON.parse(solver_comparison(v.n, v.k, v.seed));
  const best = Math.max(...r.rows.map((x) => x.score));
  const rows = r.rows.map((x) => [x.method, fmt(x.score), fmt(x.score / best), String(x.evaluations), x.bitstring]);
  return [
    el("p", {}, `C(n, k) = ${r.search_space}; random-search mean ${fmt(r.random_mean)}`),
    table(["method", "score", "ratio", "evaluations", "portfolio"], rows),
  ];
});

await init();
for (const s of document.querySelectorAll("section")) s.querySelector("form").requestSubmit();

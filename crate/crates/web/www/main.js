import init, { analyze, counterexample, perturb } from "./pkg/mdtree_web.js";

const $ = (id) => document.getElementById(id);
const SVG = "http://www.w3.org/2000/svg";

function el(tag, attrs = {}, text) {
  const e = document.createElementNS(SVG, tag);
  for (const [k, v] of Object.entries(attrs)) e.setAttribute(k, v);
  if (text !== undefined) e.textContent = text;
  return e;
}

function drawTree(layout, title) {
  const w = 320, rowH = 22;
  const xs = layout.nodes.map((n) => n.x);
  const maxX = Math.max(...xs) || 1;
  const leaves = layout.nodes.filter((n) => n.label !== null).length;
  const h = leaves * rowH + 30;
  const px = (n) => 10 + (n.x / maxX) * (w - 60);
  const py = (n) => 25 + n.y * rowH;
  const svg = el("svg", { width: w, height: h });
  svg.appendChild(el("text", { x: 4, y: 12 }, title));
  for (const e of layout.edges) {
    const a = layout.nodes[e.a], b = layout.nodes[e.b];
    svg.appendChild(el("line", { x1: px(a), y1: py(a), x2: px(b), y2: py(b) }));
    svg.appendChild(el("text", { x: (px(a) + px(b)) / 2, y: (py(a) + py(b)) / 2 - 3, fill: "#888" }, e.weight));
  }
  for (const n of layout.nodes) {
    if (n.label !== null) svg.appendChild(el("text", { x: px(n) + 4, y: py(n) + 4 }, n.label));
  }
  return svg;
}

function mapTable(rows) {
  const t = document.createElement("table");
  t.innerHTML = "<tr><th>subset</th><th>weight</th></tr>" +
    rows.slice(0, 60).map((r) => `<tr><td>${r.subset.join(",")}</td><td>${r.value}</td></tr>`).join("");
  if (rows.length > 60) t.innerHTML += `<tr><td colspan="2">${rows.length - 60} more</td></tr>`;
  return t;
}

function fail(out, e) {
  out.innerHTML = `<p class="err">${e}</p>`;
}

function runAnalyze() {
  const out = $("analyze-out");
  try {
    const r = JSON.parse(analyze($("newick").value, Number($("m").value)));
    out.innerHTML = "";
    const trees = document.createElement("div");
    trees.className = "trees";
    trees.appendChild(drawTree(r.layout, "input"));
    const rec = r.reconstruction;
    const p = document.createElement("p");
    if (rec.error) {
      p.className = "err";
      p.textContent = `reconstruction: ${rec.error}`;
    } else {
      trees.appendChild(drawTree(rec.layout, "rebuilt from the map"));
      p.textContent = `n=${r.n}, m=${r.m}: ${r.rows.length} values, quartet check ${r.check_passed ? "passed" : "failed"}, ` +
        `rebuilt ${rec.identical ? "identical" : "DIFFERENT"} after ${rec.quartet_queries} quartet queries.`;
    }
    out.append(p, trees, mapTable(r.rows));
  } catch (e) {
    fail(out, e);
  }
}

function runCounter() {
  const out = $("counter-out");
  try {
    const r = JSON.parse(counterexample(Number($("cm").value), Number($("cseed").value)));
    out.innerHTML = "";
    const p = document.createElement("p");
    p.textContent = `m-maps equal: ${r.maps_equal}; pairwise distances differ: ${r.pair_distances_differ}. ` +
      `Splits: ${r.t.splits.join(" ")} versus ${r.t_prime.splits.join(" ")}`;
    const trees = document.createElement("div");
    trees.className = "trees";
    trees.append(drawTree(r.t.layout, "T"), drawTree(r.t_prime.layout, "T'"));
    out.append(p, trees, mapTable(r.rows));
  } catch (e) {
    fail(out, e);
  }
}

function runPerturb() {
  const out = $("perturb-out");
  const deltas = [0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.49];
  try {
    const r = JSON.parse(perturb($("newick").value, Number($("m").value), new Float64Array(deltas),
      Number($("trials").value), Number($("pseed").value)));
    const w = 420, h = 180;
    const svg = el("svg", { width: w + 60, height: h + 40 });
    const x = (d) => 40 + (d / 0.5) * w;
    const y = (s) => 10 + (1 - s) * h;
    svg.appendChild(el("line", { x1: 40, y1: y(0), x2: 40 + w, y2: y(0) }));
    svg.appendChild(el("line", { x1: 40, y1: y(0), x2: 40, y2: y(1) }));
    svg.appendChild(el("text", { x: 4, y: y(1) + 4 }, "1.0"));
    svg.appendChild(el("text", { x: 4, y: y(0) + 4 }, "0"));
    svg.appendChild(el("text", { x: 40 + w - 30, y: h + 35 }, "0.5"));
    const pts = r.points.map((p) => `${x(p.delta)},${y(p.success_rate)}`).join(" ");
    svg.appendChild(el("polyline", { points: pts, fill: "none", stroke: "#c40", "stroke-width": 2 }));
    for (const p of r.points) {
      svg.appendChild(el("circle", { cx: x(p.delta), cy: y(p.success_rate), r: 3, fill: "#c40" }));
    }
    out.innerHTML = "<p>Share of trials with the true topology, by noise level.</p>";
    out.appendChild(svg);
  } catch (e) {
    fail(out, e);
  }
}

await init();
$("run-analyze").onclick = runAnalyze;
$("run-counter").onclick = runCounter;
$("run-perturb").onclick = runPerturb;
runAnalyze();

import init, { clusterSynthetic, simulateScenario, isolationSweep } from "./pkg/metaregion_demo.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"];
const SHAPES = ["circle", "square", "diamond", "triangle"];

const $ = (sel, root = document) => root.querySelector(sel);
const num = (box, name) => Number($(`[name=${name}]`, box).value);

function network() {
  const box = $("#cluster");
  return [num(box, "n"), num(box, "blocks"), num(box, "seed")];
}

// Runs an export and shows its error in place of the output.
function guarded(box, fn) {
  try {
    fn();
  } catch (e) {
    $(".plot", box).innerHTML = `<p class="error">${e.message ?? e}</p>`;
  }
}

function marker(shape, x, y, color) {
  const r = 6;
  switch (shape) {
    case "square":
      return `<rect x="${x - r}" y="${y - r}" width="${2 * r}" height="${2 * r}" fill="${color}"/>`;
    case "diamond":
      return `<polygon points="${x},${y - r} ${x + r},${y} ${x},${y + r} ${x - r},${y}" fill="${color}"/>`;
    case "triangle":
      return `<polygon points="${x},${y - r} ${x + r},${y + r} ${x - r},${y + r}" fill="${color}"/>`;
    default:
      return `<circle cx="${x}" cy="${y}" r="${r}" fill="${color}"/>`;
  }
}

// Colour is the found cluster, shape the planted block.
function scatter(cities) {
  const w = 520, h = 420, pad = 20;
  const lons = cities.map(c => c.lon), lats = cities.map(c => c.lat);
  const [x0, x1] = [Math.min(...lons), Math.max(...lons)];
  const [y0, y1] = [Math.min(...lats), Math.max(...lats)];
  const sx = v => pad + (w - 2 * pad) * (x1 > x0 ? (v - x0) / (x1 - x0) : 0.5);
  const sy = v => h - pad - (h - 2 * pad) * (y1 > y0 ? (v - y0) / (y1 - y0) : 0.5);
  const marks = cities.map(c =>
    `<g><title>${c.name} (pop ${c.population}) block ${c.planted} → cluster ${c.label}</title>` +
    marker(SHAPES[c.planted % SHAPES.length], sx(c.lon), sy(c.lat), COLORS[c.label % COLORS.length]) +
    `</g>`).join("");
  return `<svg viewBox="0 0 ${w} ${h}" width="${w}" height="${h}">` +
    `<rect width="${w}" height="${h}" fill="#fafafa" stroke="#ccc"/>${marks}</svg>`;
}

function runCluster() {
  const box = $("#cluster");
  guarded(box, () => {
    const [n, blocks, seed] = network();
    const r = JSON.parse(clusterSynthetic(n, blocks, num(box, "k"), seed, num(box, "restarts")));
    $(".plot", box).innerHTML = scatter(r.cities);
    $(".stats", box).textContent = [
      `NCut            ${r.ncut.toFixed(4)}`,
      `spectral bound  ${r.bound.toFixed(4)}`,
      `quality ratio   ${r.quality_ratio.toFixed(4)}`,
      `best found      ${r.stability} / ${r.restarts} restarts`,
      `misplaced       ${r.misplaced} of ${r.cities.length} cities`,
      ``,
      `smallest eigenvalues`,
      ...r.eigenvalues.slice(0, 8).map((v, i) => `  λ${i + 1} = ${v.toFixed(5)}`),
    ].join("\n");
  });
}

function runScenario() {
  const box = $("#scenario");
  guarded(box, () => {
    const [n, blocks, seed] = network();
    const r = JSON.parse(simulateScenario(n, blocks, seed, num(box, "r0"),
      num(box, "level"), num(box, "horizon")));
    $(".plot", box).innerHTML = r.svg;
  });
}

function runSweep() {
  const box = $("#sweep");
  guarded(box, () => {
    const [n, blocks, seed] = network();
    const sc = $("#scenario");
    const r = JSON.parse(isolationSweep(n, blocks, seed, num(sc, "r0"),
      num(sc, "horizon"), num(box, "steps")));
    $(".plot", box).innerHTML = r.svg;
    $(".stats", box).textContent =
      `isolation needed for R0·(1−b)² < 1: b > ${r.threshold.toFixed(4)}`;
  });
}

await init();
$("#cluster button").addEventListener("click", runCluster);
$("#scenario button").addEventListener("click", runScenario);
$("#sweep button").addEventListener("click", runSweep);
const level = $("#scenario [name=level]");
level.addEventListener("input", () => {
  $("#scenario [name=level_out]").value = Number(level.value).toFixed(2);
  runScenario();
});
runCluster();
runScenario();
runSweep();

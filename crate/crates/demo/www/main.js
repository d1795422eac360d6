// Wires the page to the wasm exports built into ./pkg (see the README).
import init, { featureListing, simulatePhi41, phi41Feature } from "./pkg/nors_demo.js";

const $ = (id) => document.getElementById(id);
let selectedKey = null;

function sample() {
  return {
    nx: Number($("nx").value),
    nt: Number($("nt").value),
    sigma: Number($("sigma").value),
    kappa: Number($("kappa").value),
    seed: Number($("seed").value) >>> 0,
  };
}

function report(err) {
  $("status").textContent = err ? String(err.message ?? err) : "";
}

// Diverging blue / white / red, symmetric about zero.
function colour(v) {
  const a = Math.min(1, Math.abs(v));
  const fade = Math.round(255 * (1 - a));
  return v >= 0 ? [255, fade, fade] : [fade, fade, 255];
}

function heatmap(canvas, values, nx, rows) {
  canvas.width = nx;
  canvas.height = rows;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(nx, rows);
  let scale = 0;
  for (const v of values) scale = Math.max(scale, Math.abs(v));
  scale = scale || 1;
  for (let i = 0; i < values.length; i++) {
    const [r, g, b] = colour(values[i] / scale);
    img.data.set([r, g, b, 255], 4 * i);
  }
  ctx.putImageData(img, 0, 0);
  return scale;
}

function simulate() {
  try {
    const s = sample();
    const u = simulatePhi41(s.nx, s.nt, s.sigma, s.kappa, s.seed);
    const scale = heatmap($("solution"), u, s.nx, s.nt + 1);
    $("solution-cap").textContent = `u(t, x), max |u| = ${scale.toPrecision(3)}`;
    if (selectedKey) showFeature(selectedKey);
    report();
  } catch (e) {
    report(e);
  }
}

function showFeature(key, notation) {
  try {
    const s = sample();
    const f = phi41Feature(key, s.nx, s.nt, s.sigma, s.kappa, s.seed);
    const scale = heatmap($("feature"), f, s.nx, s.nt + 1);
    if (notation) $("feature-cap").dataset.notation = notation;
    $("feature-cap").textContent = `${$("feature-cap").dataset.notation}, max = ${scale.toPrecision(3)}`;
    report();
  } catch (e) {
    report(e);
  }
}

function list() {
  try {
    const eq = $("equation").value;
    const rows = JSON.parse(featureListing(eq, Number($("height").value), $("mode").value));
    $("count").textContent = `${rows.length} features`;
    const body = $("rows");
    body.replaceChildren();
    for (const r of rows) {
      const tr = document.createElement("tr");
      for (const text of [r.notation, r.height, r.degree]) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.append(td);
      }
      // Only 1-d features can be evaluated on the Φ⁴₁ sample.
      if (eq !== "ns2d") {
        tr.onclick = () => {
          body.querySelectorAll("tr.sel").forEach((x) => x.classList.remove("sel"));
          tr.classList.add("sel");
          selectedKey = r.key;
          showFeature(r.key, r.notation);
        };
      }
      body.append(tr);
    }
    report();
  } catch (e) {
    report(e);
  }
}

await init();
$("simulate").onclick = simulate;
for (const id of ["equation", "height", "mode"]) $(id).onchange = list;
list();
simulate();

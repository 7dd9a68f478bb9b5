// Built with: wasm-bindgen --target web --out-dir pkg target/wasm32-unknown-unknown/release/unmix_web.wasm
import init, { Workbench } from "./pkg/unmix_web.js";

const $ = (id) => document.getElementById(id);

function plot(canvas, series, colours) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  let lo = Infinity, hi = -Infinity;
  for (const s of series) for (const v of s) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (!(hi > lo)) { lo -= 1; hi += 1; }
  series.forEach((s, j) => {
    ctx.strokeStyle = colours[j % colours.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.forEach((v, i) => {
      const x = (i / (s.length - 1)) * (width - 10) + 5;
      const y = height - 5 - ((v - lo) / (hi - lo)) * (height - 10);
      i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();
  });
}

await init();
const bench = new Workbench(BigInt(Date.now() % 1e9));
$("status").textContent = `${bench.librarySize()} library components ready`;
for (const t of Workbench.techniques().split(",")) {
  $("technique").add(new Option(t, t));
}
$("technique").value = "simplisma:offset0";

function preview() {
  const s = bench.preview(+$("cq").value * 1e6, +$("eta").value, +$("iso").value, 2 ** +$("sm").value);
  plot($("preview"), [s], ["black"]);
}
for (const id of ["cq", "eta", "iso", "sm"]) $(id).addEventListener("input", preview);
preview();

$("mix").addEventListener("click", () => {
  try {
    const out = JSON.parse(bench.mix(+$("k").value, $("model").value, +$("noise").value));
    const shades = out.spectra.map((_, i) => `hsl(${(i * 18) % 360} 60% 40%)`);
    plot($("mixture"), out.spectra, shades);
    $("kp").value = out.ids.length;
    $("status").textContent = `mixed ${out.ids.join(", ")}`;
    $("separate").disabled = false;
  } catch (e) {
    $("status").textContent = e.message ?? e;
  }
});

$("separate").addEventListener("click", () => {
  try {
    const out = JSON.parse(bench.separate($("technique").value, +$("kp").value, $("norm").value, 0n));
    const err = out.dataset_error == null ? "NA" : out.dataset_error.toExponential(3);
    $("summary").textContent =
      `${out.technique}: dataset error ${err}` +
      (out.converged ? "" : " (not converged)") +
      (out.discarded.length ? `, discarded ${out.discarded.join(", ")}` : "");
    $("pairs").innerHTML = "<tr><th>predicted</th><th>pure</th><th>lack of fit</th><th>1 − r²</th></tr>" +
      out.pairs.map((p) =>
        `<tr><td>${p.predicted}</td><td>${p.id}</td><td>${p.lack_of_fit.toExponential(3)}</td>` +
        `<td>${p.normalized_lack_of_fit.toFixed(4)}</td></tr>`).join("");
    $("overlays").replaceChildren(...out.pairs.map((p) => {
      const c = document.createElement("canvas");
      c.width = 860; c.height = 120;
      plot(c, [p.pure_spectrum, p.mapped_prediction], ["red", "black"]);
      return c;
    }));
  } catch (e) {
    $("summary").textContent = e.message ?? e;
  }
});

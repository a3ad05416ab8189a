import init, { Bench, weigh } from "./pkg/camweight_web.js";

const $ = (id) => document.getElementById(id);
const SIZE = 64;
let bench = null;

function paint(canvas, rgba) {
  const ctx = canvas.getContext("2d");
  ctx.putImageData(new ImageData(new Uint8ClampedArray(rgba), SIZE, SIZE), 0, 0);
}

function rebuild() {
  bench = new Bench(Number($("seed").value) >>> 0, Number($("sources").value));
  redraw();
}

function redraw() {
  const az = Number($("azimuth").value);
  const el = Number($("elevation").value);
  $("azimuth-out").textContent = az;
  $("elevation-out").textContent = el;
  try {
    const frame = bench.frame(az, el, $("scheme").value, SIZE);
    paint($("render"), frame.render_rgba());
    paint($("truth"), frame.truth_rgba());
    const psnr = frame.psnr();
    $("metrics").textContent =
      `PSNR ${Number.isFinite(psnr) ? psnr.toFixed(2) + " dB" : "∞"} · SSIM ${frame.ssim().toFixed(4)}`;
    $("weights").innerHTML = Array.from(frame.weights())
      .map((w, i) => `<span>w<sub>${i}</sub> = ${w.toFixed(3)}</span>`)
      .join("");
    $("rig").value = bench.rig_json(az, el);
    frame.free();
  } catch (e) {
    $("metrics").innerHTML = `<span class="error">${e}</span>`;
  }
}

await init();
for (const id of ["seed", "sources"]) $(id).addEventListener("change", rebuild);
for (const id of ["azimuth", "elevation", "scheme"]) $(id).addEventListener("input", redraw);
$("weigh").addEventListener("click", () => {
  try {
    $("weigh-out").textContent = weigh($("rig").value, $("scheme").value);
  } catch (e) {
    $("weigh-out").textContent = String(e);
  }
});
rebuild();

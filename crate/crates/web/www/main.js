import init, { Demo } from "./pkg/dct_recover_web.js";

const $ = (id) => document.getElementById(id);
let demo = null;

function paint(id, rgba) {
  const canvas = $(id);
  canvas.width = demo.width();
  canvas.height = demo.height();
  const data = new ImageData(new Uint8ClampedArray(rgba), demo.width(), demo.height());
  canvas.getContext("2d").putImageData(data, 0, 0);
}

function clear(id) {
  const canvas = $(id);
  canvas.getContext("2d").clearRect(0, 0, canvas.width, canvas.height);
}

function report(fn) {
  $("error").textContent = "";
  try {
    fn();
  } catch (e) {
    $("error").textContent = String(e.message || e);
  }
}

function loaded(next) {
  demo = next;
  paint("original", demo.originalRgba());
  clear("damaged");
  clear("recovered");
  $("stats").textContent = `${demo.width()}x${demo.height()} pixels`;
  $("erase").disabled = false;
  $("recover-lp").disabled = true;
  $("recover-scan").disabled = true;
}

async function fromFile(file) {
  const bytes = new Uint8Array(await file.arrayBuffer());
  if (file.name.toLowerCase().endsWith(".pgm")) {
    return Demo.fromFile(bytes);
  }
  // let the browser decode anything else
  const bitmap = await createImageBitmap(file);
  const canvas = new OffscreenCanvas(bitmap.width, bitmap.height);
  const ctx = canvas.getContext("2d");
  ctx.drawImage(bitmap, 0, 0);
  const img = ctx.getImageData(0, 0, bitmap.width, bitmap.height);
  return new Demo(img.width, img.height, new Uint8Array(img.data.buffer));
}

function sample() {
  const n = 96;
  const rgba = new Uint8Array(n * n * 4);
  for (let r = 0; r < n; r++) {
    for (let c = 0; c < n; c++) {
      const d = Math.hypot(r - 40, c - 55);
      const v = 60 + 1.2 * c + (d < 22 ? 70 : 0) + 20 * Math.sin(r / 6);
      const i = 4 * (r * n + c);
      rgba[i] = rgba[i + 1] = rgba[i + 2] = Math.max(0, Math.min(255, v));
      rgba[i + 3] = 255;
    }
  }
  return new Demo(n, n, rgba);
}

function fmt(q) {
  return `PSNR ${q.psnr.toFixed(2)} dB, shifted PSNR ${q.shifted_psnr.toFixed(2)} dB, SSIM ${q.ssim.toFixed(4)}`;
}

function recover(method) {
  report(() => {
    const t0 = performance.now();
    const out = JSON.parse(demo.recover(method));
    const ms = performance.now() - t0;
    paint("recovered", demo.recoveredRgba());
    $("recovered-caption").textContent = `recovered (${method})`;
    const lines = [
      `U = ${out.unknowns}, ${method}, ${ms.toFixed(0)} ms`,
      `damaged:   ${fmt(out.damaged_quality)}`,
      `recovered: ${fmt(out.quality)}`,
      `boundary variation ${out.boundary_variation.toFixed(1)}`,
    ];
    if (out.iterations !== null) {
      lines.push(`LP objective ${out.objective.toFixed(1)} after ${out.iterations} iterations`);
    }
    $("stats").textContent = lines.join("\n");
  });
}

await init();

$("file").addEventListener("change", async (e) => {
  const file = e.target.files[0];
  if (!file) return;
  try {
    loaded(await fromFile(file));
  } catch (err) {
    $("error").textContent = String(err.message || err);
  }
});
$("sample").addEventListener("click", () => report(() => loaded(sample())));
$("count").addEventListener("input", (e) => {
  $("count-out").textContent = e.target.value;
});
$("erase").addEventListener("click", () =>
  report(() => {
    const count = Number($("count").value);
    paint("damaged", demo.erase(count));
    clear("recovered");
    $("recover-lp").disabled = false;
    $("recover-scan").disabled = count !== 1;
  }),
);
$("recover-lp").addEventListener("click", () => recover("lp"));
$("recover-scan").addEventListener("click", () => recover("scan"));

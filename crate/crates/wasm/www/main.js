import init, { improve_point, psi_curve_svg, preset_risk_svg, preset_risk_csv } from "./pkg/orderest_wasm.js";

const $ = (id) => document.getElementById(id);

function show(el, fn) {
  el.classList.remove("error");
  try {
    return fn();
  } catch (err) {
    el.classList.add("error");
    el.textContent = String(err);
  }
}

const PRESETS = [..."abcdefgh"].map((c) => "fig1" + c).concat([..."abcdef"].map((c) => "fig2" + c));

async function main() {
  await init();

  for (const name of PRESETS) {
    $("sim-preset").add(new Option(name, name));
  }

  $("imp-run").onclick = () => {
    const out = $("imp-out");
    show(out, () => {
      out.textContent = improve_point($("imp-model").value, $("imp-key").value,
        Number($("imp-x1").value), Number($("imp-x2").value));
    });
  };

  $("psi-run").onclick = () => {
    const out = $("psi-out");
    show(out, () => {
      const lambdas = Float64Array.from($("psi-lambdas").value.split(",").map(Number));
      out.innerHTML = psi_curve_svg($("psi-model").value, $("psi-target").value,
        Number($("psi-tmin").value), Number($("psi-tmax").value), lambdas);
    });
  };

  $("sim-run").onclick = () => {
    const out = $("sim-out");
    const link = $("sim-csv");
    link.hidden = true;
    show(out, () => {
      const name = $("sim-preset").value;
      const n = Number($("sim-n").value);
      const seed = BigInt($("sim-seed").value);
      out.innerHTML = preset_risk_svg(name, n, seed);
      const csv = preset_risk_csv(name, n, seed);
      link.href = URL.createObjectURL(new Blob([csv], { type: "text/csv" }));
      link.download = name + ".csv";
      link.hidden = false;
    });
  };

  $("imp-run").onclick();
}

main();

/** Browser entry point: builds the page and binds it to the controller.
 *
 * Everything pixel-shaped stays on the server; this file only turns
 * controller snapshots into DOM updates. Keep logic out of here so the
 * behaviour stays testable without a browser.
 */

import { TunerClient } from "./api.js";
import { sparklineGeometry } from "./sparkline.js";
import {
  FILTER_U_MAX,
  SPEED_STEP,
  THETA_STEP,
  type TunerState,
} from "./state.js";
import { TunerController, type TunerView } from "./tuner.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

function slider(
  id: string,
  min: number,
  max: number,
  step: number,
  value: number,
): HTMLInputElement {
  return el("input", {
    id,
    type: "range",
    min: String(min),
    max: String(max),
    step: String(step),
    value: String(value),
  });
}

function numberInput(id: string, value: number, step: number): HTMLInputElement {
  return el("input", {
    id,
    type: "number",
    step: String(step),
    value: String(value),
  });
}

interface Pane {
  img: HTMLImageElement;
  glv: HTMLElement;
  note: HTMLElement;
  url: string | null;
}

function pane(title: string): { root: HTMLElement; pane: Pane } {
  const img = el("img", { alt: title });
  const glv = el("code", {}, ["-"]);
  const note = el("p", { class: "note" });
  const root = el("figure", { class: "pane" }, [
    el("figcaption", {}, [title, " ", glv]),
    img,
    note,
  ]);
  return { root, pane: { img, glv, note, url: null } };
}

function showBlob(p: Pane, blob: Blob | null, glv: number | null, note = "") {
  if (p.url !== null) {
    URL.revokeObjectURL(p.url);
    p.url = null;
  }
  if (blob !== null) {
    p.url = URL.createObjectURL(blob);
    p.img.src = p.url;
    p.img.hidden = false;
  } else {
    p.img.removeAttribute("src");
    p.img.hidden = true;
  }
  p.glv.textContent = glv === null ? "-" : glv.toPrecision(6);
  p.note.textContent = note;
}

function fmt(x: number, digits: number): string {
  return x.toFixed(digits).replace(/\.?0+$/, "") || "0";
}

async function boot(): Promise<void> {
  // same-origin by default; ?api=http://host:port points elsewhere
  const apiBase = new URLSearchParams(location.search).get("api") ?? "";
  const client = new TunerClient(apiBase.replace(/\/$/, ""));
  const meta = await client.meta();
  const controller = new TunerController(client, meta);

  const theta = slider("theta", 0, 360, THETA_STEP, 0);
  const speed = slider("speed", 0, 1.0, SPEED_STEP, 0);
  const thetaOut = el("output", {}, ["0"]);
  const speedOut = el("output", {}, ["0"]);
  const filterOn = el("input", { id: "filter-on", type: "checkbox" });
  const filterU = slider("filter-u", 0, FILTER_U_MAX, 1, 15);
  const filterUOut = el("output", {}, ["15"]);
  const winFrom = numberInput("win-from", 0, 1);
  const winTo = numberInput("win-to", meta.n_frames - 1, 1);
  const busy = el("span", { class: "busy", hidden: "" }, ["rendering"]);
  const banner = el("div", { class: "banner", role: "alert", hidden: "" });

  const plainPane = pane("integral");
  const filteredPane = pane("integral, streaks suppressed");

  const spark = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  spark.setAttribute("viewBox", "0 0 240 48");
  spark.setAttribute("class", "spark");
  const sparkPath = document.createElementNS(
    "http://www.w3.org/2000/svg",
    "path",
  );
  const sparkDot = document.createElementNS(
    "http://www.w3.org/2000/svg",
    "circle",
  );
  sparkDot.setAttribute("r", "2.5");
  spark.append(sparkPath, sparkDot);

  const boundsLo = numberInput("bounds-lo", 0, 1);
  const boundsHi = numberInput("bounds-hi", 360, 1);
  const boundsSpeed = numberInput("bounds-speed", 1.0, 0.05);
  const mode = el("select", { id: "mode" }, [
    el("option", { value: "constant" }, ["constant velocity"]),
    el("option", { value: "stepwise" }, ["per-frame steps"]),
  ]);
  const runBtn = el("button", { id: "run" }, ["estimate motion"]);
  const traceList = el("ol", { class: "trace" });

  const label = (text: string, ...nodes: Node[]) =>
    el("label", {}, [text, " ", ...nodes]);

  document.body.append(
    el("main", {}, [
      el("h1", {}, [`${meta.n_frames} frames, ${meta.width}x${meta.height}`]),
      banner,
      el("section", { class: "controls" }, [
        label("direction (deg) ", theta, thetaOut),
        label("speed (m/s) ", speed, speedOut),
        label("suppress streaks ", filterOn),
        label("direction uncertainty (deg) ", filterU, filterUOut),
        label("frames ", winFrom, el("span", {}, [" to "]), winTo),
        busy,
      ]),
      el("section", { class: "panes" }, [plainPane.root, filteredPane.root]),
      el("section", { class: "focus" }, [
        el("h2", {}, ["focus score history"]),
        spark,
      ]),
      el("section", { class: "estimate" }, [
        el("h2", {}, ["automatic estimate"]),
        label("direction from ", boundsLo),
        label("to ", boundsHi),
        label("max speed ", boundsSpeed),
        label("model ", mode),
        runBtn,
        traceList,
      ]),
    ]),
  );

  const syncControls = (s: TunerState) => {
    theta.value = String(s.thetaDeg);
    thetaOut.textContent = fmt(s.thetaDeg, 2);
    speed.max = String(s.speedMax);
    speed.value = String(s.speedMps);
    speedOut.textContent = fmt(s.speedMps, 3);
    filterOn.checked = s.filterOn;
    filterU.value = String(s.filterUDeg);
    filterUOut.textContent = fmt(s.filterUDeg, 1);
    filterU.disabled = !s.filterOn;
    winFrom.value = String(s.windowFrom);
    winTo.value = String(s.windowTo);
  };

  controller.subscribe((v: TunerView) => {
    syncControls(v.state);
    busy.hidden = !v.inFlight;
    banner.hidden = v.banner === null;
    banner.textContent = v.banner ?? "";
    runBtn.disabled = v.jobRunning;
    runBtn.textContent = v.jobRunning ? "estimating..." : "estimate motion";

    if (v.shown !== null) {
      showBlob(plainPane.pane, v.shown.plain.png, v.shown.plain.glv);
      if (v.shown.filtered !== null) {
        showBlob(filteredPane.pane, v.shown.filtered.png, v.shown.filtered.glv);
      } else {
        showBlob(filteredPane.pane, null, null, "enable streak suppression");
      }
    }

    const geom = sparklineGeometry([...v.glvLog], 240, 48);
    if (geom === null) {
      sparkPath.removeAttribute("d");
      sparkDot.setAttribute("r", "0");
    } else {
      sparkPath.setAttribute("d", geom.path);
      sparkDot.setAttribute("cx", String(geom.maxX));
      sparkDot.setAttribute("cy", String(geom.maxY));
      sparkDot.setAttribute("r", "2.5");
    }

    traceList.replaceChildren(
      ...v.trace.map((s) =>
        el("li", {}, [
          `step ${s.step}: ${s.theta_deg.toFixed(2)} deg, ` +
            `${s.speed_mps.toFixed(3)} m/s (glv ${s.glv.toExponential(3)}, ` +
            `${s.evals} evals)`,
        ]),
      ),
    );
  });

  theta.addEventListener("input", () =>
    controller.setParams({ thetaDeg: Number(theta.value) }),
  );
  speed.addEventListener("input", () =>
    controller.setParams({ speedMps: Number(speed.value) }),
  );
  filterOn.addEventListener("change", () =>
    controller.setParams({ filterOn: filterOn.checked }),
  );
  filterU.addEventListener("input", () =>
    controller.setParams({ filterUDeg: Number(filterU.value) }),
  );
  const windowChanged = () =>
    controller.setParams({
      windowFrom: Number(winFrom.value),
      windowTo: Number(winTo.value),
    });
  winFrom.addEventListener("change", windowChanged);
  winTo.addEventListener("change", windowChanged);

  runBtn.addEventListener("click", () => {
    void controller.runAutoEstimate(
      mode.value === "stepwise" ? "stepwise" : "constant",
      {
        thetaLoDeg: Number(boundsLo.value),
        thetaHiDeg: Number(boundsHi.value),
        speedMaxMps: Number(boundsSpeed.value),
      },
    );
  });

  // first paint
  controller.setParams({});
}

void boot().catch((err) => {
  const msg = err instanceof Error ? err.message : String(err);
  document.body.append(
    el("div", { class: "banner", role: "alert" }, [
      `could not reach the tuning service: ${msg}`,
    ]),
  );
});

export { boot };

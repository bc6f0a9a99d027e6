/**
 * Explorer wiring: connects the engine client, canvas, drag controller,
 * sliders and the mapping editor to the DOM in index.html.
 */

import { EngineClient, SocketLike } from "./client.js";
import { DragController } from "./drag.js";
import { RouteDraft, draftToRoute } from "./protocol.js";
import { DragState, Viewport, renderMeters, renderScene, screenToWorld } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const canvas = el<HTMLCanvasElement>("scene");
const metersCanvas = el<HTMLCanvasElement>("meters");
const ctx = canvas.getContext("2d")!;
const metersCtx = metersCanvas.getContext("2d")!;

const urlInput = el<HTMLInputElement>("engine-url");
const connectButton = el<HTMLButtonElement>("connect");
const statusLabel = el<HTMLSpanElement>("status");
const readout = el<HTMLSpanElement>("readout");
const heightSlider = el<HTMLInputElement>("height");
const heightLabel = el<HTMLSpanElement>("height-label");
const mixSlider = el<HTMLInputElement>("mix");
const mixLabel = el<HTMLSpanElement>("mix-label");
const routesBody = el<HTMLTableSectionElement>("routes");
const routeError = el<HTMLDivElement>("route-error");
const addRouteButton = el<HTMLButtonElement>("add-route");

const view: Viewport = { width: canvas.width, height: canvas.height, pxPerMeter: 110 };

let client: EngineClient | null = null;
let drag: DragController | null = null;

const makeBrowserSocket = (url: string): SocketLike =>
  new WebSocket(url) as unknown as SocketLike;

function connect(): void {
  client?.close();
  client = new EngineClient(urlInput.value, makeBrowserSocket, () => performance.now());
  drag = new DragController(
    (cmd) => client!.trySend(cmd),
    100,
    Number(heightSlider.value),
    () => performance.now(),
  );
  client.onChange = refreshSidebar;
  client.connect();
}

connectButton.addEventListener("click", connect);

// -- canvas pointer handling --------------------------------------------------

function pointerWorld(event: PointerEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return screenToWorld(view, event.clientX - rect.left, event.clientY - rect.top);
}

canvas.addEventListener("pointerdown", (event) => {
  if (!drag) return;
  canvas.setPointerCapture(event.pointerId);
  const p = pointerWorld(event);
  drag.start(p.x, p.y);
});
canvas.addEventListener("pointermove", (event) => {
  if (!drag) return;
  const p = pointerWorld(event);
  drag.move(p.x, p.y);
});
canvas.addEventListener("pointerup", () => drag?.end());
canvas.addEventListener("pointercancel", () => drag?.end());

heightSlider.addEventListener("input", () => {
  heightLabel.textContent = `${Number(heightSlider.value).toFixed(2)} m`;
  drag?.setHeight(Number(heightSlider.value));
});

mixSlider.addEventListener("input", () => {
  const value = Number(mixSlider.value);
  mixLabel.textContent = value.toFixed(2);
  client?.request({ cmd: "set_mix", value }).catch(() => {});
});

// -- mapping editor -------------------------------------------------------------

function draftFromForm(): RouteDraft {
  return {
    source: el<HTMLInputElement>("f-source").value,
    inLo: el<HTMLInputElement>("f-in-lo").value,
    inHi: el<HTMLInputElement>("f-in-hi").value,
    curve: el<HTMLSelectElement>("f-curve").value,
    curveK: el<HTMLInputElement>("f-k").value,
    outLo: el<HTMLInputElement>("f-out-lo").value,
    outHi: el<HTMLInputElement>("f-out-hi").value,
    smoothMs: el<HTMLInputElement>("f-smooth").value,
    sink: el<HTMLInputElement>("f-sink").value,
  };
}

addRouteButton.addEventListener("click", () => {
  const { route, error } = draftToRoute(draftFromForm());
  if (error) {
    routeError.textContent = error; // blocked locally, nothing is sent
    return;
  }
  routeError.textContent = "";
  client
    ?.request({ cmd: "set_route", route: route! })
    .catch((err) => (routeError.textContent = String(err.message ?? err)));
});

function curveLabel(curve: unknown): string {
  if (typeof curve === "string") return curve;
  const c = curve as { type: string; k: number };
  return `${c.type}(k=${c.k})`;
}

function refreshSidebar(): void {
  if (!client) return;
  statusLabel.textContent = client.status;
  statusLabel.className = client.status;
  const snap = client.snapshot;
  if (!snap) {
    readout.textContent = "";
    routesBody.replaceChildren();
    return;
  }
  readout.textContent =
    `proximity ${snap.proximity.toFixed(2)} m | ` +
    `tcp speed ${snap.tcp_speed.toFixed(2)} m/s | ` +
    `tick ${snap.tick}`;
  mixLabel.textContent = snap.blend_mix.toFixed(2);

  routesBody.replaceChildren(
    ...snap.mapping.routes.map((route) => {
      const row = document.createElement("tr");
      const remove = document.createElement("button");
      remove.textContent = "x";
      remove.addEventListener("click", () =>
        client!.request({ cmd: "delete_route", sink: route.sink }).catch(() => {}),
      );
      for (const text of [
        route.source,
        `[${route.in.join(", ")}]`,
        curveLabel(route.curve),
        `[${route.out.join(", ")}]`,
        route.sink,
      ]) {
        const cell = document.createElement("td");
        cell.textContent = text;
        row.appendChild(cell);
      }
      const actions = document.createElement("td");
      actions.appendChild(remove);
      row.appendChild(actions);
      return row;
    }),
  );
}

// -- frame loop -------------------------------------------------------------------

function frame(): void {
  const dragState: DragState = drag
    ? { active: drag.active, worldX: drag.worldX, worldY: drag.worldY, heightZ: drag.heightZ }
    : { active: false, worldX: 0, worldY: 0, heightZ: 0.5 };
  renderScene(ctx, view, client?.snapshot ?? null, dragState, {
    stalenessMs: client?.staleness() ?? Infinity,
    connected: client?.status === "open",
  });
  renderMeters(metersCtx, metersCanvas.width, metersCanvas.height, client?.snapshot?.meters ?? []);
  requestAnimationFrame(frame);
}

heightLabel.textContent = `${Number(heightSlider.value).toFixed(2)} m`;
connect();
requestAnimationFrame(frame);

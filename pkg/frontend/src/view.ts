/**
 * Top-down 2D scene: arm links, TCP, collaborator, speaker ring,
 * proximity radius. Rendering is a pure function of the latest snapshot
 * plus local drag state; no state accumulates between frames.
 */

import { Snapshot } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  /** canvas pixels per world meter */
  pxPerMeter: number;
}

export interface DragState {
  active: boolean;
  worldX: number;
  worldY: number;
  heightZ: number;
}

/** Robot base sits at the canvas center; +x right, +y up (screen y flips). */
export function worldToScreen(view: Viewport, x: number, y: number): { x: number; y: number } {
  return {
    x: view.width / 2 + x * view.pxPerMeter,
    y: view.height / 2 - y * view.pxPerMeter,
  };
}

export function screenToWorld(view: Viewport, px: number, py: number): { x: number; y: number } {
  return {
    x: (px - view.width / 2) / view.pxPerMeter,
    y: (view.height / 2 - py) / view.pxPerMeter,
  };
}

export const STALE_AFTER_MS = 1000;

export interface SceneOptions {
  stalenessMs: number;
  connected: boolean;
}

function circle(ctx: CanvasRenderingContext2D, x: number, y: number, r: number): void {
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  view: Viewport,
  snapshot: Snapshot | null,
  drag: DragState,
  opts: SceneOptions,
): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, view.width, view.height);

  if (!opts.connected || snapshot === null) {
    ctx.fillStyle = "#8899aa";
    ctx.font = "16px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillText("disconnected", view.width / 2, view.height / 2);
    return;
  }

  // speaker ring (drawn at a fixed 2 m radius; azimuths from the engine)
  const ringRadius = 2.0;
  ctx.strokeStyle = "#2a3340";
  ctx.setLineDash([4, 6]);
  const center = worldToScreen(view, 0, 0);
  circle(ctx, center.x, center.y, ringRadius * view.pxPerMeter);
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.fillStyle = "#4d5c70";
  for (const deg of snapshot.speakers.ring_deg) {
    const a = (deg * Math.PI) / 180;
    const p = worldToScreen(view, ringRadius * Math.cos(a), ringRadius * Math.sin(a));
    circle(ctx, p.x, p.y, 6);
    ctx.fill();
  }
  if (snapshot.speakers.point_source) {
    ctx.strokeStyle = "#4d5c70";
    circle(ctx, center.x, center.y, 8);
    ctx.stroke();
  }

  // arm: base -> each link origin, projected to the horizontal plane
  const points = [center];
  for (const link of snapshot.links) {
    points.push(worldToScreen(view, link.pos[0], link.pos[1]));
  }
  ctx.strokeStyle = "#d8a03c";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(points[0].x, points[0].y);
  for (const p of points.slice(1)) ctx.lineTo(p.x, p.y);
  ctx.stroke();
  ctx.lineWidth = 1;
  ctx.fillStyle = "#9a7226";
  for (const p of points.slice(0, -1)) {
    circle(ctx, p.x, p.y, 3);
    ctx.fill();
  }

  // TCP marker
  const tcp = worldToScreen(view, snapshot.tcp.pos[0], snapshot.tcp.pos[1]);
  ctx.fillStyle = snapshot.near_singularity ? "#e05555" : "#f0c75e";
  circle(ctx, tcp.x, tcp.y, 7);
  ctx.fill();

  // collaborator: local drag position wins while dragging
  const cx = drag.active ? drag.worldX : snapshot.collaborator[0];
  const cy = drag.active ? drag.worldY : snapshot.collaborator[1];
  const collab = worldToScreen(view, cx, cy);
  ctx.strokeStyle = "#5fb0e7";
  ctx.setLineDash([3, 4]);
  circle(ctx, collab.x, collab.y, snapshot.proximity * view.pxPerMeter);
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.fillStyle = "#5fb0e7";
  circle(ctx, collab.x, collab.y, 8);
  ctx.fill();

  if (opts.stalenessMs > STALE_AFTER_MS) {
    ctx.fillStyle = "#e0b050";
    ctx.font = "14px system-ui, sans-serif";
    ctx.textAlign = "left";
    ctx.fillText(`stale: no snapshot for ${(opts.stalenessMs / 1000).toFixed(1)} s`, 12, 22);
  }
}

/** Meter bars: one per output channel, log scaled into [0,1]. */
export function renderMeters(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  meters: number[],
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, width, height);
  const n = meters.length;
  if (n === 0) return;
  const barWidth = width / n;
  for (let i = 0; i < n; i++) {
    const db = 20 * Math.log10(Math.max(meters[i], 1e-6));
    const norm = Math.min(Math.max((db + 60) / 60, 0), 1);
    const barHeight = norm * (height - 14);
    ctx.fillStyle = norm > 0.9 ? "#e05555" : "#58c470";
    ctx.fillRect(i * barWidth + 3, height - 12 - barHeight, barWidth - 6, barHeight);
    ctx.fillStyle = "#8899aa";
    ctx.font = "10px system-ui, sans-serif";
    ctx.textAlign = "center";
    const label = i === n - 1 ? "pt" : String(i);
    ctx.fillText(label, i * barWidth + barWidth / 2, height - 2);
  }
}

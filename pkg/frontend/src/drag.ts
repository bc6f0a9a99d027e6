/**
 * Pointer-drag of the collaborator marker, throttled so a continuous
 * drag never exceeds the engine's control rate. Commands are dropped,
 * not queued, while disconnected; on release the collaborator simply
 * holds its last sent position.
 */

import { Command } from "./protocol.js";

export type SendFn = (command: Command) => boolean;

export class DragController {
  active = false;
  worldX = 0;
  worldY = 0;
  heightZ: number;
  sentCount = 0;
  droppedCount = 0;

  private lastSentAt = -Infinity;
  private readonly minIntervalMs: number;

  constructor(
    private send: SendFn,
    maxRateHz = 100,
    heightZ = 0.5,
    private now: () => number = () => Date.now(),
  ) {
    this.minIntervalMs = 1000 / maxRateHz;
    this.heightZ = heightZ;
  }

  start(worldX: number, worldY: number): void {
    this.active = true;
    this.move(worldX, worldY);
  }

  move(worldX: number, worldY: number): void {
    if (!this.active) return;
    this.worldX = worldX;
    this.worldY = worldY;
    this.maybeSend();
  }

  /** Height comes from the side slider; sends immediately (throttled). */
  setHeight(z: number): void {
    this.heightZ = z;
    this.maybeSend(true);
  }

  end(): void {
    if (!this.active) return;
    // final position lands even if the throttle just fired
    this.forceSend();
    this.active = false;
  }

  private maybeSend(evenIfIdle = false): void {
    if (!this.active && !evenIfIdle) return;
    const t = this.now();
    if (t - this.lastSentAt < this.minIntervalMs) return;
    this.forceSend();
  }

  private forceSend(): void {
    const ok = this.send({
      cmd: "set_collaborator",
      pos: [this.worldX, this.worldY, this.heightZ],
    });
    if (ok) {
      this.lastSentAt = this.now();
      this.sentCount++;
    } else {
      this.droppedCount++;
    }
  }
}

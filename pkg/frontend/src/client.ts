/**
 * WebSocket client for the engine control API: request/reply with ids,
 * the state stream, and reconnect with backoff. The socket constructor is
 * injectable so tests can drive the client with a fake or a node 'ws'.
 */

import { Command, ErrorReply, PROTOCOL_VERSION, Snapshot } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionStatus = "connecting" | "open" | "closed";

interface PendingRequest {
  resolve: (data: unknown) => void;
  reject: (error: Error) => void;
}

export class ApiError extends Error {
  constructor(public field: string, public reason: string) {
    super(`${field}: ${reason}`);
  }
}

export class EngineClient {
  status: ConnectionStatus = "closed";
  snapshot: Snapshot | null = null;
  /** ms timestamp (performance.now clock) of the last snapshot received. */
  lastSnapshotAt = 0;
  onChange: (() => void) | null = null;

  private socket: SocketLike | null = null;
  private nextId = 1;
  private pending = new Map<number, PendingRequest>();
  private reconnectDelayMs = 500;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private closedByUser = false;

  constructor(
    private url: string,
    private makeSocket: SocketFactory,
    private now: () => number = () => Date.now(),
  ) {}

  connect(): void {
    this.closedByUser = false;
    this.open();
  }

  private open(): void {
    this.status = "connecting";
    this.notify();
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.status = "open";
      this.reconnectDelayMs = 500;
      // a fresh subscription restores a consistent view after reconnect
      this.request({ cmd: "subscribe_meters", rate_hz: 15 }).catch(() => {});
      this.notify();
    };
    socket.onclose = () => {
      this.status = "closed";
      this.snapshot = null; // stale view must not survive a disconnect
      for (const pending of this.pending.values()) {
        pending.reject(new Error("connection closed"));
      }
      this.pending.clear();
      this.notify();
      if (!this.closedByUser) {
        this.reconnectTimer = setTimeout(() => this.open(), this.reconnectDelayMs);
        this.reconnectDelayMs = Math.min(this.reconnectDelayMs * 2, 5000);
      }
    };
    socket.onmessage = (event) => this.handleMessage(String(event.data));
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.socket?.close();
  }

  /** Send a command and await the engine's reply. */
  request(command: Command): Promise<unknown> {
    if (this.status !== "open" || this.socket === null) {
      return Promise.reject(new Error("not connected"));
    }
    const id = this.nextId++;
    const message = JSON.stringify({ v: PROTOCOL_VERSION, id, ...command });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.socket!.send(message);
    });
  }

  /** Fire-and-forget send used on the drag path: drops (returns false)
   * when disconnected rather than queueing unboundedly. */
  trySend(command: Command): boolean {
    if (this.status !== "open" || this.socket === null) return false;
    const id = this.nextId++;
    this.pending.set(id, { resolve: () => {}, reject: () => {} });
    this.socket.send(JSON.stringify({ v: PROTOCOL_VERSION, id, ...command }));
    return true;
  }

  private handleMessage(raw: string): void {
    let message: Record<string, unknown>;
    try {
      message = JSON.parse(raw) as Record<string, unknown>;
    } catch {
      return;
    }
    if (message.stream === "state") {
      this.snapshot = message.data as Snapshot;
      this.lastSnapshotAt = this.now();
      this.notify();
      return;
    }
    const id = message.id as number;
    const pending = this.pending.get(id);
    if (!pending) return;
    this.pending.delete(id);
    if (message.ok) {
      pending.resolve(message.data);
    } else {
      const err = (message.error ?? {}) as ErrorReply;
      pending.reject(new ApiError(err.field ?? "?", err.reason ?? "unknown error"));
    }
  }

  /** ms since the last snapshot; Infinity when none has arrived. */
  staleness(): number {
    return this.snapshot ? this.now() - this.lastSnapshotAt : Infinity;
  }

  private notify(): void {
    this.onChange?.();
  }
}

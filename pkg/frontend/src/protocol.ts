/**
 * Wire types for the engine's WebSocket control protocol (v1) and the
 * client-side route validation that mirrors the server's range rules.
 *
 * Keeping validation here means the UI never sends a route the server
 * would bounce for range errors; the shared fixtures in
 * tests/fixtures/route_validation.json are run against both sides.
 */

export const PROTOCOL_VERSION = 1;

export interface PoseDto {
  pos: number[];
  rpy: number[];
}

export type CurveDto = "linear" | { type: string; k: number };

export interface RouteDto {
  source: string;
  in: number[];
  curve: CurveDto;
  out: number[];
  smooth_ms: number;
  sink: string;
}

export interface Snapshot {
  v: number;
  seq: number;
  tick: number;
  time_s: number;
  joints: { q: number[]; qdot: number[] };
  links: PoseDto[];
  tcp: PoseDto;
  collaborator: number[];
  proximity: number;
  tcp_speed: number;
  mapping: { routes: RouteDto[] };
  meters: number[];
  blend_mix: number;
  near_singularity: boolean;
  unknown_osc: number;
  speakers: { ring_deg: number[]; point_source: boolean };
}

export type Command =
  | { cmd: "get_state" }
  | { cmd: "set_collaborator"; pos: [number, number, number] }
  | { cmd: "set_route"; route: RouteDto }
  | { cmd: "delete_route"; sink: string }
  | { cmd: "set_param"; address: string; value: number; smooth_ms?: number }
  | { cmd: "set_mix"; value: number }
  | { cmd: "subscribe_meters"; rate_hz: number };

export interface ErrorReply {
  field: string;
  reason: string;
}

const PLAIN_SIGNALS = new Set(["tcp_speed", "tcp_height", "proximity"]);
const INDEXED_SIGNALS = new Set(["joint_speed", "joint_pos"]);

/** Accepts the same signal grammar as the engine: plain names, indexed
 * joint signals, and env.<name>. Returns an error string or null. */
export function validateSignal(source: string): string | null {
  if (PLAIN_SIGNALS.has(source)) return null;
  const dot = source.indexOf(".");
  if (dot > 0) {
    const head = source.slice(0, dot);
    const tail = source.slice(dot + 1);
    if (INDEXED_SIGNALS.has(head)) {
      const idx = Number(tail);
      if (!Number.isInteger(idx) || idx < 0 || idx > 5) {
        return `joint index must be 0..5 in '${source}'`;
      }
      return null;
    }
    if (head === "env" && tail.length > 0) return null;
  }
  return `unknown signal '${source}'`;
}

/** Mirror of the server's route range rules. Returns an error string or
 * null when the route would be accepted (sink existence is server-side). */
export function validateRoute(route: RouteDto): string | null {
  const signalError = validateSignal(route.source);
  if (signalError) return signalError;
  if (!Array.isArray(route.in) || route.in.length !== 2) {
    return "'in' must be a [lo, hi] pair";
  }
  if (!Array.isArray(route.out) || route.out.length !== 2) {
    return "'out' must be a [lo, hi] pair";
  }
  const values = [...route.in, ...route.out, route.smooth_ms];
  if (values.some((v) => typeof v !== "number" || !Number.isFinite(v))) {
    return "ranges and smooth_ms must be finite numbers";
  }
  if (!(route.in[0] < route.in[1])) return "in range lo must be < hi";
  if (route.smooth_ms < 0) return "smooth_ms must be >= 0";
  if (typeof route.curve !== "string") {
    if (!["linear", "exponential", "logarithmic"].includes(route.curve.type)) {
      return `unknown curve '${route.curve.type}'`;
    }
    if (route.curve.type !== "linear" && route.curve.k === 0) {
      return "curve k must be nonzero";
    }
  } else if (route.curve !== "linear") {
    if (!["exponential", "logarithmic"].includes(route.curve)) {
      return `unknown curve '${route.curve}'`;
    }
  }
  if (!route.sink || route.sink.indexOf(".") <= 0) {
    return "sink must look like node.param";
  }
  return null;
}

/** Staged mapping-editor fields, as they come out of form inputs. */
export interface RouteDraft {
  source: string;
  inLo: string;
  inHi: string;
  curve: string;
  curveK: string;
  outLo: string;
  outHi: string;
  smoothMs: string;
  sink: string;
}

/** Build a RouteDto from form fields, or explain why not. */
export function draftToRoute(draft: RouteDraft): { route?: RouteDto; error?: string } {
  const nums: Record<string, number> = {};
  for (const [key, raw] of Object.entries({
    inLo: draft.inLo, inHi: draft.inHi, outLo: draft.outLo,
    outHi: draft.outHi, smoothMs: draft.smoothMs || "0",
  })) {
    const v = Number(raw);
    if (raw.trim() === "" || !Number.isFinite(v)) {
      return { error: `${key} must be a number` };
    }
    nums[key] = v;
  }
  let curve: CurveDto = "linear";
  if (draft.curve !== "linear") {
    const k = Number(draft.curveK || "2");
    if (!Number.isFinite(k)) return { error: "curve k must be a number" };
    curve = { type: draft.curve, k };
  }
  const route: RouteDto = {
    source: draft.source.trim(),
    in: [nums.inLo, nums.inHi],
    curve,
    out: [nums.outLo, nums.outHi],
    smooth_ms: nums.smoothMs,
    sink: draft.sink.trim(),
  };
  const error = validateRoute(route);
  return error ? { error } : { route };
}

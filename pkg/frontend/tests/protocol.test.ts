import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { RouteDto, draftToRoute, validateRoute, validateSignal } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixtures = JSON.parse(
  readFileSync(join(here, "fixtures", "route_validation.json"), "utf-8"),
) as { cases: { name: string; valid: boolean; route: RouteDto }[] };

describe("shared route validation fixtures", () => {
  for (const tc of fixtures.cases) {
    it(tc.name, () => {
      const error = validateRoute(tc.route);
      if (tc.valid) {
        expect(error).toBeNull();
      } else {
        expect(error).not.toBeNull();
      }
    });
  }
});

describe("signal grammar", () => {
  it("accepts the engine's signal names", () => {
    expect(validateSignal("tcp_speed")).toBeNull();
    expect(validateSignal("tcp_height")).toBeNull();
    expect(validateSignal("proximity")).toBeNull();
    expect(validateSignal("joint_pos.0")).toBeNull();
    expect(validateSignal("env.light")).toBeNull();
  });
  it("rejects junk", () => {
    expect(validateSignal("joint_speed.9")).not.toBeNull();
    expect(validateSignal("joint_speed.x")).not.toBeNull();
    expect(validateSignal("env.")).not.toBeNull();
    expect(validateSignal("velocity")).not.toBeNull();
  });
});

describe("draftToRoute", () => {
  const draft = {
    source: "proximity", inLo: "0", inHi: "2", curve: "linear", curveK: "",
    outLo: "0", outHi: "1", smoothMs: "50", sink: "blend.mix",
  };
  it("builds a valid route from form fields", () => {
    const { route, error } = draftToRoute(draft);
    expect(error).toBeUndefined();
    expect(route).toEqual({
      source: "proximity", in: [0, 2], curve: "linear",
      out: [0, 1], smooth_ms: 50, sink: "blend.mix",
    });
  });
  it("reports range errors without building a route", () => {
    const { route, error } = draftToRoute({ ...draft, inLo: "5" });
    expect(route).toBeUndefined();
    expect(error).toContain("lo must be < hi");
  });
  it("reports non-numeric fields", () => {
    const { error } = draftToRoute({ ...draft, outHi: "abc" });
    expect(error).toContain("outHi");
  });
  it("carries curve k through", () => {
    const { route } = draftToRoute({ ...draft, curve: "exponential", curveK: "3" });
    expect(route?.curve).toEqual({ type: "exponential", k: 3 });
  });
});

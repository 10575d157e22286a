import { describe, expect, it } from "vitest";

import {
  decodeState,
  defaultState,
  encodeState,
  FormState,
  psiRange,
  scaleDefaults,
  switchDistribution,
  validate,
  zSpec,
} from "../src/state.js";

function errorFields(state: FormState): string[] {
  return validate(state).map((e) => e.field);
}

describe("defaults", () => {
  it("starts in power mode with a two-sided test at alpha 0.01", () => {
    const s = defaultState();
    expect(s.mode).toBe("power-given-n");
    expect(s.alternative).toBe("two-sided");
    expect(s.alpha).toBe(0.01);
    expect(s.distribution).toBe("equispaced");
  });

  it("slope difference and response sd default per covariate family", () => {
    expect(scaleDefaults("normal")).toEqual({ delta: 0.5, sigma: 0.5 });
    for (const d of ["equispaced", "uniform", "exponential"] as const) {
      expect(scaleDefaults(d)).toEqual({ delta: 0.1, sigma: 0.1 });
    }
    const s = defaultState();
    expect(s.delta).toBe(0.1);
    expect(s.sigma).toBe(0.1);
  });

  it("validates clean out of the box", () => {
    expect(validate(defaultState())).toEqual([]);
  });
});

describe("switchDistribution", () => {
  it("resets parameters, re-centres psi, and refreshes untouched scales", () => {
    const s = switchDistribution(defaultState(), "normal");
    expect(s.distribution).toBe("normal");
    expect([s.param1, s.param2]).toEqual([0, 1]);
    expect(s.psi).toBe(0); // the normal median is its mean
    expect(s.delta).toBe(0.5);
    expect(s.sigma).toBe(0.5);
  });

  it("keeps scales the user has edited away from the defaults", () => {
    const edited = { ...defaultState(), delta: 0.37 };
    const s = switchDistribution(edited, "normal");
    expect(s.delta).toBe(0.37);
    expect(s.sigma).toBe(0.5); // untouched, so refreshed
  });

  it("moves psi to the new median", () => {
    expect(switchDistribution(defaultState(), "uniform").psi).toBe(0.5);
    expect(switchDistribution(defaultState(), "exponential").psi).toBeCloseTo(Math.LN2, 12);
  });
});

describe("zSpec", () => {
  it("serialises each distribution the way the service parses it", () => {
    expect(zSpec(defaultState())).toBe("equispaced");
    expect(zSpec({ ...defaultState(), distribution: "normal", param1: 5, param2: 1.5 })).toBe(
      "normal(5,1.5)",
    );
    expect(zSpec({ ...defaultState(), distribution: "uniform", param1: 0, param2: 1 })).toBe(
      "uniform(0,1)",
    );
    expect(zSpec({ ...defaultState(), distribution: "exponential", param1: 2.5 })).toBe(
      "exponential(2.5)",
    );
  });
});

describe("validate", () => {
  it("rejects a non-positive response sd", () => {
    expect(errorFields({ ...defaultState(), sigma: 0 })).toContain("sigma");
    expect(errorFields({ ...defaultState(), sigma: -1 })).toContain("sigma");
  });

  it("rejects alpha outside (0, 1)", () => {
    expect(errorFields({ ...defaultState(), alpha: 0 })).toContain("alpha");
    expect(errorFields({ ...defaultState(), alpha: 1 })).toContain("alpha");
  });

  it("flags psi outside the covariate range before any request", () => {
    const errs = validate({ ...defaultState(), psi: 1.2 });
    expect(errs.map((e) => e.field)).toContain("psi");
    expect(errs.find((e) => e.field === "psi")?.message).toMatch(/inside/);
  });

  it("accepts any real psi under a normal covariate", () => {
    const s = switchDistribution(defaultState(), "normal");
    expect(errorFields({ ...s, psi: -50 })).toEqual([]);
    expect(psiRange(s)).toEqual([-Infinity, Infinity]);
  });

  it("bounds psi by the uniform endpoints and the exponential origin", () => {
    const u = switchDistribution(defaultState(), "uniform");
    expect(errorFields({ ...u, psi: 1 })).toContain("psi"); // endpoint is outside the open range
    const e = switchDistribution(defaultState(), "exponential");
    expect(errorFields({ ...e, psi: -0.1 })).toContain("psi");
    expect(errorFields({ ...e, psi: 4 })).toEqual([]);
  });

  it("checks distribution parameters", () => {
    const n = switchDistribution(defaultState(), "normal");
    expect(errorFields({ ...n, param2: 0 })).toContain("param2");
    const u = switchDistribution(defaultState(), "uniform");
    expect(errorFields({ ...u, param1: 2, param2: 1 })).toContain("param2");
    const e = switchDistribution(defaultState(), "exponential");
    expect(errorFields({ ...e, param1: 0 })).toContain("param1");
  });

  it("requires an integer sample size of at least 12 in power mode", () => {
    expect(errorFields({ ...defaultState(), n: 11 })).toContain("n");
    expect(errorFields({ ...defaultState(), n: 20.5 })).toContain("n");
    expect(errorFields({ ...defaultState(), n: 12 })).toEqual([]);
  });

  it("requires target power in (alpha, 1) in sample-size mode", () => {
    const m = { ...defaultState(), mode: "n-given-power" as const };
    expect(errorFields({ ...m, targetPower: 0.005 })).toContain("targetPower");
    expect(errorFields({ ...m, targetPower: 1 })).toContain("targetPower");
    expect(errorFields({ ...m, targetPower: 0.85 })).toEqual([]);
  });

  it("ignores the inactive mode field", () => {
    const m = { ...defaultState(), mode: "n-given-power" as const, n: 3 };
    expect(errorFields(m)).toEqual([]);
  });

  it("rejects a fractional or negative seed", () => {
    expect(errorFields({ ...defaultState(), seed: 1.5 })).toContain("seed");
    expect(errorFields({ ...defaultState(), seed: -1 })).toContain("seed");
  });

  it("flags blank (NaN) numeric fields instead of submitting them", () => {
    expect(errorFields({ ...defaultState(), psi: NaN })).toContain("psi");
    expect(errorFields({ ...defaultState(), delta: NaN })).toContain("delta");
  });
});

describe("URL codec", () => {
  it("round-trips the default state", () => {
    const s = defaultState();
    expect(decodeState(encodeState(s))).toEqual(s);
  });

  it("round-trips a fully customised state", () => {
    const s: FormState = {
      mode: "n-given-power",
      alternative: "greater",
      alpha: 0.05,
      distribution: "normal",
      param1: 5,
      param2: 1.5,
      psi: 5.5,
      delta: 0.04,
      sigma: 0.05,
      n: 30,
      targetPower: 0.85,
      seed: 7,
    };
    expect(decodeState(encodeState(s))).toEqual(s);
    expect(decodeState("?" + encodeState(s))).toEqual(s);
  });

  it("falls back to defaults field by field on junk", () => {
    const s = decodeState("mode=sideways&alpha=abc&psi=0.7&unknown=1");
    expect(s.mode).toBe("power-given-n");
    expect(s.alpha).toBe(0.01);
    expect(s.psi).toBe(0.7);
  });

  it("ignores keys that are not form fields", () => {
    const s = decodeState("api=http%3A%2F%2Flocalhost%3A8080&n=50");
    expect(s.n).toBe(50);
    expect(s).toEqual({ ...defaultState(), n: 50 });
  });
});

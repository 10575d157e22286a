import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, PreviewPayload } from "../src/api.js";
import { verticalGapToPolyline } from "../src/plot.js";
import { formatProminent, mount } from "../src/view.js";

/** Envelope the service returns for the documented power scenario. */
const POWER_PAYLOAD = {
  power: 0.7487252154493961,
  e1: 3.2463128763539144,
  n: 100,
  z: "equispaced",
  psi: 0.6,
  delta: 0.5,
  sigma: 0.1,
  alpha: 0.01,
  alternative: "two-sided",
};

const SAMPLESIZE_PAYLOAD = {
  n: 114,
  power_at_n: 0.8501926634742582,
  target_power: 0.85,
  z: "normal(5,1.5)",
  psi: 5.5,
  delta: 0.04,
  sigma: 0.05,
  alpha: 0.01,
  alternative: "two-sided",
};

/** Noiseless service preview: the fit passes through every point. */
const NOISELESS_PREVIEW: PreviewPayload = {
  z: [
    0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85,
    0.9, 0.95, 1.0,
  ],
  y: [
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.10000000000000009,
    0.19999999999999996, 0.30000000000000004, 0.40000000000000013, 0.5, 0.6000000000000001, 0.7,
    0.8,
  ],
  fit: {
    psi_hat: 0.6,
    delta_hat: 2.000000000000001,
    segments: [
      [0.05, -1.6119898981101552e-16],
      [0.6, -1.0013672345663192e-16],
      [1.0, 0.8000000000000003],
    ],
  },
};

function ok(payload: unknown): Response {
  return { status: 200, json: async () => ({ ok: true, error: null, payload }) } as unknown as Response;
}

function refused(code: string, message: string, fields?: { field: string; message: string }[]): Response {
  return {
    status: 400,
    json: async () => ({ ok: false, error: { code, message, fields }, payload: null }),
  } as unknown as Response;
}

interface RecordedCall {
  path: string;
  body: Record<string, unknown>;
}

/** fetch stub routing on the path suffix; records every request body. */
function makeFetch(routes: Record<string, (body: Record<string, unknown>) => Response>) {
  const calls: RecordedCall[] = [];
  const fetchFn = vi.fn(async (url: string, init: RequestInit) => {
    const body = JSON.parse(init.body as string) as Record<string, unknown>;
    const path = new URL(url, "http://localhost").pathname;
    calls.push({ path, body });
    const route = routes[path];
    if (!route) throw new TypeError(`no route for ${path}`);
    return route(body);
  });
  return { calls, fetchFn: fetchFn as unknown as typeof fetch };
}

function mountApp(routes: Record<string, (body: Record<string, unknown>) => Response>) {
  const root = document.createElement("div");
  document.body.append(root);
  const { calls, fetchFn } = makeFetch(routes);
  const handle = mount(root, { client: new ApiClient("", fetchFn) });
  return { root, handle, calls, fetchFn };
}

function field(root: HTMLElement, name: string): HTMLInputElement {
  const el = root.querySelector<HTMLInputElement>(`[name="${name}"]`);
  if (!el) throw new Error(`no input ${name}`);
  return el;
}

function fill(root: HTMLElement, name: string, value: string): void {
  const el = field(root, name);
  el.value = value;
  el.dispatchEvent(new Event("input", { bubbles: true }));
}

function choose(root: HTMLElement, name: string, value: string): void {
  const el = root.querySelector<HTMLSelectElement>(`select[name="${name}"]`);
  if (!el) throw new Error(`no select ${name}`);
  el.value = value;
  el.dispatchEvent(new Event("change", { bubbles: true }));
}

function setMode(root: HTMLElement, value: string): void {
  const radio = root.querySelector<HTMLInputElement>(`input[name="mode"][value="${value}"]`);
  if (!radio) throw new Error(`no mode radio ${value}`);
  radio.checked = true;
  radio.dispatchEvent(new Event("change", { bubbles: true }));
}

function text(root: HTMLElement, sel: string): string {
  return root.querySelector(sel)?.textContent ?? "";
}

function enterPowerScenario(root: HTMLElement): void {
  fill(root, "n", "100");
  fill(root, "psi", "0.6");
  fill(root, "delta", "0.5");
  fill(root, "sigma", "0.1");
  fill(root, "alpha", "0.01");
}

beforeEach(() => {
  document.body.innerHTML = "";
  window.history.replaceState(null, "", "/");
});

describe("power scenario", () => {
  it("displays 0.749 prominently, straight from the payload", async () => {
    const { root, handle } = mountApp({
      "/api/power": () => ok(POWER_PAYLOAD),
      "/api/preview": () => ok(NOISELESS_PREVIEW),
    });
    enterPowerScenario(root);
    await handle.submit();
    expect(text(root, '[data-role="prominent"]')).toBe("0.749");
    expect(text(root, '[data-role="prominent"]')).toBe(formatProminent(POWER_PAYLOAD.power));
    expect(text(root, ".result-title")).toMatch(/power/i);
  });

  it("echoes every payload field verbatim", async () => {
    const { root, handle } = mountApp({
      "/api/power": () => ok(POWER_PAYLOAD),
      "/api/preview": () => ok(NOISELESS_PREVIEW),
    });
    enterPowerScenario(root);
    await handle.submit();
    for (const [key, value] of Object.entries(POWER_PAYLOAD)) {
      expect(text(root, `[data-echo="${key}"]`), key).toBe(String(value));
    }
    // full precision survives: the display never recomputes or truncates
    expect(text(root, '[data-echo="power"]')).toBe("0.7487252154493961");
  });

  it("posts the form exactly as typed, then previews with the same design", async () => {
    const { root, handle, calls } = mountApp({
      "/api/power": () => ok(POWER_PAYLOAD),
      "/api/preview": () => ok(NOISELESS_PREVIEW),
    });
    enterPowerScenario(root);
    await handle.submit();
    expect(calls[0]).toEqual({
      path: "/api/power",
      body: {
        n: 100,
        z_spec: "equispaced",
        psi: 0.6,
        delta: 0.5,
        sigma: 0.1,
        alpha: 0.01,
        alternative: "two-sided",
      },
    });
    expect(calls[1]).toEqual({
      path: "/api/preview",
      body: { n: 100, z_spec: "equispaced", psi: 0.6, delta: 0.5, sigma: 0.1, seed: 1 },
    });
  });
});

describe("sample-size scenario", () => {
  function enter(root: HTMLElement): void {
    setMode(root, "n-given-power");
    choose(root, "distribution", "normal");
    fill(root, "param1", "5");
    fill(root, "param2", "1.5");
    fill(root, "psi", "5.5");
    fill(root, "delta", "0.04");
    fill(root, "sigma", "0.05");
    fill(root, "targetPower", "0.85");
    fill(root, "alpha", "0.01");
  }

  it("displays 114 verbatim and previews at the returned n", async () => {
    const { root, handle, calls } = mountApp({
      "/api/samplesize": () => ok(SAMPLESIZE_PAYLOAD),
      "/api/preview": () => ok(NOISELESS_PREVIEW),
    });
    enter(root);
    await handle.submit();
    expect(text(root, '[data-role="prominent"]')).toBe("114");
    expect(text(root, '[data-role="prominent"]')).toBe(String(SAMPLESIZE_PAYLOAD.n));
    expect(text(root, ".result-title")).toMatch(/sample size/i);
    for (const [key, value] of Object.entries(SAMPLESIZE_PAYLOAD)) {
      expect(text(root, `[data-echo="${key}"]`), key).toBe(String(value));
    }
    expect(calls[0]).toEqual({
      path: "/api/samplesize",
      body: {
        target_power: 0.85,
        z_spec: "normal(5,1.5)",
        psi: 5.5,
        delta: 0.04,
        sigma: 0.05,
        alpha: 0.01,
        alternative: "two-sided",
      },
    });
    expect(calls[1]?.body["n"]).toBe(114);
  });

  it("swaps the n input for the target-power input", () => {
    const { root } = mountApp({});
    expect(root.querySelector<HTMLElement>('[data-field="n"]')?.hidden).toBe(false);
    expect(root.querySelector<HTMLElement>('[data-field="targetPower"]')?.hidden).toBe(true);
    setMode(root, "n-given-power");
    expect(root.querySelector<HTMLElement>('[data-field="n"]')?.hidden).toBe(true);
    expect(root.querySelector<HTMLElement>('[data-field="targetPower"]')?.hidden).toBe(false);
  });
});

describe("form behaviour", () => {
  it("reveals the parameter fields of the chosen distribution", () => {
    const { root } = mountApp({});
    expect(root.querySelector('[name="param1"]')).toBeNull();
    choose(root, "distribution", "normal");
    expect(root.querySelector('[name="param1"]')).not.toBeNull();
    expect(root.querySelector('[name="param2"]')).not.toBeNull();
    expect(root.textContent).toContain("mean");
    expect(root.textContent).toContain("sd");
    choose(root, "distribution", "exponential");
    expect(root.textContent).toContain("rate");
    expect(root.querySelector('[name="param2"]')).toBeNull();
  });

  it("prefills alpha with 0.01", () => {
    const { root } = mountApp({});
    expect(field(root, "alpha").value).toBe("0.01");
  });

  it("warns inline on an out-of-range psi and blocks the request", async () => {
    const { root, handle, fetchFn } = mountApp({});
    fill(root, "psi", "1.2"); // outside (0, 1) for equispaced
    const holder = root.querySelector<HTMLElement>('[data-field="psi"]');
    expect(holder?.classList.contains("invalid")).toBe(true);
    expect(holder?.querySelector<HTMLElement>(".field-error")?.hidden).toBe(false);
    expect(root.querySelector<HTMLButtonElement>("button.compute")?.disabled).toBe(true);
    root.querySelector("form")?.dispatchEvent(new Event("submit", { cancelable: true }));
    await handle.submit();
    expect(fetchFn).not.toHaveBeenCalled();
  });

  it("mentions the command line for the beta covariate it hides", () => {
    const { root } = mountApp({});
    expect(root.querySelector(".footnote")?.textContent).toMatch(/beta\(/);
    const options = [...root.querySelectorAll('select[name="distribution"] option')];
    expect(options.map((o) => o.getAttribute("value"))).toEqual([
      "equispaced",
      "normal",
      "uniform",
      "exponential",
    ]);
  });
});

describe("error banners", () => {
  it("names the psi field when the service rejects the changepoint", async () => {
    const message = "psi=0.99 must lie strictly inside the realized z range [0.005, 1]";
    const { root, handle } = mountApp({
      "/api/power": () => refused("psi_out_of_range", message, [{ field: "psi", message }]),
    });
    enterPowerScenario(root);
    fill(root, "psi", "0.99");
    await handle.submit();
    const banner = root.querySelector<HTMLElement>(".banner");
    expect(banner?.hidden).toBe(false);
    expect(banner?.textContent).toContain("psi");
    expect(root.querySelector('[data-field="psi"]')?.classList.contains("invalid")).toBe(true);
  });

  it("offers a retry on network failure and preserves the settings", async () => {
    let failing = true;
    const { root, handle } = mountApp({
      "/api/power": () => {
        if (failing) throw new TypeError("fetch failed");
        return ok(POWER_PAYLOAD);
      },
      "/api/preview": () => ok(NOISELESS_PREVIEW),
    });
    enterPowerScenario(root);
    await handle.submit();
    const banner = root.querySelector<HTMLElement>(".banner");
    expect(banner?.hidden).toBe(false);
    expect(banner?.dataset["kind"]).toBe("retry");
    expect(banner?.textContent).toMatch(/settings are unchanged/);
    expect(field(root, "delta").value).toBe("0.5"); // nothing was reset
    failing = false;
    banner?.querySelector<HTMLButtonElement>("button.retry")?.click();
    await vi.waitFor(() => {
      expect(text(root, '[data-role="prominent"]')).toBe("0.749");
    });
  });
});

describe("preview", () => {
  it("renders sigma=0 points exactly on the segmented line", async () => {
    const { root, handle } = mountApp({
      "/api/power": () => ok(POWER_PAYLOAD),
      "/api/preview": () => ok(NOISELESS_PREVIEW),
    });
    enterPowerScenario(root);
    await handle.submit();
    const poly = root.querySelector("polyline.fit-line");
    const line = (poly?.getAttribute("points") ?? "")
      .split(" ")
      .map((pair) => {
        const [x, y] = pair.split(",").map(Number);
        return { x: x ?? 0, y: y ?? 0 };
      });
    const circles = [...root.querySelectorAll("circle.data-point")];
    expect(circles).toHaveLength(NOISELESS_PREVIEW.z.length);
    for (const c of circles) {
      const pt = { x: Number(c.getAttribute("cx")), y: Number(c.getAttribute("cy")) };
      expect(verticalGapToPolyline(pt, line)).toBeLessThan(1e-6);
    }
    expect(text(root, ".psi-hat")).toContain(String(NOISELESS_PREVIEW.fit.psi_hat));
  });

  it("re-seeding bumps the seed and regenerates with the same design", async () => {
    const seeds: unknown[] = [];
    const { root, handle, calls } = mountApp({
      "/api/power": () => ok(POWER_PAYLOAD),
      "/api/preview": (body) => {
        seeds.push(body["seed"]);
        return ok(NOISELESS_PREVIEW);
      },
    });
    enterPowerScenario(root);
    await handle.submit();
    await handle.reseed();
    expect(seeds).toEqual([1, 2]);
    expect(field(root, "seed").value).toBe("2");
    expect(window.location.search).toContain("seed=2");
    const previews = calls.filter((c) => c.path === "/api/preview");
    expect(previews[0]?.body["n"]).toBe(previews[1]?.body["n"]);
  });

  it("keeps the last plot with a stale badge when a refresh fails", async () => {
    let previewFails = false;
    const { root, handle } = mountApp({
      "/api/power": () => ok(POWER_PAYLOAD),
      "/api/preview": () => {
        if (previewFails) throw new TypeError("fetch failed");
        return ok(NOISELESS_PREVIEW);
      },
    });
    enterPowerScenario(root);
    await handle.submit();
    expect(root.querySelector<HTMLElement>(".stale-badge")?.hidden).toBe(true);
    previewFails = true;
    await handle.reseed();
    expect(root.querySelector<HTMLElement>(".stale-badge")?.hidden).toBe(false);
    expect(root.querySelectorAll("circle.data-point").length).toBeGreaterThan(0);
  });
});

describe("shareable URLs", () => {
  it("restores the form from the query string", () => {
    window.history.replaceState(
      null,
      "",
      "/?mode=n-given-power&alt=greater&alpha=0.05&dist=normal&p1=5&p2=1.5&psi=5.5&delta=0.04&sigma=0.05&n=100&power=0.85&seed=7",
    );
    const { root, handle } = mountApp({});
    expect(handle.state().mode).toBe("n-given-power");
    expect(handle.state().alternative).toBe("greater");
    expect(field(root, "param1").value).toBe("5");
    expect(field(root, "param2").value).toBe("1.5");
    expect(field(root, "psi").value).toBe("5.5");
    expect(field(root, "targetPower").value).toBe("0.85");
    expect(field(root, "seed").value).toBe("7");
  });

  it("writes edits back to the URL and round-trips them", () => {
    const { root, handle } = mountApp({});
    fill(root, "psi", "0.7");
    fill(root, "n", "42");
    expect(window.location.search).toContain("psi=0.7");
    expect(window.location.search).toContain("n=42");
    // a fresh mount over the same URL sees the same state
    const again = mountApp({});
    expect(again.handle.state()).toEqual(handle.state());
  });

  it("preserves a non-form api override across updates", () => {
    window.history.replaceState(null, "", "/?api=http%3A%2F%2F127.0.0.1%3A8080");
    const { root } = mountApp({});
    fill(root, "psi", "0.7");
    expect(window.location.search).toContain("api=http%3A%2F%2F127.0.0.1%3A8080");
    expect(window.location.search).toContain("psi=0.7");
  });
});

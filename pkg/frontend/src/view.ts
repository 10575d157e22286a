/**
 * DOM layer: builds the form, keeps it in sync with the FormState and
 * the URL, submits to the service, and renders the result panel and
 * the dataset preview.  Every number shown comes straight out of a
 * service payload — this module formats, it never computes.
 */

import {
  NetworkError,
  PowerPayload,
  PreviewPayload,
  SampleSizePayload,
  ServiceError,
  SupersededError,
} from "./api.js";
import { computeGeometry, renderSvg } from "./plot.js";
import {
  Alternative,
  DISTRIBUTIONS,
  Distribution,
  FormState,
  Mode,
  decodeState,
  encodeState,
  switchDistribution,
  validate,
} from "./state.js";

/** What the view needs from the service; ApiClient satisfies it. */
export interface ServiceClient {
  power(state: FormState): Promise<PowerPayload>;
  sampleSize(state: FormState): Promise<SampleSizePayload>;
  preview(state: FormState, n: number, seed: number): Promise<PreviewPayload>;
}

export interface MountOptions {
  client: ServiceClient;
  window?: Window;
}

export interface AppHandle {
  /** Snapshot of the current form state. */
  state(): FormState;
  /** Validate and, if clean, submit; resolves when rendering settled. */
  submit(): Promise<void>;
  /** Bump the seed and regenerate the preview for the last submission. */
  reseed(): Promise<void>;
}

/** Big-figure formatting: integers verbatim, reals to three decimals. */
export function formatProminent(x: number): string {
  return Number.isInteger(x) ? String(x) : x.toFixed(3);
}

const NUMERIC_FIELDS = [
  "alpha",
  "param1",
  "param2",
  "psi",
  "delta",
  "sigma",
  "n",
  "targetPower",
  "seed",
] as const;
type NumericField = (typeof NUMERIC_FIELDS)[number];

function isNumericField(name: string): name is NumericField {
  return (NUMERIC_FIELDS as readonly string[]).includes(name);
}

/** Server-side body field -> form field container. */
const SERVER_FIELD_MAP: Record<string, string> = {
  target_power: "targetPower",
  z_spec: "distribution",
};

const ECHO_LABELS: Record<string, string> = {
  power: "power",
  e1: "mean of the statistic under the alternative",
  n: "sample size",
  power_at_n: "power at the returned n",
  target_power: "target power",
  z: "covariate",
  psi: "changepoint ψ",
  delta: "slope difference δ",
  sigma: "response sd σ",
  alpha: "significance level α",
  alternative: "alternative",
};

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function fieldMarkup(field: string, label: string, attrs: string): string {
  return (
    `<label class="field" data-field="${field}"><span>${label}</span>` +
    `<input name="${field}" ${attrs}><em class="field-error" hidden></em></label>`
  );
}

const PAGE = `
<h1>Segmented-power explorer</h1>
<p class="tagline">Power and sample size for detecting a broken-line effect,
with a seeded preview of the design you are planning.</p>
<form class="controls" novalidate>
  <fieldset class="mode">
    <legend>Question</legend>
    <label><input type="radio" name="mode" value="power-given-n">
      Estimated power for a fixed sample size</label>
    <label><input type="radio" name="mode" value="n-given-power">
      Sample size for a desired power</label>
  </fieldset>
  <div class="grid">
    ${fieldMarkup("n", "Sample size n", 'type="number" step="1" min="12"')}
    ${fieldMarkup("targetPower", "Desired power", 'type="number" step="any"')}
    <label class="field" data-field="alternative"><span>Alternative hypothesis</span>
      <select name="alternative">
        <option value="two-sided">Two-sided</option>
        <option value="greater">Greater</option>
        <option value="less">Less</option>
      </select><em class="field-error" hidden></em></label>
    ${fieldMarkup("alpha", "Significance level α", 'type="number" step="any"')}
    <label class="field" data-field="distribution"><span>Covariate distribution</span>
      <select name="distribution"></select><em class="field-error" hidden></em></label>
    <span class="param-fields"></span>
    ${fieldMarkup("psi", "Changepoint ψ", 'type="number" step="any"')}
    ${fieldMarkup("delta", "Slope difference δ", 'type="number" step="any"')}
    ${fieldMarkup("sigma", "Response sd σ", 'type="number" step="any"')}
    ${fieldMarkup("seed", "Preview seed", 'type="number" step="1" min="0"')}
  </div>
  <button type="submit" class="compute">Compute</button>
  <p class="footnote">A beta(a, b) covariate is available from the command line
    (<code>segpower power --z "beta(2,5)" …</code>); the form offers the four
    distributions of the interface it mirrors.</p>
</form>
<div class="banner" hidden></div>
<section class="result" hidden>
  <h2 class="result-title"></h2>
  <div class="result-number" data-role="prominent"></div>
  <dl class="result-echo"></dl>
</section>
<section class="preview" hidden>
  <div class="preview-head">
    <h2>Simulated dataset</h2>
    <span class="psi-hat"></span>
    <span class="stale-badge" hidden>stale — refresh failed, showing previous data</span>
    <button type="button" class="reseed">Re-seed</button>
  </div>
  <div class="plot-host"></div>
</section>
`;

export function mount(root: HTMLElement, opts: MountOptions): AppHandle {
  const client = opts.client;
  const win = opts.window ?? window;
  let state: FormState = decodeState(win.location.search);
  let lastSubmitted: { state: FormState; n: number } | null = null;
  let retryAction: (() => Promise<void>) | null = null;

  root.innerHTML = PAGE;
  const q = <T extends Element>(sel: string): T => {
    const el = root.querySelector(sel);
    if (!el) throw new Error(`missing element ${sel}`);
    return el as T;
  };
  const form = q<HTMLFormElement>("form.controls");
  const paramHost = q<HTMLElement>(".param-fields");
  const banner = q<HTMLElement>(".banner");
  const result = q<HTMLElement>("section.result");
  const preview = q<HTMLElement>("section.preview");
  const plotHost = q<HTMLElement>(".plot-host");
  const staleBadge = q<HTMLElement>(".stale-badge");
  const distSelect = q<HTMLSelectElement>('select[name="distribution"]');

  distSelect.innerHTML = (Object.keys(DISTRIBUTIONS) as Distribution[])
    .map((d) => `<option value="${d}">${esc(DISTRIBUTIONS[d].label)}</option>`)
    .join("");

  function input(name: string): HTMLInputElement {
    return q<HTMLInputElement>(`[name="${name}"]`);
  }

  function renderParamFields(): void {
    const info = DISTRIBUTIONS[state.distribution];
    paramHost.innerHTML = info.params
      .map((p) => fieldMarkup(p.key, esc(p.label), 'type="number" step="any"'))
      .join("");
    for (const p of info.params) {
      input(p.key).value = String(state[p.key]);
    }
  }

  function syncModeVisibility(): void {
    q<HTMLElement>('[data-field="n"]').hidden = state.mode !== "power-given-n";
    q<HTMLElement>('[data-field="targetPower"]').hidden = state.mode !== "n-given-power";
  }

  function syncForm(): void {
    for (const radio of root.querySelectorAll<HTMLInputElement>('input[name="mode"]')) {
      radio.checked = radio.value === state.mode;
    }
    q<HTMLSelectElement>('select[name="alternative"]').value = state.alternative;
    distSelect.value = state.distribution;
    renderParamFields();
    for (const name of ["alpha", "psi", "delta", "sigma", "n", "targetPower", "seed"] as const) {
      input(name).value = String(state[name]);
    }
    syncModeVisibility();
    renderErrors();
  }

  function renderErrors(): boolean {
    const errors = validate(state);
    for (const holder of root.querySelectorAll<HTMLElement>(".field[data-field]")) {
      const field = holder.dataset["field"] ?? "";
      const err = errors.find((e) => e.field === field);
      const slot = holder.querySelector<HTMLElement>(".field-error");
      if (slot) {
        slot.textContent = err ? err.message : "";
        slot.hidden = !err;
      }
      holder.classList.toggle("invalid", Boolean(err));
    }
    q<HTMLButtonElement>("button.compute").disabled = errors.length > 0;
    return errors.length === 0;
  }

  function updateUrl(): void {
    const merged = new URLSearchParams(encodeState(state));
    const current = new URLSearchParams(win.location.search);
    const api = current.get("api");
    if (api !== null) merged.set("api", api);
    win.history.replaceState(null, "", "?" + merged.toString());
  }

  function hideBanner(): void {
    banner.hidden = true;
    banner.textContent = "";
    retryAction = null;
  }

  function showBanner(kind: "error" | "retry", text: string, retry?: () => Promise<void>): void {
    banner.hidden = false;
    banner.dataset["kind"] = kind;
    banner.textContent = text;
    retryAction = retry ?? null;
    if (retry) {
      const button = win.document.createElement("button");
      button.type = "button";
      button.className = "retry";
      button.textContent = "Retry";
      banner.append(" ", button);
    }
  }

  function echoRows(payload: Record<string, unknown>, keys: string[]): string {
    return keys
      .map((k) => {
        const label = ECHO_LABELS[k] ?? k;
        return (
          `<div class="echo-row"><dt>${esc(label)}</dt>` +
          `<dd data-echo="${k}">${esc(String(payload[k]))}</dd></div>`
        );
      })
      .join("");
  }

  function renderPowerResult(payload: PowerPayload): void {
    result.hidden = false;
    q<HTMLElement>(".result-title").textContent = "Estimated power";
    q<HTMLElement>(".result-number").textContent = formatProminent(payload.power);
    q<HTMLElement>(".result-echo").innerHTML = echoRows(
      payload as unknown as Record<string, unknown>,
      ["power", "e1", "n", "z", "psi", "delta", "sigma", "alpha", "alternative"],
    );
  }

  function renderSampleSizeResult(payload: SampleSizePayload): void {
    result.hidden = false;
    q<HTMLElement>(".result-title").textContent = "Required sample size";
    q<HTMLElement>(".result-number").textContent = formatProminent(payload.n);
    q<HTMLElement>(".result-echo").innerHTML = echoRows(
      payload as unknown as Record<string, unknown>,
      ["n", "power_at_n", "target_power", "z", "psi", "delta", "sigma", "alpha", "alternative"],
    );
  }

  function renderPreview(payload: PreviewPayload): void {
    preview.hidden = false;
    staleBadge.hidden = true;
    plotHost.innerHTML = renderSvg(computeGeometry(payload));
    const psiHat = q<HTMLElement>(".psi-hat");
    if (payload.fit.psi_hat === null) {
      psiHat.textContent = "no changepoint identified (flat fit)";
      psiHat.removeAttribute("data-echo-fit");
    } else {
      psiHat.textContent = `ψ̂ = ${String(payload.fit.psi_hat)}`;
      psiHat.setAttribute("data-echo-fit", String(payload.fit.psi_hat));
    }
  }

  async function runPreview(base: FormState, n: number, seed: number): Promise<void> {
    try {
      const payload = await client.preview(base, n, seed);
      renderPreview(payload);
    } catch (err) {
      if (err instanceof SupersededError) return;
      if (!plotHost.firstChild) {
        preview.hidden = true;
        return;
      }
      staleBadge.hidden = false; // keep the last plot, flag it as stale
    }
  }

  async function runSubmit(): Promise<void> {
    if (!renderErrors()) return;
    hideBanner();
    const snapshot: FormState = { ...state };
    try {
      let previewN: number;
      if (snapshot.mode === "power-given-n") {
        const payload = await client.power(snapshot);
        renderPowerResult(payload);
        previewN = payload.n;
      } else {
        const payload = await client.sampleSize(snapshot);
        renderSampleSizeResult(payload);
        previewN = payload.n;
      }
      lastSubmitted = { state: snapshot, n: previewN };
      await runPreview(snapshot, previewN, snapshot.seed);
    } catch (err) {
      if (err instanceof SupersededError) return;
      if (err instanceof ServiceError) {
        const named = err.fields.map((f) => f.field);
        const suffix = named.length ? ` (check: ${named.join(", ")})` : "";
        showBanner("error", `${err.message}${suffix}`);
        for (const f of err.fields) {
          const field = SERVER_FIELD_MAP[f.field] ?? f.field;
          const holder = root.querySelector<HTMLElement>(`.field[data-field="${field}"]`);
          const slot = holder?.querySelector<HTMLElement>(".field-error");
          if (holder && slot) {
            slot.textContent = f.message;
            slot.hidden = false;
            holder.classList.add("invalid");
          }
        }
        return;
      }
      if (err instanceof NetworkError) {
        showBanner(
          "retry",
          `Could not reach the service (${err.message}). Your settings are unchanged.`,
          runSubmit,
        );
        return;
      }
      throw err;
    }
  }

  async function runReseed(): Promise<void> {
    if (!lastSubmitted) return;
    state.seed += 1;
    lastSubmitted.state = { ...lastSubmitted.state, seed: state.seed };
    input("seed").value = String(state.seed);
    updateUrl();
    await runPreview(lastSubmitted.state, lastSubmitted.n, state.seed);
  }

  const onFieldEvent = (ev: Event): void => {
    const el = ev.target as HTMLInputElement | HTMLSelectElement;
    const name = el.name;
    if (name === "mode") {
      state.mode = el.value as Mode;
      syncModeVisibility();
    } else if (name === "alternative") {
      state.alternative = el.value as Alternative;
    } else if (name === "distribution") {
      state = switchDistribution(state, el.value as Distribution);
      syncForm();
    } else if (isNumericField(name)) {
      state[name] = el.value.trim() === "" ? NaN : Number(el.value);
    } else {
      return;
    }
    renderErrors();
    updateUrl();
  };
  form.addEventListener("input", onFieldEvent);
  form.addEventListener("change", onFieldEvent);

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void runSubmit();
  });
  q<HTMLButtonElement>("button.reseed").addEventListener("click", () => {
    void runReseed();
  });
  banner.addEventListener("click", (ev) => {
    const el = ev.target as HTMLElement;
    if (el.classList.contains("retry") && retryAction) {
      void retryAction();
    }
  });

  syncForm();
  updateUrl();

  return {
    state: () => ({ ...state }),
    submit: runSubmit,
    reseed: runReseed,
  };
}

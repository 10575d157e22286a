/**
 * Form model for the power explorer: the state record, its defaults,
 * client-side validation mirroring the service rules, and the URL
 * query-string codec that makes what-if settings shareable links.
 */

export type Mode = "power-given-n" | "n-given-power";
export type Alternative = "two-sided" | "greater" | "less";
export type Distribution = "equispaced" | "normal" | "uniform" | "exponential";

export interface FormState {
  mode: Mode;
  alternative: Alternative;
  alpha: number;
  distribution: Distribution;
  /** First distribution parameter: mean / lower bound / rate. */
  param1: number;
  /** Second distribution parameter: sd / upper bound (unused elsewhere). */
  param2: number;
  psi: number;
  delta: number;
  sigma: number;
  /** Sample size, read in power-given-n mode. */
  n: number;
  /** Target power, read in n-given-power mode. */
  targetPower: number;
  seed: number;
}

export interface FieldError {
  field: string;
  message: string;
}

export interface ParamField {
  key: "param1" | "param2";
  label: string;
}

interface DistributionInfo {
  label: string;
  params: ParamField[];
  defaults: [number, number];
  /** Open interval the changepoint must lie in, given the parameters. */
  support(p1: number, p2: number): [number, number];
  /** Median of the covariate distribution; used to re-centre psi. */
  median(p1: number, p2: number): number;
  zSpec(p1: number, p2: number): string;
}

export const DISTRIBUTIONS: Record<Distribution, DistributionInfo> = {
  equispaced: {
    label: "Equispaced",
    params: [],
    defaults: [0, 1],
    support: () => [0, 1],
    median: () => 0.5,
    zSpec: () => "equispaced",
  },
  normal: {
    label: "Normal",
    params: [
      { key: "param1", label: "mean" },
      { key: "param2", label: "sd" },
    ],
    defaults: [0, 1],
    support: () => [-Infinity, Infinity],
    median: (mean) => mean,
    zSpec: (mean, sd) => `normal(${mean},${sd})`,
  },
  uniform: {
    label: "Uniform",
    params: [
      { key: "param1", label: "min" },
      { key: "param2", label: "max" },
    ],
    defaults: [0, 1],
    support: (a, b) => [a, b],
    median: (a, b) => (a + b) / 2,
    zSpec: (a, b) => `uniform(${a},${b})`,
  },
  exponential: {
    label: "Exponential",
    params: [{ key: "param1", label: "rate" }],
    defaults: [1, 1],
    support: () => [0, Infinity],
    median: (rate) => Math.LN2 / rate,
    zSpec: (rate) => `exponential(${rate})`,
  },
};

/** Slope-difference / response-sd defaults: 0.5 under a normal covariate, 0.1 otherwise. */
export function scaleDefaults(distribution: Distribution): { delta: number; sigma: number } {
  const v = distribution === "normal" ? 0.5 : 0.1;
  return { delta: v, sigma: v };
}

/** The smallest sample size the service accepts (the candidate grid needs K + 2 points). */
export const MIN_N = 12;

export function defaultState(): FormState {
  return {
    mode: "power-given-n",
    alternative: "two-sided",
    alpha: 0.01,
    distribution: "equispaced",
    param1: 0,
    param2: 1,
    psi: 0.5,
    delta: 0.1,
    sigma: 0.1,
    n: 100,
    targetPower: 0.85,
    seed: 1,
  };
}

/**
 * Switch the covariate distribution, resetting its parameters, moving
 * the changepoint to the new median, and refreshing the delta/sigma
 * defaults — but only where the user has not edited them away from the
 * old distribution's defaults.
 */
export function switchDistribution(state: FormState, next: Distribution): FormState {
  const info = DISTRIBUTIONS[next];
  const old = scaleDefaults(state.distribution);
  const fresh = scaleDefaults(next);
  const [p1, p2] = info.defaults;
  return {
    ...state,
    distribution: next,
    param1: p1,
    param2: p2,
    psi: info.median(p1, p2),
    delta: state.delta === old.delta ? fresh.delta : state.delta,
    sigma: state.sigma === old.sigma ? fresh.sigma : state.sigma,
  };
}

/** The covariate-spec string the service parses, e.g. "normal(5,1.5)". */
export function zSpec(state: FormState): string {
  return DISTRIBUTIONS[state.distribution].zSpec(state.param1, state.param2);
}

export function psiRange(state: FormState): [number, number] {
  return DISTRIBUTIONS[state.distribution].support(state.param1, state.param2);
}

function bad(field: string, message: string): FieldError {
  return { field, message };
}

/**
 * Field-level validation mirroring the service: a clean state produces
 * no request the service would reject on sight.  Returns one error per
 * offending field, in display order.
 */
export function validate(state: FormState): FieldError[] {
  const errors: FieldError[] = [];
  const info = DISTRIBUTIONS[state.distribution];

  if (!Number.isFinite(state.alpha) || state.alpha <= 0 || state.alpha >= 1) {
    errors.push(bad("alpha", "significance level must be strictly between 0 and 1"));
  }

  let paramsOk = true;
  for (const p of info.params) {
    if (!Number.isFinite(state[p.key])) {
      errors.push(bad(p.key, `${p.label} must be a number`));
      paramsOk = false;
    }
  }
  if (paramsOk) {
    if (state.distribution === "normal" && state.param2 <= 0) {
      errors.push(bad("param2", "sd must be > 0"));
      paramsOk = false;
    } else if (state.distribution === "uniform" && state.param1 >= state.param2) {
      errors.push(bad("param2", "max must exceed min"));
      paramsOk = false;
    } else if (state.distribution === "exponential" && state.param1 <= 0) {
      errors.push(bad("param1", "rate must be > 0"));
      paramsOk = false;
    }
  }

  if (!Number.isFinite(state.psi)) {
    errors.push(bad("psi", "changepoint must be a number"));
  } else if (paramsOk) {
    const [lo, hi] = info.support(state.param1, state.param2);
    if (!(lo < state.psi && state.psi < hi)) {
      const range =
        lo === -Infinity ? "the real line" : hi === Infinity ? `(${lo}, ∞)` : `(${lo}, ${hi})`;
      errors.push(bad("psi", `changepoint must lie inside ${range} for this covariate`));
    }
  }

  if (!Number.isFinite(state.delta)) {
    errors.push(bad("delta", "slope difference must be a number"));
  }
  if (!Number.isFinite(state.sigma) || state.sigma <= 0) {
    errors.push(bad("sigma", "response sd must be > 0"));
  }

  if (state.mode === "power-given-n") {
    if (!Number.isInteger(state.n) || state.n < MIN_N) {
      errors.push(bad("n", `sample size must be an integer ≥ ${MIN_N}`));
    }
  } else {
    if (
      !Number.isFinite(state.targetPower) ||
      state.targetPower >= 1 ||
      !(state.targetPower > state.alpha)
    ) {
      errors.push(bad("targetPower", "target power must exceed alpha and be below 1"));
    }
  }

  if (!Number.isInteger(state.seed) || state.seed < 0) {
    errors.push(bad("seed", "seed must be a non-negative integer"));
  }

  return errors;
}

const MODES: Mode[] = ["power-given-n", "n-given-power"];
const ALTERNATIVES: Alternative[] = ["two-sided", "greater", "less"];
const DISTRIBUTION_NAMES = Object.keys(DISTRIBUTIONS) as Distribution[];

/** Serialise the form to a query string (no leading "?"). */
export function encodeState(state: FormState): string {
  const q = new URLSearchParams({
    mode: state.mode,
    alt: state.alternative,
    alpha: String(state.alpha),
    dist: state.distribution,
    p1: String(state.param1),
    p2: String(state.param2),
    psi: String(state.psi),
    delta: String(state.delta),
    sigma: String(state.sigma),
    n: String(state.n),
    power: String(state.targetPower),
    seed: String(state.seed),
  });
  return q.toString();
}

function pickEnum<T extends string>(raw: string | null, allowed: readonly T[]): T | null {
  return raw !== null && (allowed as readonly string[]).includes(raw) ? (raw as T) : null;
}

function pickNumber(raw: string | null): number | null {
  if (raw === null || raw.trim() === "") return null;
  const x = Number(raw);
  return Number.isFinite(x) ? x : null;
}

/**
 * Rebuild a state from a query string, falling back to the defaults
 * field by field.  Unknown keys (e.g. an api-base override) are ignored,
 * so decode(encode(s)) round-trips any valid state.
 */
export function decodeState(query: string): FormState {
  const q = new URLSearchParams(query);
  const state = defaultState();
  state.mode = pickEnum(q.get("mode"), MODES) ?? state.mode;
  state.alternative = pickEnum(q.get("alt"), ALTERNATIVES) ?? state.alternative;
  state.distribution = pickEnum(q.get("dist"), DISTRIBUTION_NAMES) ?? state.distribution;
  state.alpha = pickNumber(q.get("alpha")) ?? state.alpha;
  state.param1 = pickNumber(q.get("p1")) ?? state.param1;
  state.param2 = pickNumber(q.get("p2")) ?? state.param2;
  state.psi = pickNumber(q.get("psi")) ?? state.psi;
  state.delta = pickNumber(q.get("delta")) ?? state.delta;
  state.sigma = pickNumber(q.get("sigma")) ?? state.sigma;
  state.n = pickNumber(q.get("n")) ?? state.n;
  state.targetPower = pickNumber(q.get("power")) ?? state.targetPower;
  state.seed = pickNumber(q.get("seed")) ?? state.seed;
  return state;
}

"""Monte Carlo laboratory for the changepoint tests.

Two seeded generators -- a Gaussian jump model and a Rasch response
model whose ability parameter shifts at a changepoint item -- plus a
replicate harness that turns them into empirical rejection-rate
tables for the pseudo-score, maximal-t, and binary-LRT tests.

Every replicate draws from its own counter-based stream keyed by
(seed, replicate index), so tables are bit-identical no matter how
replicates are scheduled across workers.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ._rng import derived_rng
from .errors import (
    BoundaryError,
    ConfigurationError,
    ConvergenceError,
    DegenerateCovariateError,
    DegenerateSeriesError,
    DomainError,
    NonIdentifiableError,
    SizeError,
)
from .model_core import build_design
from .pscore import JUMP, make_term_spec, pscore_statistic
from .tfcp_tests import Series, l_max_binary, w_max_test

TESTS = ("pscore", "w", "l")

#: Changepoint items used in the binary design for the standard sizes.
_DEFAULT_CHANGEPOINT = {20: 11, 30: 15, 40: 21, 50: 25}


@dataclass(frozen=True)
class NormalScenario:
    """Gaussian jump model y_i = beta + delta I(z_i > psi) + sigma eps_i."""

    n: int
    delta: float
    beta: float = 2.0
    psi: float = 0.5
    sigma: float = 0.3

    def __post_init__(self):
        if self.n < 4:
            raise SizeError(f"need n >= 4, got {self.n}")
        if self.sigma < 0:
            raise DomainError("sigma must be >= 0")

    @property
    def scenario_id(self) -> str:
        return f"normal-n{self.n}-d{self.delta:g}"


@dataclass(frozen=True)
class BinaryScenario:
    """Rasch responses whose ability shifts by delta at a changepoint item.

    For n in {20, 30, 40, 50} the changepoint item defaults to 11, 15,
    21, 25 respectively; other n default to ceil(n/2) + 1.
    """

    n: int
    delta: float
    changepoint_item: int = None

    def __post_init__(self):
        if self.n < 7:
            raise SizeError(f"need n >= 7, got {self.n}")
        if self.changepoint_item is None:
            cp = _DEFAULT_CHANGEPOINT.get(self.n, math.ceil(self.n / 2) + 1)
            object.__setattr__(self, "changepoint_item", cp)
        if not 1 <= self.changepoint_item <= self.n:
            raise DomainError(
                f"changepoint_item {self.changepoint_item} outside 1..{self.n}"
            )

    @property
    def scenario_id(self) -> str:
        return f"binary-n{self.n}-d{self.delta:g}"


@dataclass(frozen=True)
class RejectionRow:
    """One (scenario, test) cell of a rejection-rate table."""

    scenario_id: str
    test: str
    n: int
    delta: float
    rate: float
    replicates: int
    seed: int


@dataclass
class RejectionTable:
    """Empirical rejection rates, one row per scenario x test cell."""

    rows: list = field(default_factory=list)
    alpha: float = 0.05

    def to_csv(self) -> str:
        lines = ["scenario_id,test,n,delta,alpha,rate,replicates,seed"]
        for r in self.rows:
            lines.append(
                f"{r.scenario_id},{r.test},{r.n},{r.delta!r},"
                f"{self.alpha!r},{r.rate!r},{r.replicates},{r.seed}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "alpha": self.alpha,
                "rows": [
                    {
                        "scenario_id": r.scenario_id,
                        "test": r.test,
                        "n": r.n,
                        "delta": r.delta,
                        "rate": r.rate,
                        "replicates": r.replicates,
                        "seed": r.seed,
                    }
                    for r in self.rows
                ],
            },
            sort_keys=True,
        )


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _normal_jump(s: NormalScenario, rng: np.random.Generator) -> Series:
    z = np.arange(1, s.n + 1) / s.n
    y = s.beta + s.delta * (z > s.psi) + s.sigma * rng.standard_normal(s.n)
    return Series(y=y, z=z)


def _rasch(s: BinaryScenario, rng: np.random.Generator):
    b = rng.standard_normal(s.n)
    theta1 = float(rng.standard_normal())
    theta2 = theta1 + s.delta
    theta = np.where(np.arange(1, s.n + 1) >= s.changepoint_item, theta2, theta1)
    y = (rng.random(s.n) < expit(theta - b)).astype(float)
    return y, b, theta1, theta2


def simulate_normal_jump(s: NormalScenario, seed: int, replicate: int = 0) -> Series:
    """One draw from the Gaussian jump model on z = (1..n)/n.

    The noise comes from a counter-based stream keyed by
    (seed, replicate), so any replicate can be regenerated in
    isolation.
    """
    return _normal_jump(s, derived_rng(seed, replicate))


def simulate_rasch(s: BinaryScenario, seed: int, replicate: int = 0):
    """One draw of Rasch responses with an ability shift.

    Item difficulties b_i and the baseline ability theta1 are standard
    Normal; theta2 = theta1 + delta applies from the changepoint item
    onward.  Returns (y, b, theta1, theta2).
    """
    return _rasch(s, derived_rng(seed, replicate))


# ---------------------------------------------------------------------------
# Replicate harness
# ---------------------------------------------------------------------------

#: Numeric failures inside one replicate count as a non-rejection; the
#: replicate is kept in the denominator (mirrors discarding
#: non-converged fits without biasing the rate upward).
_REPLICATE_ERRORS = (
    BoundaryError,
    ConvergenceError,
    DegenerateSeriesError,
    DegenerateCovariateError,
    NonIdentifiableError,
)


def _check_tests(scenario, tests):
    for t in tests:
        if t not in TESTS:
            raise ConfigurationError(f"unknown test {t!r}")
        if t == "w" and isinstance(scenario, BinaryScenario):
            raise ConfigurationError("the w test applies to Gaussian series only")
        if t == "l" and isinstance(scenario, NormalScenario):
            raise ConfigurationError("the l test applies to binary series only")
        if t == "pscore" and isinstance(scenario, BinaryScenario) and scenario.n < 12:
            raise ConfigurationError("binary pscore needs n >= 12 for K = 10 psis")


def _normal_replicate(s: NormalScenario, tests, alpha: float, rng) -> dict:
    series = _normal_jump(s, rng)
    out = {}
    for t in tests:
        try:
            if t == "pscore":
                X = build_design([], n=s.n)
                spec = make_term_spec(series.z, kind=JUMP)
                res = pscore_statistic(series.y, X, spec)
                out[t] = res.p_value <= alpha
            else:  # "w"
                out[t] = bool(w_max_test(series, alpha=alpha).reject)
        except _REPLICATE_ERRORS:
            out[t] = False
    return out


def _binary_replicate(s: BinaryScenario, tests, alpha: float, rng) -> dict:
    y, b, _, _ = _rasch(s, rng)
    z = np.arange(1, s.n + 1, dtype=float)
    out = {}
    for t in tests:
        try:
            if t == "pscore":
                X = build_design([], n=s.n)
                spec = make_term_spec(z, kind=JUMP)
                res = pscore_statistic(y, X, spec, family="binomial-logit", offset=-b)
                out[t] = res.p_value <= alpha
            else:  # "l"
                out[t] = bool(l_max_binary(y, b).reject)
        except _REPLICATE_ERRORS:
            out[t] = False
    return out


def rejection_rates(
    scenarios,
    tests,
    reps: int,
    alpha: float = 0.05,
    seed: int = 0,
    workers: int = 1,
) -> RejectionTable:
    """Empirical rejection rates per scenario x test.

    All tests in a row see the same replicate data (paired
    comparison).  Replicate r of scenario s draws from the stream
    keyed by (seed, s*reps + r); results are aggregated by replicate
    index, so the table is bit-identical for any ``workers`` count.
    """
    if reps < 1:
        raise ConfigurationError("reps must be >= 1")
    scenarios = list(scenarios)
    tests = tuple(tests)
    for s in scenarios:
        _check_tests(s, tests)

    rows = []
    for s_idx, s in enumerate(scenarios):
        run = _normal_replicate if isinstance(s, NormalScenario) else _binary_replicate
        base = s_idx * reps

        def one(rep, _s=s, _run=run, _base=base):
            return _run(_s, tests, alpha, derived_rng(seed, _base + rep))

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(one, range(reps)))
        else:
            results = [one(rep) for rep in range(reps)]
        for t in tests:
            rate = float(np.mean([res[t] for res in results]))
            rows.append(
                RejectionRow(
                    scenario_id=s.scenario_id,
                    test=t,
                    n=s.n,
                    delta=s.delta,
                    rate=rate,
                    replicates=reps,
                    seed=seed,
                )
            )
    return RejectionTable(rows=rows, alpha=alpha)


def load_scenarios(path) -> list:
    """Read scenarios from a JSON file.

    Accepts either a bare list or {"scenarios": [...]}; each entry
    maps the scenario fields plus "family": "normal" | "binary".
    """
    with open(path) as fh:
        doc = json.load(fh)
    entries = doc["scenarios"] if isinstance(doc, dict) else doc
    out = []
    for i, entry in enumerate(entries):
        entry = dict(entry)
        family = entry.pop("family", None)
        if family == "normal":
            out.append(NormalScenario(**entry))
        elif family == "binary":
            out.append(BinaryScenario(**entry))
        else:
            raise ConfigurationError(
                f"scenario {i}: family must be 'normal' or 'binary', got {family!r}"
            )
    return out

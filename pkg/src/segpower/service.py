"""HTTP JSON API over the power and test modules.

Every response is an envelope {ok, error, payload}: exactly one of
``error`` and ``payload`` is set.  Validation failures come back as
400 with field-level messages; a constant series is 422.  All
handlers call the same pure functions as the command line, so the two
interfaces agree to the last bit.

Run directly (``python -m segpower.service``) to serve on
``SEGPOWER_PORT`` (default 8080).
"""

from __future__ import annotations

import os
from typing import List, Literal, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ._rng import derived_rng
from .errors import (
    DegenerateSeriesError,
    FlatFitError,
    ParseError,
    SegpowerError,
    UnreachableTargetError,
)
from .model_core import build_design
from .power import (
    PowerRequest,
    compute_power,
    fit_segmented,
    parse_covariate_spec,
    realize_covariate,
    sample_size,
)
from .pscore import DEFAULT_K, JUMP, estimate_changepoint, make_term_spec, pscore_statistic
from .tfcp_tests import Series, l_max_binary, w_max_test

DEFAULT_PORT = 8080


class PowerBody(BaseModel):
    n: Optional[int] = Field(default=None, ge=5)
    target_power: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    z_spec: str = "equispaced"
    psi: float
    delta: float
    sigma: float = Field(gt=0.0)
    alpha: float = Field(default=0.01, gt=0.0, lt=1.0)
    alternative: Literal["two-sided", "greater", "less"] = "two-sided"


class TestBody(BaseModel):
    y: List[float] = Field(min_length=4)
    z: Optional[List[float]] = None
    labels: Optional[List[str]] = None
    b: Optional[List[float]] = None
    methods: List[Literal["pscore", "w", "l"]] = ["pscore", "w"]
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)


class PreviewBody(BaseModel):
    n: int = Field(ge=8)
    z_spec: str = "equispaced"
    psi: float
    delta: float
    sigma: float = Field(ge=0.0)
    seed: int = 0


def _ok(payload) -> dict:
    return {"ok": True, "error": None, "payload": payload}


def _err(code: str, message: str, status: int, fields=None) -> JSONResponse:
    error = {"code": code, "message": message}
    if fields:
        error["fields"] = fields
    return JSONResponse(
        status_code=status, content={"ok": False, "error": error, "payload": None}
    )


def _realized_z(spec_text: str, n: int, psi: float) -> np.ndarray:
    """Realize the covariate and guard psi against its range."""
    spec = parse_covariate_spec(spec_text)
    z = realize_covariate(spec, n)
    if not z.min() < psi < z.max():
        raise _PsiOutOfRange(
            f"psi={psi} must lie strictly inside the realized z range "
            f"[{z.min():g}, {z.max():g}]"
        )
    return z


class _PsiOutOfRange(Exception):
    pass


def create_app() -> FastAPI:
    app = FastAPI(title="segpower", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        fields = [
            {
                "field": ".".join(str(p) for p in err["loc"] if p != "body"),
                "message": err["msg"],
            }
            for err in exc.errors()
        ]
        return _err("validation_error", "request body failed validation", 400, fields)

    @app.exception_handler(_PsiOutOfRange)
    async def on_psi(request: Request, exc: _PsiOutOfRange):
        return _err("psi_out_of_range", str(exc), 400, [{"field": "psi", "message": str(exc)}])

    @app.exception_handler(ParseError)
    async def on_parse(request: Request, exc: ParseError):
        return _err(
            "spec_parse_error", str(exc), 400, [{"field": "z_spec", "message": str(exc)}]
        )

    @app.exception_handler(DegenerateSeriesError)
    async def on_degenerate(request: Request, exc: DegenerateSeriesError):
        return _err("degenerate_series", str(exc), 422)

    @app.exception_handler(UnreachableTargetError)
    async def on_unreachable(request: Request, exc: UnreachableTargetError):
        return _err("unreachable_target", str(exc), 400)

    @app.exception_handler(SegpowerError)
    async def on_segpower_error(request: Request, exc: SegpowerError):
        return _err(type(exc).__name__.replace("Error", "").lower() + "_error", str(exc), 400)

    @app.post("/api/power")
    def api_power(body: PowerBody):
        if body.n is None:
            return _err(
                "validation_error", "n is required", 400, [{"field": "n", "message": "n is required"}]
            )
        _realized_z(body.z_spec, body.n, body.psi)
        req = PowerRequest(
            psi=body.psi,
            delta=body.delta,
            sigma=body.sigma,
            z_spec=body.z_spec,
            n=body.n,
            alpha=body.alpha,
            alternative=body.alternative,
        )
        res = compute_power(req)
        return _ok(
            {
                "power": res.power,
                "e1": res.e1,
                "n": body.n,
                "z": req.z_spec.text,
                "psi": body.psi,
                "delta": body.delta,
                "sigma": body.sigma,
                "alpha": body.alpha,
                "alternative": body.alternative,
            }
        )

    @app.post("/api/samplesize")
    def api_samplesize(body: PowerBody):
        if body.target_power is None:
            return _err(
                "validation_error",
                "target_power is required",
                400,
                [{"field": "target_power", "message": "target_power is required"}],
            )
        if body.target_power <= body.alpha:
            return _err(
                "target_below_size",
                f"target power {body.target_power} does not exceed alpha {body.alpha}",
                400,
                [{"field": "target_power", "message": "must exceed alpha"}],
            )
        req = PowerRequest(
            psi=body.psi,
            delta=body.delta,
            sigma=body.sigma,
            z_spec=body.z_spec,
            target_power=body.target_power,
            alpha=body.alpha,
            alternative=body.alternative,
        )
        n = sample_size(req)
        at_n = compute_power(
            PowerRequest(
                psi=body.psi,
                delta=body.delta,
                sigma=body.sigma,
                z_spec=body.z_spec,
                n=n,
                alpha=body.alpha,
                alternative=body.alternative,
            )
        )
        return _ok(
            {
                "n": n,
                "power_at_n": at_n.power,
                "target_power": body.target_power,
                "z": req.z_spec.text,
                "psi": body.psi,
                "delta": body.delta,
                "sigma": body.sigma,
                "alpha": body.alpha,
                "alternative": body.alternative,
            }
        )

    @app.post("/api/test")
    def api_test(body: TestBody):
        n = len(body.y)
        series = Series(
            y=np.asarray(body.y),
            z=np.asarray(body.z) if body.z is not None else None,
            labels=tuple(body.labels) if body.labels is not None else None,
            b=np.asarray(body.b) if body.b is not None else None,
        )
        z = series.z if series.z is not None else np.asarray(series.time_index, float)
        results = {}
        for method in body.methods:
            if method == "pscore":
                X = build_design([], n=n)
                spec = make_term_spec(z, kind=JUMP, K=min(DEFAULT_K, n - 2))
                res = pscore_statistic(series.y, X, spec)
                psi_hat = estimate_changepoint(series.y, X, z, kind=JUMP)
                idx = min(max(int(np.searchsorted(z, psi_hat, side="right")) - 1, 0), n - 1)
                results["pscore"] = {
                    "s0": res.s0,
                    "p_value": res.p_value,
                    "reject": bool(res.p_value <= body.alpha),
                    "psi_hat": psi_hat,
                    "changepoint_label": series.labels[idx] if series.labels is not None else None,
                }
            elif method == "w":
                res = w_max_test(series, alpha=body.alpha)
                results["w"] = {
                    "t_max": res.t_max,
                    "w_max": res.w_max,
                    "critical_value": res.critical_value,
                    "reject": bool(res.reject),
                    "j_hat": res.j_hat,
                    "changepoint_label": (
                        series.labels[res.j_hat - 1] if series.labels is not None else None
                    ),
                }
            else:  # "l"
                if series.b is None:
                    return _err(
                        "validation_error",
                        "the l test needs b difficulties",
                        400,
                        [{"field": "b", "message": "required for the l test"}],
                    )
                res = l_max_binary(series.y, series.b)
                results["l"] = {
                    "l_max": res.l_max,
                    "critical_value": 8.85,
                    "reject": bool(res.reject),
                    "j_hat": res.j_hat,
                    "changepoint_label": (
                        series.labels[res.j_hat - 1] if series.labels is not None else None
                    ),
                }
        return _ok(
            {"n": n, "alpha": body.alpha, "methods": list(body.methods), "results": results}
        )

    @app.post("/api/preview")
    def api_preview(body: PreviewBody):
        z = _realized_z(body.z_spec, body.n, body.psi)
        rng = derived_rng(body.seed, 0)
        y = body.delta * np.maximum(z - body.psi, 0.0) + body.sigma * rng.standard_normal(
            body.n
        )
        X = np.column_stack([np.ones(body.n), z])
        lo, hi = float(z.min()), float(z.max())
        try:
            fit = fit_segmented(y, X, z)
            line = (
                lambda x: fit.beta_hat[0]
                + fit.beta_hat[1] * x
                + fit.delta_hat * max(x - fit.psi_hat, 0.0)
            )
            fit_payload = {
                "psi_hat": fit.psi_hat,
                "delta_hat": fit.delta_hat,
                "segments": [
                    [lo, line(lo)],
                    [fit.psi_hat, line(fit.psi_hat)],
                    [hi, line(hi)],
                ],
            }
        except FlatFitError:
            coef, *_ = np.linalg.lstsq(X, y, rcond=None)
            line = lambda x: float(coef[0] + coef[1] * x)
            fit_payload = {
                "psi_hat": None,
                "delta_hat": 0.0,
                "segments": [[lo, line(lo)], [hi, line(hi)]],
            }
        return _ok({"z": z.tolist(), "y": y.tolist(), "fit": fit_payload})

    return app


app = create_app()


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=int(os.environ.get("SEGPOWER_PORT", DEFAULT_PORT)))

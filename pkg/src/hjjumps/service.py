"""HTTP service exposing validation, solving, verification and sweeps.

Every endpoint takes a complete problem document in the request body, so
the service itself is stateless; the CLI is one thin client of this app
and remote deployments run it under uvicorn unchanged.
"""

from __future__ import annotations

import copy
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, HTTPException

from . import SCHEMA_VERSION, __version__, grids, problems
from .errors import ExprError, HjjError
from .problem import HypothesisReport, ProblemSpec, validate_hypotheses
from .schemas import (
    ConditionModel,
    ConstantsModel,
    DecayIntervalModel,
    LemmaCheckModel,
    ProblemDocument,
    ProblemListResponse,
    SampleRow,
    SolveRequest,
    SolveResponse,
    SweepRequest,
    SweepResponse,
    SweepRow,
    ValidateRequest,
    ValidateResponse,
    VerifyRequest,
    VerifyResponse,
    document_to_spec,
)
from .solver import VerificationOutcome, run_verification, u_at_batch
from .utils import ordered_map, row_norms

app = FastAPI(title="hjjumps", version=__version__)


def _spec_or_400(doc: ProblemDocument) -> ProblemSpec:
    try:
        return document_to_spec(doc)
    except ExprError as err:
        raise HTTPException(
            status_code=400,
            detail={"error": "expression", "message": str(err), "position": err.position},
        )
    except ValueError as err:
        raise HTTPException(status_code=400, detail={"error": "problem", "message": str(err)})


def _validate_response(name: str, report: HypothesisReport) -> ValidateResponse:
    return ValidateResponse(
        name=name,
        regime=report.regime,
        passed=report.passed,
        conditions=[
            ConditionModel(
                id=c.id,
                description=c.description,
                passed=c.passed,
                value=c.value,
                bound=c.bound,
                margin=c.margin,
                witness=dict(c.witness) if c.witness is not None else None,
            )
            for c in report.conditions
        ],
        constants=ConstantsModel(**asdict(report.constants)),
    )


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__, "schema_version": SCHEMA_VERSION}


@app.get("/problems", response_model=ProblemListResponse)
def list_problems() -> ProblemListResponse:
    return ProblemListResponse(names=problems.names())


@app.get("/problems/{name}")
def get_problem(name: str) -> dict:
    try:
        return problems.load_raw(name)
    except KeyError as err:
        raise HTTPException(status_code=404, detail=str(err))


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    spec = _spec_or_400(req.problem)
    report = spec.validation(req.resolution_scale)
    return _validate_response(req.problem.meta.name, report)


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    spec = _spec_or_400(req.problem)
    if (req.points is None) == (req.grid is None):
        raise HTTPException(
            status_code=400,
            detail={"error": "usage", "message": "give either points or grid, not both"},
        )
    if req.points is not None:
        pts = np.asarray(req.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != spec.n:
            raise HTTPException(
                status_code=400,
                detail={"error": "usage", "message": f"points must have {spec.n} components"},
            )
    else:
        pts = grids.ball_grid(spec.x_star, spec.gamma, req.grid)

    # t-major, then grid order (box raveling is lexicographic in x)
    queries: list[tuple[float, np.ndarray]] = [
        (float(t), x) for t in req.times for x in pts
    ]
    rows: list[SampleRow | None] = [None] * len(queries)
    good_idx, good_ts, good_xs = [], [], []
    for i, (t, x) in enumerate(queries):
        if not 0.0 <= t <= spec.schedule.horizon:
            rows[i] = SampleRow(t=t, x=list(x), error="time outside [0, horizon]")
        elif float(row_norms(x - spec.x_star)) > spec.gamma + 1e-12:
            rows[i] = SampleRow(t=t, x=list(x), error="point outside the gamma ball")
        else:
            good_idx.append(i)
            good_ts.append(t)
            good_xs.append(x)
    if good_idx:
        try:
            sol = u_at_batch(spec, np.asarray(good_ts), np.vstack(good_xs))
        except HjjError as err:
            raise HTTPException(status_code=400, detail={"error": "solve", "message": str(err)})
        for pos, i in enumerate(good_idx):
            rows[i] = SampleRow(
                t=sol.ts[pos],
                x=[float(v) for v in sol.xs[pos]],
                u=float(sol.u[pos]),
                p=[float(v) for v in sol.p[pos]],
                interval=int(sol.interval[pos]),
                iterations=int(sol.inversion.iterations[pos]),
                residual=float(sol.inversion.residual[pos]),
            )
    failed = sum(1 for r in rows if r is not None and r.error is not None)
    return SolveResponse(name=req.problem.meta.name, rows=rows, failed_rows=failed)


def _verify_response(name: str, outcome: VerificationOutcome) -> VerifyResponse:
    decay = []
    if outcome.decay is not None:
        decay = [
            DecayIntervalModel(
                j=iv.j,
                t_mid=iv.t_mid,
                sup_u_deviation=iv.sup_u_deviation,
                u_bound=iv.u_bound,
                u_passed=iv.u_passed,
                sup_gradient=[float(v) for v in iv.sup_gradient],
                gradient_bounds=[float(v) for v in iv.gradient_bounds],
                gradient_passed=iv.gradient_passed,
            )
            for iv in outcome.decay.intervals
        ]
    lemma = None
    if outcome.lemma is not None:
        lemma = LemmaCheckModel(
            max_jump_expansion=outcome.lemma.max_jump_expansion,
            max_initial_excess=outcome.lemma.max_initial_excess,
            passed=outcome.lemma.passed,
        )
    return VerifyResponse(
        name=name,
        regime=outcome.regime,
        validated=outcome.validated,
        passed=outcome.passed,
        mode=outcome.mode,
        decay=decay,
        flow_deriv_bounds=(
            [float(v) for v in outcome.decay.flow_deriv_bounds] if outcome.decay else []
        ),
        max_residual=outcome.max_residual,
        max_jump_violation=outcome.max_jump_violation,
        round_trip_forward=outcome.round_trip.forward_max if outcome.round_trip else None,
        round_trip_backward=outcome.round_trip.backward_max if outcome.round_trip else None,
        max_modulus=outcome.max_modulus,
        lemma_suite=lemma,
        failures=outcome.failures,
    )


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest) -> VerifyResponse:
    spec = _spec_or_400(req.problem)
    try:
        outcome = run_verification(
            spec,
            intervals=req.intervals,
            grid_points=req.grid,
            force=req.force,
            round_trips=req.round_trips,
            residual_points=req.residual_points,
            seed=req.seed,
        )
    except HjjError as err:
        raise HTTPException(status_code=400, detail={"error": "verify", "message": str(err)})
    return _verify_response(req.problem.meta.name, outcome)


def apply_param(raw: dict, path: str, value: float) -> dict:
    """Set a numeric field addressed by a dotted path on a document copy.

    ``schedule.delta`` is a virtual path assigning every jump component.
    """
    doc = copy.deepcopy(raw)
    if path == "schedule.delta":
        deltas = doc.get("schedule", {}).get("deltas")
        if not deltas:
            raise KeyError("document has no schedule.deltas to assign")
        doc["schedule"]["deltas"] = [[value for _ in row] for row in deltas]
        return doc
    node = doc
    parts = path.split(".")
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise KeyError(f"no section {part!r} in the document")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise KeyError(f"no field {path!r} in the document")
    if not isinstance(node[leaf], (int, float)) or isinstance(node[leaf], bool):
        raise KeyError(f"field {path!r} is not numeric")
    node[leaf] = value
    return doc


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    raw = req.problem.model_dump(exclude_none=True)
    try:
        docs = [
            ProblemDocument.model_validate(apply_param(raw, req.param_path, v))
            for v in req.values
        ]
    except KeyError as err:
        raise HTTPException(status_code=400, detail={"error": "param-path", "message": str(err)})

    def run_one(pair: tuple[float, ProblemDocument]) -> SweepRow:
        value, doc = pair
        try:
            spec = document_to_spec(doc)
            report = validate_hypotheses(spec)
        except (ExprError, ValueError) as err:
            return SweepRow(
                value=value,
                validate_passed=False,
                tightest_margin=float("-inf"),
                worst_condition="document",
                note=str(err),
            )
        worst = min(report.conditions, key=lambda c: c.margin)
        row = SweepRow(
            value=value,
            validate_passed=report.passed,
            tightest_margin=report.tightest_margin,
            worst_condition=worst.id,
        )
        if report.passed:
            outcome = run_verification(
                spec,
                intervals=req.intervals,
                grid_points=req.grid,
                round_trips=req.round_trips,
                residual_points=req.residual_points,
            )
            row.verify_passed = outcome.passed
            if outcome.failures:
                row.note = outcome.failures[0]
        return row

    rows = ordered_map(run_one, list(zip(req.values, docs)))
    return SweepResponse(name=req.problem.meta.name, param_path=req.param_path, rows=rows)

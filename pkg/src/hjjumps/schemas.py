"""Pydantic models: problem documents plus service request/response bodies."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from . import SCHEMA_VERSION
from .problem import REGIMES, JumpSchedule, NumericsConfig, ProblemSpec


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------------------
# problem document (the on-disk JSON format)


class MetaSection(StrictModel):
    name: str
    regime: Literal[REGIMES]  # type: ignore[valid-type]


class DimsSection(StrictModel):
    n: int = Field(ge=1)
    m: int = Field(ge=1)


class EquilibriumSection(StrictModel):
    u_star: float
    x_star: list[float]
    gamma: float = Field(gt=0.0)


class FunctionsSection(StrictModel):
    L: str
    alphas: list[str]
    gfields: list[list[str]]
    h: list[str]
    u0: str


class ScheduleSection(StrictModel):
    mode: Literal["periodic", "explicit"]
    horizon: float = Field(gt=0.0)
    period: Optional[float] = None
    times: Optional[list[float]] = None
    deltas: list[list[float]]


class NumericsSection(StrictModel):
    step: Optional[float] = None
    tol: Optional[float] = None
    max_iter: Optional[int] = None
    u_grid_points: Optional[int] = None
    x_points_per_axis: Optional[int] = None
    u_grid_points_2d: Optional[int] = None
    lhs_points: Optional[int] = None
    lhs_seed: Optional[int] = None
    wide_halfwidth: Optional[float] = None
    commute_tol: Optional[float] = None
    zero_tol: Optional[float] = None
    residual_dt: Optional[float] = None
    residual_dx: Optional[float] = None


class ProblemDocument(StrictModel):
    """Complete problem file; expression strings use the package grammar."""

    meta: MetaSection
    dims: DimsSection
    equilibrium: EquilibriumSection
    functions: FunctionsSection
    schedule: ScheduleSection
    numerics: Optional[NumericsSection] = None


def build_schedule(section: ScheduleSection, m: int) -> JumpSchedule:
    if section.mode == "periodic":
        if section.period is None:
            raise ValueError("periodic schedule needs a period")
        if len(section.deltas) != 1:
            raise ValueError("periodic schedule uses exactly one delta row")
        return JumpSchedule.periodic(section.period, section.deltas[0], section.horizon)
    if section.times is None:
        raise ValueError("explicit schedule needs times")
    return JumpSchedule(section.times, section.deltas, section.horizon)


def build_numerics(section: NumericsSection | None) -> NumericsConfig:
    if section is None:
        return NumericsConfig()
    overrides = {k: v for k, v in section.model_dump().items() if v is not None}
    return NumericsConfig(**overrides)


def document_to_spec(doc: ProblemDocument) -> ProblemSpec:
    """Materialize a parsed document into a problem instance.

    Raises ValueError or an expression error (with position) on any
    inconsistency; the document itself is already shape-checked by pydantic.
    """
    return ProblemSpec.from_strings(
        name=doc.meta.name,
        regime=doc.meta.regime,
        n=doc.dims.n,
        m=doc.dims.m,
        u_star=doc.equilibrium.u_star,
        x_star=doc.equilibrium.x_star,
        gamma=doc.equilibrium.gamma,
        L=doc.functions.L,
        alphas=doc.functions.alphas,
        gfields=doc.functions.gfields,
        h=doc.functions.h,
        u0=doc.functions.u0,
        schedule=build_schedule(doc.schedule, doc.dims.m),
        numerics=build_numerics(doc.numerics),
    )


# ---------------------------------------------------------------------------
# service bodies


class ConstantsModel(StrictModel):
    c1: float
    c2: float
    k0: float
    k1: float
    d: float
    beta: float
    rho: float
    delta: float
    gamma_l: float
    u_grid_points: int
    x_points_per_axis: int
    wide_halfwidth: float
    lhs_seed: int


class ConditionModel(StrictModel):
    id: str
    description: str
    passed: bool
    value: float
    bound: float
    margin: float
    witness: Optional[dict] = None


class ValidateRequest(StrictModel):
    problem: ProblemDocument
    resolution_scale: int = Field(default=1, ge=1)


class ValidateResponse(StrictModel):
    schema_version: int = SCHEMA_VERSION
    name: str
    regime: str
    passed: bool
    conditions: list[ConditionModel]
    constants: ConstantsModel


class SolveRequest(StrictModel):
    problem: ProblemDocument
    times: list[float]
    points: Optional[list[list[float]]] = None
    grid: Optional[int] = Field(default=None, ge=2)


class SampleRow(StrictModel):
    t: float
    x: list[float]
    u: Optional[float] = None
    p: Optional[list[float]] = None
    interval: Optional[int] = None
    iterations: Optional[int] = None
    residual: Optional[float] = None
    error: Optional[str] = None


class SolveResponse(StrictModel):
    schema_version: int = SCHEMA_VERSION
    name: str
    rows: list[SampleRow]
    failed_rows: int


class VerifyRequest(StrictModel):
    problem: ProblemDocument
    intervals: int = Field(default=10, ge=1)
    grid: int = Field(default=21, ge=2)
    force: bool = False
    round_trips: int = Field(default=20, ge=0)
    residual_points: int = Field(default=20, ge=0)
    seed: int = 0


class DecayIntervalModel(StrictModel):
    j: int
    t_mid: float
    sup_u_deviation: float
    u_bound: float
    u_passed: bool
    sup_gradient: list[float]
    gradient_bounds: list[float]
    gradient_passed: bool


class LemmaCheckModel(StrictModel):
    max_jump_expansion: float
    max_initial_excess: float
    passed: bool


class VerifyResponse(StrictModel):
    schema_version: int = SCHEMA_VERSION
    name: str
    regime: str
    validated: bool
    passed: bool
    mode: Literal["inversion", "simulation"]
    decay: list[DecayIntervalModel] = []
    flow_deriv_bounds: list[float] = []
    max_residual: Optional[float] = None
    max_jump_violation: Optional[float] = None
    round_trip_forward: Optional[float] = None
    round_trip_backward: Optional[float] = None
    max_modulus: Optional[float] = None
    lemma_suite: Optional[LemmaCheckModel] = None
    failures: list[str] = []


class SweepRequest(StrictModel):
    problem: ProblemDocument
    param_path: str
    values: list[float]
    intervals: int = Field(default=5, ge=1)
    grid: int = Field(default=11, ge=2)
    round_trips: int = Field(default=5, ge=0)
    residual_points: int = Field(default=5, ge=0)


class SweepRow(StrictModel):
    value: float
    validate_passed: bool
    verify_passed: Optional[bool] = None
    tightest_margin: float
    worst_condition: str
    note: str = ""


class SweepResponse(StrictModel):
    schema_version: int = SCHEMA_VERSION
    name: str
    param_path: str
    rows: list[SweepRow]


class ProblemListResponse(StrictModel):
    schema_version: int = SCHEMA_VERSION
    names: list[str]

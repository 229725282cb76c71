"""Pydantic request/response models for the HTTP service.

Configs travel inline: either the name of a shipped prototype ("forbal2",
"forbal5") or a full config document, so the service stays stateless and the
CLI a pure client.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

ConfigRef = str | dict[str, Any]


class BalanceRequest(BaseModel):
    config: ConfigRef
    profile: Literal["link12-short", "link12-extended"] = "link12-short"
    rings: bool = False
    mounting: dict[str, float] | None = None


class ResidualsModel(BaseModel):
    c11: float
    c12: float
    c21: float
    max_abs: float


class RingStackModel(BaseModel):
    count_large: int
    count_small: int
    achieved_mass: float
    residual_mass: float


class BalanceResponse(BaseModel):
    profile: str
    counter_masses: dict[str, float]
    mounting: dict[str, float]
    total_mass_with_cm: float
    residuals_before: ResidualsModel
    residuals_after: ResidualsModel
    ring_stacks: dict[str, RingStackModel] | None = None


class IkRequest(BaseModel):
    config: ConfigRef
    target: list[float] = Field(min_length=2, max_length=5)
    enforce_limits: bool = False


class IkResponse(BaseModel):
    q11: float
    q21: float
    q12: float
    q22: float
    beta: float
    gamma: float
    theta_be: float
    p_be_norm: float
    q0: float | None = None
    q3: float | None = None
    q4: float | None = None


class ReachabilityRequest(BaseModel):
    config: ConfigRef
    target: list[float] = Field(min_length=2, max_length=5)
    use_limits: bool = True


class ReachabilityResponse(BaseModel):
    status: Literal["reachable", "unreachable", "near-singular"]
    margin: float


class TrajectoryExportResponse(BaseModel):
    id: str
    space: str
    closed: bool
    duration: float
    csv: str
    t_acc: float
    t_dec: float


class SimulateRequest(BaseModel):
    config: ConfigRef
    traj: str                      # builtin id or waypoint CSV text
    configuration: Literal["balanced", "unbalanced"] = "balanced"
    dt: float | None = None


class SummaryEntry(BaseModel):
    mean_abs: float
    max_abs: float


class SimulateResponse(BaseModel):
    traj_id: str
    configuration: str
    dt: float
    csv: str
    summary: dict[str, SummaryEntry]
    static_offset: dict[str, float]


class WorkspaceRequest(BaseModel):
    config: ConfigRef
    spacing_deg: float = 10.0


class WorkspaceResponse(BaseModel):
    area: float
    max_reach: float
    max_reach_shoulder: float
    center: list[float]
    boundary: list[list[float]]
    toroid_volume: float | None = None
    svg: str
    csv: str


class ReportRequest(BaseModel):
    config: ConfigRef
    traj: str
    dt: float | None = None


class ReportResponse(BaseModel):
    traj_id: str
    dt: float
    balanced_csv: str
    unbalanced_csv: str
    metrics: dict[str, Any]
    plot_svg: str


class ErrorBody(BaseModel):
    code: str
    message: str

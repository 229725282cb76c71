"""FastAPI service wrapping the core toolkit.

Every endpoint is a pure function of its request body; domain errors map to
HTTP 422 with a machine-readable ``code`` (the CLI turns ``unreachable`` into
its own exit status).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .. import __version__
from ..balance import (
    balance_residuals,
    apply_solution,
    ring_quantize,
    solve_counter_masses,
)
from ..config import BUILTIN_CONFIGS, builtin_config_doc, load_config
from ..errors import ForbalError, UnknownId
from ..harness import (
    effective_dt,
    reduction_metrics,
    render_svg,
    run_experiment,
)
from ..ik import ik_forbal2, ik_forbal5, reachability
from ..trajectory import (
    BUILTIN_IDS,
    builtin,
    waypoints_from_csv,
    waypoints_to_csv,
)
from ..workspace import boundary_csv, boundary_svg, toroid_volume, trace_workspace
from . import schemas as sm


def _residuals_model(res) -> sm.ResidualsModel:
    return sm.ResidualsModel(c11=res.c11, c12=res.c12, c21=res.c21,
                             max_abs=res.max_abs())


def create_app() -> FastAPI:
    app = FastAPI(title="forbal", version=__version__,
                  description="Force-balanced five-bar manipulator toolkit")

    @app.exception_handler(ForbalError)
    async def _domain_error(_, exc: ForbalError):
        body = sm.ErrorBody(code=exc.code, message=str(exc))
        return JSONResponse(status_code=422, content=body.model_dump())

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.get("/configs")
    def configs():
        return {"builtin": list(BUILTIN_CONFIGS)}

    @app.get("/configs/{name}")
    def config_doc(name: str):
        return builtin_config_doc(name)

    @app.get("/trajectories")
    def trajectories():
        return {"builtin": list(BUILTIN_IDS)}

    @app.post("/balance/solve", response_model=sm.BalanceResponse)
    def balance_solve(req: sm.BalanceRequest):
        spec = load_config(req.config)
        before = balance_residuals(spec.zeroed_counter_masses())
        sol = solve_counter_masses(spec, profile=req.profile, mounting=req.mounting)
        after = balance_residuals(apply_solution(spec, sol))
        rings = None
        if req.rings:
            rings = {k: sm.RingStackModel(**vars(ring_quantize(m)))
                     for k, m in sol.masses().items()}
        return sm.BalanceResponse(
            profile=sol.profile, counter_masses=sol.masses(),
            mounting=sol.mounting, total_mass_with_cm=sol.total_mass_with_cm,
            residuals_before=_residuals_model(before),
            residuals_after=_residuals_model(after), ring_stacks=rings)

    @app.post("/ik/solve", response_model=sm.IkResponse, response_model_exclude_none=True)
    def ik_solve(req: sm.IkRequest):
        spec = load_config(req.config)
        if len(req.target) == 2:
            sol = ik_forbal2(spec, req.target, enforce_limits=req.enforce_limits)
        elif len(req.target) == 5:
            sol = ik_forbal5(spec, req.target, enforce_limits=req.enforce_limits)
        else:
            raise HTTPException(400, "target must have 2 (x,z) or 5 (x,y,z,beta,gamma) values")
        return sm.IkResponse(**sol.as_dict())

    @app.post("/ik/reachability", response_model=sm.ReachabilityResponse)
    def ik_reachability(req: sm.ReachabilityRequest):
        spec = load_config(req.config)
        rep = reachability(spec, req.target, use_limits=req.use_limits)
        return sm.ReachabilityResponse(status=rep.status, margin=rep.margin)

    @app.get("/trajectory/{traj_id}", response_model=sm.TrajectoryExportResponse)
    def trajectory_export(traj_id: str, config: str = "forbal2"):
        spec = load_config(config)
        wps, law = builtin(traj_id, spec)
        return sm.TrajectoryExportResponse(
            id=traj_id, space=wps.space, closed=wps.closed, duration=wps.duration,
            csv=waypoints_to_csv(wps), t_acc=law.t_acc, t_dec=law.t_dec)

    def _resolve_traj(spec, traj: str):
        if traj in BUILTIN_IDS:
            return traj
        if "," in traj or "\n" in traj:
            return waypoints_from_csv(traj)
        raise UnknownId(f"unknown trajectory {traj!r}; pass a builtin id or CSV text")

    @app.post("/simulate", response_model=sm.SimulateResponse)
    def simulate(req: sm.SimulateRequest):
        spec = load_config(req.config)
        traj = _resolve_traj(spec, req.traj)
        result = run_experiment(spec, traj, dt=req.dt, both_configs=False,
                                configuration=req.configuration)
        return sm.SimulateResponse(
            traj_id=result.traj_id, configuration=result.configuration,
            dt=result.dt, csv=result.to_csv(),
            summary={k: sm.SummaryEntry(**v) for k, v in result.summary.items()},
            static_offset=result.static_offset)

    @app.post("/workspace", response_model=sm.WorkspaceResponse)
    def workspace(req: sm.WorkspaceRequest):
        spec = load_config(req.config)
        trace = trace_workspace(spec, ray_spacing_deg=req.spacing_deg)
        volume = None
        if spec.spatial is not None:
            volume = toroid_volume(trace, spec)
        return sm.WorkspaceResponse(
            area=trace.area, max_reach=trace.max_reach,
            max_reach_shoulder=trace.max_reach_shoulder,
            center=[float(v) for v in trace.center],
            boundary=[[float(x), float(z)] for x, z in trace.boundary],
            toroid_volume=volume, svg=boundary_svg(trace), csv=boundary_csv(trace))

    @app.post("/report", response_model=sm.ReportResponse)
    def report(req: sm.ReportRequest):
        spec = load_config(req.config)
        traj = _resolve_traj(spec, req.traj)
        dt = effective_dt(req.dt)
        bal, unbal = run_experiment(spec, traj, dt=dt)
        metrics = reduction_metrics(bal, unbal).as_dict()
        metrics["static_offset"] = {"balanced": bal.static_offset,
                                    "unbalanced": unbal.static_offset}
        return sm.ReportResponse(
            traj_id=bal.traj_id, dt=dt, balanced_csv=bal.to_csv(),
            unbalanced_csv=unbal.to_csv(), metrics=metrics,
            plot_svg=render_svg([bal, unbal]))

    return app


app = create_app()

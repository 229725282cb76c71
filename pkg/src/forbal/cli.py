"""Command-line client for the toolkit service.

The CLI only speaks the HTTP API: by default it mounts the service in
process (no network, no server needed); ``--server URL`` points it at a
running instance instead.  Config files are read locally and embedded in the
request, so a remote server never needs the client's filesystem.

Exit codes: 0 success, 1 toolkit error, 2 usage error, 3 unreachable target.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

EXIT_ERROR = 1
EXIT_UNREACHABLE = 3


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=300.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # starlette/httpx pairing notice
        from starlette.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _config_ref(value: str):
    """Builtin name, or a local JSON file embedded into the request."""
    if value in ("forbal2", "forbal5"):
        return value
    path = Path(value)
    if not path.exists():
        print(f"error: config file not found: {value}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)
    return json.loads(path.read_text("utf-8"))


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code == 200:
        return resp.json()
    try:
        body = resp.json()
    except json.JSONDecodeError:
        body = {"code": "http", "message": resp.text}
    if isinstance(body.get("detail"), dict):
        body = body["detail"]
    code = body.get("code", "error")
    message = body.get("message", body.get("detail", resp.text))
    print(f"error [{code}]: {message}", file=sys.stderr)
    raise SystemExit(EXIT_UNREACHABLE if code == "unreachable" else EXIT_ERROR)


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(f"wrote {out}")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dt_arg(args) -> float | None:
    if args.dt is not None:
        return args.dt
    env = os.environ.get("FORBAL_DT")
    return float(env) if env else None


def cmd_design_balance(args, client) -> int:
    profile = {"short": "link12-short", "extended": "link12-extended"}[args.profile]
    body = _post(client, "/balance/solve", {
        "config": _config_ref(args.config), "profile": profile, "rings": args.rings})
    text = json.dumps(body, indent=2)
    if args.out:
        _write_or_print(text, args.out)
    else:
        print(text)
    return 0


def cmd_ik(args, client) -> int:
    target = [float(v) for v in args.target.split(",")]
    body = _post(client, "/ik/solve", {
        "config": _config_ref(args.config), "target": target,
        "enforce_limits": args.limits})
    print(json.dumps(body, indent=2))
    return 0


def cmd_simulate(args, client) -> int:
    traj = args.traj
    if Path(traj).exists():
        traj = Path(traj).read_text("utf-8")
    body = _post(client, "/simulate", {
        "config": _config_ref(args.config), "traj": traj,
        "configuration": "unbalanced" if args.unbalanced else "balanced",
        "dt": _dt_arg(args)})
    _write_or_print(body["csv"], args.out)
    return 0


def cmd_workspace(args, client) -> int:
    body = _post(client, "/workspace", {
        "config": _config_ref(args.config), "spacing_deg": args.spacing})
    print(f"area: {body['area']:.6g} m^2  max reach: {body['max_reach']:.6g} m",
          file=sys.stderr)
    if body.get("toroid_volume") is not None:
        print(f"toroid volume: {body['toroid_volume']:.6g} m^3", file=sys.stderr)
    if args.out and args.out.endswith(".csv"):
        _write_or_print(body["csv"], args.out)
    else:
        _write_or_print(body["svg"], args.out)
    return 0


def cmd_traj_export(args, client) -> int:
    config = _config_ref(args.config)
    query = args.config if isinstance(config, str) else "forbal2"
    resp = client.get(f"/trajectory/{args.id}", params={"config": query})
    if resp.status_code != 200:
        body = resp.json()
        if isinstance(body.get("detail"), dict):
            body = body["detail"]
        print(f"error [{body.get('code', 'error')}]: {body.get('message')}",
              file=sys.stderr)
        return EXIT_ERROR
    _write_or_print(resp.json()["csv"], args.out)
    return 0


def cmd_report(args, client) -> int:
    body = _post(client, "/report", {
        "config": _config_ref(args.config), "traj": args.traj, "dt": _dt_arg(args)})
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "balanced.csv").write_text(body["balanced_csv"], encoding="utf-8")
    (out_dir / "unbalanced.csv").write_text(body["unbalanced_csv"], encoding="utf-8")
    (out_dir / "metrics.json").write_text(
        json.dumps(body["metrics"], indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out_dir / "plot.svg").write_text(body["plot_svg"], encoding="utf-8")
    print(f"wrote balanced.csv, unbalanced.csv, metrics.json, plot.svg to {out_dir}")
    return 0


def cmd_serve(args, _client) -> int:
    import uvicorn

    uvicorn.run("forbal.service.app:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forbal",
        description="Design and simulation toolkit for force-balanced "
                    "five-bar manipulators")
    parser.add_argument("--server", help="URL of a running service "
                                         "(default: run in process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design-balance", help="solve counter masses")
    p.add_argument("--config", required=True)
    p.add_argument("--profile", choices=["short", "extended"], default="short")
    p.add_argument("--rings", action="store_true",
                   help="also print nearest physical ring stacks")
    p.add_argument("--out")
    p.set_defaults(func=cmd_design_balance)

    p = sub.add_parser("ik", help="inverse kinematics for one target")
    p.add_argument("--config", required=True)
    p.add_argument("--target", required=True,
                   help="x,z (planar) or x,y,z,beta,gamma (spatial)")
    p.add_argument("--limits", action="store_true", help="enforce joint limits")
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("simulate", help="run one trajectory, write the CSV stream")
    p.add_argument("--config", required=True)
    p.add_argument("--traj", required=True, help="builtin id or waypoint CSV file")
    p.add_argument("--unbalanced", action="store_true")
    p.add_argument("--dt", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("workspace", help="trace the reachable workspace")
    p.add_argument("--config", required=True)
    p.add_argument("--spacing", type=float, default=10.0, help="ray spacing, degrees")
    p.add_argument("--out", help="output file (.svg or .csv)")
    p.set_defaults(func=cmd_workspace)

    p_traj = sub.add_parser("traj", help="trajectory utilities")
    traj_sub = p_traj.add_subparsers(dest="traj_command", required=True)
    p = traj_sub.add_parser("export", help="export a builtin waypoint set as CSV")
    p.add_argument("id")
    p.add_argument("--config", default="forbal2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_traj_export)

    p = sub.add_parser("report", help="balanced vs unbalanced comparison artifacts")
    p.add_argument("--config", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--dt", type=float)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return args.func(args, None)
    with _client(args.server) as client:
        return args.func(args, client)


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line client for the solver service.

Commands build a request from a problem file (a path or the name of a
bundled example), send it to the service and format the response.  By
default requests run against an in-process instance of the app, so no
server is needed; ``--server URL`` points the same commands at a remote
deployment and ``hjj serve`` starts one.

Exit codes: 0 all checks passed, 1 a checked condition failed, 2 usage,
parse or protocol errors.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click
import httpx

from . import __version__

PASS_EXIT, FAIL_EXIT, USAGE_EXIT = 0, 1, 2


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(USAGE_EXIT)


def _make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    import warnings

    with warnings.catch_warnings():
        # some starlette builds warn on import about their httpx coupling
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _load_problem(client: httpx.Client, source: str) -> dict:
    path = Path(source)
    if path.exists():
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as err:
            _fail(f"{source} is not valid JSON: {err}")
    resp = client.get(f"/problems/{source}")
    if resp.status_code == 200:
        return resp.json()
    _fail(f"{source}: no such file or bundled problem")
    raise AssertionError("unreachable")


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        _fail(f"{path} returned {resp.status_code}: {json.dumps(detail)}")
    return resp.json()


def _echo_json(data: dict) -> None:
    click.echo(json.dumps(data, indent=2))


def _echo_csv(header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    click.echo(buf.getvalue(), nl=False)


server_option = click.option("--server", default=None, help="remote service URL")
format_option = lambda default, choices: click.option(  # noqa: E731
    "--format", "fmt", type=click.Choice(choices), default=default, show_default=True
)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Solve and verify Hamilton-Jacobi problems with scheduled jumps."""


# ---------------------------------------------------------------------------


@main.command()
@click.argument("file")
@click.option("--scale", default=1, show_default=True, help="grid refinement factor")
@format_option("table", ["table", "json"])
@server_option
def validate(file: str, scale: int, fmt: str, server: str | None) -> None:
    """Check every hypothesis of the problem's regime."""
    client = _make_client(server)
    data = _post(
        client,
        "/validate",
        {"problem": _load_problem(client, file), "resolution_scale": scale},
    )
    if fmt == "json":
        _echo_json(data)
    else:
        click.echo(f"{data['name']}  regime={data['regime']}")
        for cond in data["conditions"]:
            status = "pass" if cond["passed"] else "FAIL"
            click.echo(
                f"  [{status}] {cond['id']:<28} value={cond['value']:< .6g} "
                f"bound={cond['bound']:< .6g} margin={cond['margin']:< .6g}"
            )
        consts = data["constants"]
        click.echo(
            "  constants: "
            + " ".join(f"{k}={consts[k]:.6g}" for k in ("c1", "c2", "k0", "k1", "d", "beta", "rho", "delta"))
        )
        click.echo("result: " + ("PASS" if data["passed"] else "FAIL"))
    sys.exit(PASS_EXIT if data["passed"] else FAIL_EXIT)


@main.command()
@click.argument("file")
@click.option("--t", "times", type=float, multiple=True, required=True, help="sample time (repeatable)")
@click.option("--x", "points", multiple=True, help="comma-separated point (repeatable)")
@click.option("--grid", type=int, default=None, help="points per axis over the gamma ball")
@format_option("csv", ["csv", "json"])
@server_option
def solve(
    file: str,
    times: tuple[float, ...],
    points: tuple[str, ...],
    grid: int | None,
    fmt: str,
    server: str | None,
) -> None:
    """Evaluate the solution and its gradient at sample points."""
    if bool(points) == (grid is not None):
        _fail("give either --x points or --grid, not both")
    client = _make_client(server)
    payload: dict = {"problem": _load_problem(client, file), "times": list(times)}
    if points:
        try:
            payload["points"] = [[float(v) for v in p.split(",")] for p in points]
        except ValueError:
            _fail("--x expects comma-separated numbers")
    else:
        payload["grid"] = grid
    data = _post(client, "/solve", payload)
    rows = data["rows"]
    if fmt == "json":
        _echo_json(data)
    else:
        n = len(rows[0]["x"]) if rows else 0
        header = (
            ["t"]
            + [f"x{i+1}" for i in range(n)]
            + ["u"]
            + [f"p{i+1}" for i in range(n)]
            + ["interval", "iterations", "residual", "error"]
        )
        out = []
        for row in rows:
            out.append(
                [row["t"], *row["x"]]
                + ([row["u"], *row["p"]] if row.get("u") is not None else [""] * (n + 1))
                + [
                    row.get("interval", ""),
                    row.get("iterations", ""),
                    row.get("residual", ""),
                    row.get("error") or "",
                ]
            )
        _echo_csv(header, out)
    sys.exit(FAIL_EXIT if data["failed_rows"] else PASS_EXIT)


@main.command()
@click.argument("file")
@click.option("--intervals", default=10, show_default=True)
@click.option("--grid", default=21, show_default=True)
@click.option("--force", is_flag=True, help="verify even when validation fails")
@click.option("--round-trips", default=20, show_default=True)
@click.option("--residual-points", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@format_option("table", ["table", "json"])
@server_option
def verify(
    file: str,
    intervals: int,
    grid: int,
    force: bool,
    round_trips: int,
    residual_points: int,
    seed: int,
    fmt: str,
    server: str | None,
) -> None:
    """Run decay, residual, jump and round-trip checks."""
    client = _make_client(server)
    data = _post(
        client,
        "/verify",
        {
            "problem": _load_problem(client, file),
            "intervals": intervals,
            "grid": grid,
            "force": force,
            "round_trips": round_trips,
            "residual_points": residual_points,
            "seed": seed,
        },
    )
    if fmt == "json":
        _echo_json(data)
    else:
        click.echo(f"{data['name']}  regime={data['regime']}  mode={data['mode']}")
        for iv in data["decay"]:
            mark = "pass" if iv["u_passed"] and iv["gradient_passed"] else "FAIL"
            click.echo(
                f"  [{mark}] interval {iv['j']:>2}  sup|u-u*|={iv['sup_u_deviation']:.3e}"
                f" <= {iv['u_bound']:.3e}  sup|du|={max(iv['sup_gradient']):.3e}"
            )
        if data["max_residual"] is not None:
            click.echo(f"  max interior residual : {data['max_residual']:.3e}")
        if data["max_jump_violation"] is not None:
            click.echo(f"  max jump violation    : {data['max_jump_violation']:.3e}")
        if data["round_trip_forward"] is not None:
            click.echo(
                f"  round trips           : {data['round_trip_forward']:.3e} forward, "
                f"{data['round_trip_backward']:.3e} backward"
            )
        if data["lemma_suite"] is not None:
            ls = data["lemma_suite"]
            click.echo(
                f"  jump expansion {ls['max_jump_expansion']:.3e}, "
                f"initial excess {ls['max_initial_excess']:.3e}"
            )
        for failure in data["failures"]:
            click.echo(f"  failure: {failure}")
        click.echo("result: " + ("PASS" if data["passed"] else "FAIL"))
    sys.exit(PASS_EXIT if data["passed"] else FAIL_EXIT)


@main.command()
@click.argument("file")
@click.option("--param", "param_path", required=True, help="dotted document path, e.g. schedule.period")
@click.option("--values", required=True, help="comma-separated numbers")
@click.option("--intervals", default=5, show_default=True)
@click.option("--grid", default=11, show_default=True)
@format_option("csv", ["csv", "json"])
@server_option
def sweep(
    file: str,
    param_path: str,
    values: str,
    intervals: int,
    grid: int,
    fmt: str,
    server: str | None,
) -> None:
    """Re-validate and re-verify across a range of one numeric parameter."""
    try:
        value_list = [float(v) for v in values.split(",")]
    except ValueError:
        _fail("--values expects comma-separated numbers")
    client = _make_client(server)
    data = _post(
        client,
        "/sweep",
        {
            "problem": _load_problem(client, file),
            "param_path": param_path,
            "values": value_list,
            "intervals": intervals,
            "grid": grid,
        },
    )
    rows = data["rows"]
    if fmt == "json":
        _echo_json(data)
    else:
        out = [
            [
                r["value"],
                r["validate_passed"],
                "" if r["verify_passed"] is None else r["verify_passed"],
                r["tightest_margin"],
                r["worst_condition"],
                r["note"],
            ]
            for r in rows
        ]
        _echo_csv(
            ["value", "validate_passed", "verify_passed", "tightest_margin", "worst_condition", "note"],
            out,
        )
    all_ok = all(r["validate_passed"] and r["verify_passed"] for r in rows)
    sys.exit(PASS_EXIT if all_ok else FAIL_EXIT)


@main.command()
@click.option("--show", default=None, help="print one bundled problem document")
@server_option
def problems(show: str | None, server: str | None) -> None:
    """List or print the bundled example problems."""
    client = _make_client(server)
    if show is None:
        resp = client.get("/problems")
        if resp.status_code != 200:
            _fail(f"/problems returned {resp.status_code}")
        for name in resp.json()["names"]:
            click.echo(name)
    else:
        resp = client.get(f"/problems/{show}")
        if resp.status_code != 200:
            _fail(f"no bundled problem named {show!r}")
        _echo_json(resp.json())


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service under uvicorn."""
    import uvicorn

    uvicorn.run("hjjumps.service:app", host=host, port=port)


if __name__ == "__main__":
    main()

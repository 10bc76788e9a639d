"""Command-line interface for headless runs.

Exit codes: 0 success, 1 validation/session failure, 2 usage error,
3 provider error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .gateway import GatewayError, ProviderConfig, provider_for
from .geometry import (
    SectionConstraints,
    export_obj,
    interpolate_closed_section,
    loft,
    parse_coordinates,
    validate_section,
)
from .scene import FitError, build_room, repair_loop, scene_to_mesh, scene_to_script
from .session import DesignSession, SessionConfig
from .service import create_app, dump_session_fixture

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_PROVIDER = 3


def _provider_options(func):
    func = click.option("--provider", "provider_kind", type=click.Choice(["mock", "http"]),
                        default="mock", show_default=True)(func)
    func = click.option("--mock-script", type=click.Path(exists=True, dir_okay=False),
                        help="JSON reply script for the mock provider.")(func)
    func = click.option("--endpoint", help="Chat-completions endpoint URL (http provider).")(func)
    func = click.option("--model", "model_name", help="Model name sent to the endpoint.")(func)
    func = click.option("--api-key-env", default="LLM_API_KEY", show_default=True,
                        help="Environment variable holding the API key.")(func)
    func = click.option("--timeout", type=float, default=30.0, show_default=True)(func)
    func = click.option("--max-retries", type=int, default=2, show_default=True)(func)
    return func


def _build_provider_config(provider_kind, mock_script, endpoint, model_name,
                           api_key_env, timeout, max_retries) -> ProviderConfig:
    try:
        if provider_kind == "mock":
            if not mock_script:
                raise click.UsageError("--provider mock requires --mock-script")
            return ProviderConfig(kind="mock", script_path=mock_script,
                                  timeout=timeout, max_retries=max_retries)
        if not endpoint:
            raise click.UsageError("--provider http requires --endpoint")
        return ProviderConfig(kind="http", endpoint=endpoint, model_name=model_name,
                              api_key_env=api_key_env, timeout=timeout,
                              max_retries=max_retries)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def _constraints_from_flags(require_convex, forbid_self_intersection,
                            inner_radius, center_bound) -> SectionConstraints:
    try:
        return SectionConstraints(
            require_convex=require_convex,
            forbid_self_intersection=forbid_self_intersection,
            inner_circle_radius=inner_radius,
            center_bound_radius=center_bound,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


@click.group()
def main():
    """Prompt-driven parametric geometry engine."""


@main.command()
@click.option("--mode", type=click.Choice(["coordinate_sections", "equation_profile"]),
              default="coordinate_sections", show_default=True)
@click.option("--sections", type=int, default=3, show_default=True,
              help="Sections to accept before lofting.")
@click.option("--interval", type=float, default=0.0, show_default=True,
              help="Seconds between iteration starts (0 runs flat out).")
@click.option("--max-iterations", type=int, default=10, show_default=True)
@click.option("--degree", type=click.Choice(["0", "3"]), default="0", show_default=True)
@click.option("--spacing", type=float, default=1.0, show_default=True)
@click.option("--points", "points_per_section", type=int, default=None,
              help="Require exactly this many control points per reply.")
@click.option("--samples-per-span", type=int, default=16, show_default=True)
@click.option("--inner-radius", type=float, default=None,
              help="Radius of the circle every section must contain.")
@click.option("--center-bound", type=float, default=None,
              help="Max distance of each section centroid from the origin.")
@click.option("--require-convex/--allow-nonconvex", default=True, show_default=True)
@click.option("--forbid-self-intersection/--allow-self-intersection", default=True,
              show_default=True)
@click.option("--base-prompt", default=None, help="Override the base prompt text.")
@click.option("--preset", type=click.Choice(["placid", "drastic"]), default=None,
              help="Use a wave-style preset sentence as the base prompt.")
@click.option("--amplitude", type=float, default=1.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write the lofted model as OBJ here.")
@click.option("--record", "record_dir", type=click.Path(file_okay=False), default=None,
              help="Dump a replayable fixture bundle of the finished run.")
@click.option("--transcript-dir", type=click.Path(file_okay=False), default=None)
@_provider_options
def generate(mode, sections, interval, max_iterations, degree, spacing,
             points_per_section, samples_per_span, inner_radius, center_bound,
             require_convex, forbid_self_intersection, base_prompt, preset,
             amplitude, out_path, record_dir, transcript_dir, **provider_flags):
    """Run a generation session headless and loft the accepted sections."""
    from .session import describe_preset

    provider_config = _build_provider_config(**provider_flags)
    if preset is not None:
        base_prompt = describe_preset(preset)
    constraints = _constraints_from_flags(
        require_convex, forbid_self_intersection, inner_radius, center_bound
    )
    try:
        config = SessionConfig(
            mode=mode,
            sections_target=sections,
            max_iterations=max_iterations,
            trigger_interval=interval,
            section_spacing=spacing,
            degree=int(degree),
            constraints=constraints,
            samples_per_span=samples_per_span,
            points_per_section=points_per_section,
            amplitude=amplitude,
            base_prompt=base_prompt,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc

    session = DesignSession(config, provider_for(provider_config))
    events: list[dict] = []

    def on_tick(sess, outcome):
        snapshot = sess.snapshot()
        snapshot["outcome"] = outcome.to_json()
        events.append({"event": "iteration", "data": snapshot})
        click.echo(
            f"iteration {snapshot['iteration']}: {outcome.kind}"
            + (f" defects={[d.value for d in outcome.defects]}" if outcome.defects else "")
        )

    try:
        session.run_to_completion(on_tick=on_tick)
    except GatewayError as exc:
        click.echo(f"provider error: {exc}", err=True)
        sys.exit(EXIT_PROVIDER)

    events.append({"event": session.state, "data": session.snapshot()})
    if transcript_dir:
        from .gateway import write_transcript

        write_transcript(session.transcript, transcript_dir)
    if session.state != "complete":
        click.echo(f"session failed: {session.failure}", err=True)
        sys.exit(EXIT_FAILED)

    mesh = session.assemble_model()
    click.echo(
        f"complete: {len(session.accepted_sections)} sections, "
        f"{len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles"
    )
    if out_path:
        Path(out_path).write_bytes(export_obj(mesh))
        click.echo(f"wrote {out_path}")
    if record_dir:
        dump_session_fixture(session, events, record_dir)
        click.echo(f"recorded fixture bundle in {record_dir}")


@main.command()
@click.argument("coordinates_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--expected-count", type=int, default=None)
@click.option("--degree", type=click.Choice(["0", "3"]), default="0", show_default=True)
@click.option("--samples-per-span", type=int, default=16, show_default=True)
@click.option("--plane-axis", type=click.Choice(["x", "y", "z"]), default="y",
              show_default=True)
@click.option("--plane-value", type=float, default=0.0, show_default=True)
@click.option("--inner-radius", type=float, default=None)
@click.option("--center-bound", type=float, default=None)
@click.option("--require-convex/--allow-nonconvex", default=True, show_default=True)
@click.option("--forbid-self-intersection/--allow-self-intersection", default=True,
              show_default=True)
def validate(coordinates_file, expected_count, degree, samples_per_span, plane_axis,
             plane_value, inner_radius, center_bound, require_convex,
             forbid_self_intersection):
    """Validate a coordinates file; exits 0 only when every check passes."""
    constraints = _constraints_from_flags(
        require_convex, forbid_self_intersection, inner_radius, center_bound
    )
    payload = Path(coordinates_file).read_text(encoding="utf-8")
    try:
        points = parse_coordinates(payload, expected_count, plane_axis, plane_value)
        ring = interpolate_closed_section(points, int(degree), samples_per_span)
    except ValueError as exc:
        click.echo(json.dumps({"error": f"{type(exc).__name__}: {exc}", "passed": False}))
        sys.exit(EXIT_FAILED)
    report = validate_section(ring, constraints)
    click.echo(json.dumps(report.to_json(), indent=2))
    sys.exit(EXIT_OK if report.passed else EXIT_FAILED)


@main.command("loft")
@click.argument("coordinate_files", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--spacing", type=float, default=1.0, show_default=True,
              help="Stacking distance between consecutive section files.")
@click.option("--degree", type=click.Choice(["0", "3"]), default="0", show_default=True)
@click.option("--samples-per-span", type=int, default=16, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def loft_command(coordinate_files, spacing, degree, samples_per_span, out_path):
    """Loft coordinate files (each one section, stacked along y) into an OBJ."""
    rings = []
    try:
        for index, filename in enumerate(coordinate_files):
            payload = Path(filename).read_text(encoding="utf-8")
            points = parse_coordinates(payload, plane_axis="y", plane_value=0.0)
            ring = interpolate_closed_section(points, int(degree), samples_per_span)
            ring[:, 1] += index * spacing
            rings.append(ring)
        mesh = loft(rings, cap_ends=True)
    except ValueError as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_FAILED)
    Path(out_path).write_bytes(export_obj(mesh))
    click.echo(
        f"wrote {out_path}: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles"
    )


@main.command()
@click.option("--prompt", "task_prompt", required=True)
@click.option("--budget", type=int, default=3, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write the converged scene mesh as OBJ here.")
@_provider_options
def repair(task_prompt, budget, out_path, **provider_flags):
    """Run the generate-execute-debug loop against the scene interpreter."""
    provider_config = _build_provider_config(**provider_flags)
    try:
        session = repair_loop(task_prompt, provider_for(provider_config), budget)
    except GatewayError as exc:
        click.echo(f"provider error: {exc}", err=True)
        sys.exit(EXIT_PROVIDER)
    for index, attempt in enumerate(session.attempts, start=1):
        status = "ok" if attempt.succeeded else attempt.error
        click.echo(f"attempt {index}: {status}")
    if not session.converged:
        click.echo("repair exhausted its budget", err=True)
        sys.exit(EXIT_FAILED)
    click.echo("converged")
    if out_path:
        Path(out_path).write_bytes(export_obj(scene_to_mesh(session.scene)))
        click.echo(f"wrote {out_path}")


@main.command()
@click.argument("length", type=float)
@click.argument("width", type=float)
@click.argument("wall_height", type=float)
@click.argument("wall_thickness", type=float)
@click.argument("window_width", type=float)
@click.argument("window_height", type=float)
@click.argument("door_width", type=float)
@click.argument("door_height", type=float)
@click.option("--level", type=float, default=0.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.option("--emit-script", is_flag=True, help="Print the scene as DSL text.")
def room(length, width, wall_height, wall_thickness, window_width, window_height,
         door_width, door_height, level, out_path, emit_script):
    """Build a four-wall room with windows, a door, and a flat roof."""
    try:
        scene = build_room(length, width, wall_height, wall_thickness, window_width,
                           window_height, door_width, door_height, level)
    except FitError as exc:
        click.echo(f"FitError: {exc}", err=True)
        sys.exit(EXIT_FAILED)
    click.echo(
        f"room: {len(scene.walls)} walls, {len(scene.windows)} windows, "
        f"{len(scene.doors)} doors, roof area {scene.roof.area:g} m^2"
    )
    if emit_script:
        click.echo(scene_to_script(scene), nl=False)
    if out_path:
        Path(out_path).write_bytes(export_obj(scene_to_mesh(scene)))
        click.echo(f"wrote {out_path}")


@main.command()
@click.option("--bind", default="127.0.0.1:8008", show_default=True,
              help="host:port to serve on.")
@click.option("--allow-origin", default=None,
              help="CORS origin allowed to call the API (the console UI).")
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="Persist transcripts as JSONL under this directory.")
@click.option("--fixture-dir", type=click.Path(file_okay=False), default=None,
              help="Serve recorded fixture bundles as read-only sessions.")
@_provider_options
def serve(bind, allow_origin, data_dir, fixture_dir, **provider_flags):
    """Serve the HTTP API for the browser console."""
    import uvicorn

    provider_config = None
    if provider_flags.get("mock_script") or provider_flags.get("endpoint"):
        provider_config = _build_provider_config(**provider_flags)
    app = create_app(
        default_provider=provider_config,
        data_dir=data_dir,
        allow_origin=allow_origin,
        fixture_dir=fixture_dir,
    )
    host, _, port = bind.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


if __name__ == "__main__":
    main()

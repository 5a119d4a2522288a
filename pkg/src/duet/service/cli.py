"""Command line entry points.

    duet serve  --config server.json [--host H] [--port N]
    duet replay TRACE --fixtures PATH [--fixtures PATH ...] [--report OUT]
    duet validate FILE --schema SCHEMA_ID

Exit codes: 0 success; 2 validation or assertion failure; 3 environment
error (unreadable file, missing fixture, bad config).
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Optional, Tuple

import click

from ..errors import DuetError, MalformedDocument, MissingFixture, UnknownSchema
from ..gateway import load_fixture_files
from ..schema import SCHEMA_IDS, parse_json, validate
from .app import DEFAULT_HOST, DEFAULT_PORT, build_engine, create_app, load_config
from .replay import load_trace, replay

EXIT_OK = 0
EXIT_FAILED = 2
EXIT_ENV = 3


@click.group()
def main() -> None:
    """Goal-to-interface co-generation service."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(path_type=Path),
              help="JSON config with provider/catalog settings.")
@click.option("--host", default=None, help="Bind address (overrides config).")
@click.option("--port", default=None, type=int, help="Bind port (overrides config).")
def serve(config_path: Path, host: Optional[str], port: Optional[int]) -> None:
    """Run the HTTP API."""
    try:
        config = load_config(config_path)
        engine = build_engine(config, base_dir=config_path.parent)
    except (OSError, DuetError) as exc:
        click.echo(f"cannot start: {exc}", err=True)
        sys.exit(EXIT_ENV)
    import uvicorn

    uvicorn.run(create_app(engine),
                host=host or config.get("host", DEFAULT_HOST),
                port=port or config.get("port", DEFAULT_PORT),
                log_level="info")


def _collect_fixture_files(paths: Tuple[Path, ...]) -> list:
    files = []
    for p in paths:
        if p.is_dir():
            files.extend(sorted(p.glob("*.json")))
        else:
            files.append(p)
    return files


@main.command(name="replay")
@click.argument("trace_path", type=click.Path(path_type=Path))
@click.option("--fixtures", "fixture_paths", multiple=True, required=True,
              type=click.Path(path_type=Path), help="Fixture file or directory (repeatable).")
@click.option("--report", "report_path", default=None, type=click.Path(path_type=Path),
              help="Write the full canonical report here.")
def replay_cmd(trace_path: Path, fixture_paths: Tuple[Path, ...],
               report_path: Optional[Path]) -> None:
    """Replay TRACE against scripted fixtures and check its assertions."""
    try:
        trace = load_trace(trace_path)
        provider = load_fixture_files(_collect_fixture_files(fixture_paths))
    except (OSError, MalformedDocument, ValueError) as exc:
        click.echo(f"cannot load: {exc}", err=True)
        sys.exit(EXIT_ENV)

    try:
        report = replay(trace, provider)
    except MissingFixture as exc:
        click.echo(f"missing fixture: {exc}", err=True)
        sys.exit(EXIT_ENV)

    if report_path is not None:
        Path(report_path).write_bytes(report.to_bytes())

    doc = report.doc
    for step in doc["steps"]:
        mark = "ok " if step["ok"] else ("--" if step["detail"] == "skipped" else "FAIL")
        click.echo(f"[{mark:>4}] step {step['index']:>2} {step['kind']:<7} "
                   f"{step['label']}: {step['detail']}")
    click.echo(f"assertions: {doc['assertionsPassed']} passed, {doc['assertionsFailed']} failed")
    click.echo(f"final: stage={doc['finalStage']} task=v{doc['finalTaskVersion']} "
               f"interface=v{doc['finalInterfaceVersion']} hash={doc['finalHash']}")
    sys.exit(EXIT_OK if report.ok else EXIT_FAILED)


@main.command(name="validate")
@click.argument("file_path", type=click.Path(path_type=Path))
@click.option("--schema", "schema_id", required=True,
              help=f"One of: {', '.join(sorted(SCHEMA_IDS))}")
def validate_cmd(file_path: Path, schema_id: str) -> None:
    """Validate FILE against a named document schema."""
    try:
        doc = parse_json(Path(file_path).read_bytes())
    except (OSError, DuetError) as exc:
        click.echo(f"cannot read: {exc}", err=True)
        sys.exit(EXIT_ENV)
    try:
        result = validate(schema_id, doc)
    except UnknownSchema as exc:
        click.echo(f"unknown schema: {exc}", err=True)
        sys.exit(EXIT_ENV)
    if result.ok:
        click.echo(f"{file_path}: valid {schema_id}")
        sys.exit(EXIT_OK)
    for issue in result.issues:
        click.echo(f"{issue}", err=True)
    sys.exit(EXIT_FAILED)


if __name__ == "__main__":
    main()

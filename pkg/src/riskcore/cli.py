"""The ``riskcore`` command line.

Exit codes separate what the method found from whether the tool worked:

    0   the command succeeded (including "already converged")
    1   a domain finding: violated criterion, invalid workspace, wrong
        phase, non-convergence within budget
    2   usage or I/O problems (unknown flags, missing workspace, bad file)

``--format json`` prints exactly one JSON document to stdout so scripts
never have to scrape prose.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import fixtures
from .engine import (
    DEFAULT_MAX_ITERATIONS,
    Engine,
    EngineError,
    StepResult,
    reports_document,
)
from .inference import infer
from .store import (
    StoreError,
    ValidationFailedError,
    Workspace,
    WorkspaceExistsError,
    WorkspaceNotFoundError,
    empty_documents,
    init_workspace,
    validate_documents,
)
EXIT_OK = 0
EXIT_FINDING = 1
EXIT_USAGE = 2


class Context:
    def __init__(self, workspace: Path, output_format: str):
        self.root = workspace
        self.format = output_format

    def workspace(self) -> Workspace:
        return Workspace(self.root)

    def engine(self) -> Engine:
        return Engine(self.workspace())

    def emit(self, doc, text: str) -> None:
        if self.format == "json":
            click.echo(json.dumps(doc, indent=2, sort_keys=True))
        else:
            click.echo(text)

    def finish(self, result: StepResult) -> None:
        lines = [result.summary]
        for step in result.details.get("steps", []):
            lines.append(f"  {step['action']}: {step['summary']}")
        if result.report_path:
            lines.append(f"report: {result.report_path}")
        self.emit(result.to_doc(), "\n".join(lines))
        raise SystemExit(EXIT_OK if result.status in ("ok", "converged") else EXIT_FINDING)


pass_context = click.make_pass_decorator(Context)


@click.group()
@click.option(
    "--workspace",
    "-w",
    envvar="RISKCORE_WORKSPACE",
    default=".",
    type=click.Path(path_type=Path),
    help="Workspace directory (or set RISKCORE_WORKSPACE).",
)
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["text", "json"]),
    default="text",
    help="Output style for results.",
)
@click.pass_context
def main(ctx, workspace: Path, output_format: str):
    """Risk management for automated-driving behavior specifications."""
    ctx.obj = Context(workspace, output_format)


def _domain_error(ctx: Context, message: str) -> None:
    ctx.emit({"status": "error", "summary": message}, f"error: {message}")
    raise SystemExit(EXIT_FINDING)


def _usage_error(ctx: Context, message: str) -> None:
    ctx.emit({"status": "error", "summary": message}, f"error: {message}")
    raise SystemExit(EXIT_USAGE)


@main.command()
@click.option("--example", is_flag=True, help="Seed the worked crossing example.")
@click.option("--force", is_flag=True, help="Re-initialize an existing workspace.")
@pass_context
def init(ctx: Context, example: bool, force: bool):
    """Create a workspace, blank or seeded with the worked example."""
    documents = fixtures.seed_documents() if example else empty_documents()
    try:
        workspace = init_workspace(ctx.root, documents, force=force)
    except WorkspaceExistsError as err:
        _usage_error(ctx, str(err))
    except ValidationFailedError as err:
        _domain_error(ctx, str(err))
    version = workspace.version()
    ctx.emit(
        {"status": "ok", "workspace": str(ctx.root), "workspace_version": version},
        f"initialized workspace at {ctx.root} (version {version})",
    )


@main.command()
@pass_context
def validate(ctx: Context):
    """Check every workspace document against schema and model rules."""
    workspace = _open(ctx)
    report = validate_documents(workspace.documents())
    doc = {"ok": report.ok, "violations": [str(v) for v in report.violations]}
    if report.ok:
        ctx.emit(doc, "workspace is valid")
        return
    text = "\n".join(
        [f"workspace invalid: {len(report.violations)} violation(s)"]
        + [f"  - {v}" for v in report.violations]
    )
    ctx.emit(doc, text)
    raise SystemExit(EXIT_FINDING)


@main.command("infer")
@click.option("--scenario", required=True, help="Scenario id from the catalog.")
@pass_context
def infer_cmd(ctx: Context, scenario: str):
    """Derive the target behavior for one scenario."""
    workspace = _open(ctx)
    try:
        model = workspace.model()
    except StoreError as err:
        _domain_error(ctx, str(err))
    if model.spec is None:
        _domain_error(ctx, "workspace has no behavior specification")
    if scenario not in model.scenarios:
        _domain_error(ctx, f"unknown scenario {scenario!r}")
    state = infer(model.spec, model.scenarios[scenario].asserted_facts)
    actions = sorted(state.actions)
    facts = sorted(state.facts)
    ctx.emit(
        {"scenario": scenario, "actions": actions, "facts": facts},
        f"scenario {scenario}: actions: {', '.join(actions) or '(none)'}",
    )


@main.command()
@pass_context
def analyze(ctx: Context):
    """Identify hazardous events for the current iteration."""
    ctx.finish(_open_engine(ctx).analyze())


@main.command()
@pass_context
def evaluate(ctx: Context):
    """Estimate, ascribe, aggregate, and judge the identified events."""
    ctx.finish(_open_engine(ctx).evaluate())


@main.command()
@click.option(
    "--measure",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="JSON file describing a measure to register before applying.",
)
@pass_context
def treat(ctx: Context, measure: Path | None):
    """Apply pending measures (optionally registering one first)."""
    engine = _open_engine(ctx)
    if measure is not None:
        try:
            doc = json.loads(measure.read_text())
        except (OSError, json.JSONDecodeError) as err:
            _usage_error(ctx, f"cannot read measure file: {err}")
        submitted = engine.submit_measure(doc)
        if submitted.failed:
            ctx.finish(submitted)
    ctx.finish(engine.treat())


@main.command()
@pass_context
def iterate(ctx: Context):
    """One loop step, whatever the phase calls for."""
    ctx.finish(_open_engine(ctx).iterate())


@main.command()
@click.option(
    "--max-iterations",
    type=click.IntRange(min=1),
    default=DEFAULT_MAX_ITERATIONS,
    show_default=True,
    help="Evaluation budget before giving up.",
)
@pass_context
def run(ctx: Context, max_iterations: int):
    """Iterate until convergence, a violation, or the budget."""
    ctx.finish(_open_engine(ctx).run(max_iterations=max_iterations))


@main.command()
@pass_context
def report(ctx: Context):
    """Show the reports, with the requirement coverage table in JSON."""
    workspace = _open(ctx)
    doc = reports_document(workspace)
    if ctx.format == "json":
        ctx.emit(doc, "")
        return
    if not doc["reports"]:
        click.echo("no reports yet; run the analysis first")
        return
    lines = []
    for entry in doc["reports"]:
        report_doc = entry["report"]
        lines.append(f"{entry['path']}: {report_doc['summary']}")
        for verdict in report_doc.get("verdicts", []):
            lines.append(
                f"  {verdict['criterion_id']}/{verdict['severity_class']}: "
                f"{verdict['actual_display']} vs {verdict['tolerable_display']} "
                f"-> {verdict['status']}"
            )
    click.echo("\n".join(lines))


@main.command()
@click.option("--draft", is_flag=True, help="Export before the loop has converged.")
@pass_context
def export(ctx: Context, draft: bool):
    """Print the refined specification with its traceability table."""
    engine = _open_engine(ctx)
    try:
        text, table = engine.export_refined_spec(draft=draft)
    except (EngineError, StoreError) as err:
        _domain_error(ctx, str(err))
    ctx.emit({"spec": text, "traceability": table}, text.rstrip("\n"))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
@click.option(
    "--static",
    "static_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
    help="Directory of dashboard assets to serve at /.",
)
@pass_context
def serve(ctx: Context, host: str, port: int, static_dir: Path | None):
    """Serve the JSON API (and the dashboard, if assets are given)."""
    from .server import make_server

    _open(ctx)  # fail fast on a missing workspace
    server = make_server(ctx.root, host, port, static_dir=static_dir)
    bound_host, bound_port = server.server_address[:2]
    click.echo(f"serving workspace {ctx.root} on http://{bound_host}:{bound_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def _open(ctx: Context) -> Workspace:
    try:
        workspace = ctx.workspace()
        workspace.version()
    except WorkspaceNotFoundError as err:
        _usage_error(ctx, str(err))
    except StoreError as err:
        _usage_error(ctx, str(err))
    return workspace


def _open_engine(ctx: Context) -> Engine:
    return Engine(_open(ctx))


if __name__ == "__main__":
    main()

"""Headless access to the pipeline: check, graph, digest, repair, serve.

Exit codes: 0 clean, 1 the checker found a problem with the spec, 2 usage
error, 3 environment error (launcher or checker archive missing).
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path
from typing import Optional

import click

from . import digest_engine, repair_engine
from .errors import CheckerCrashed, ModelBenchError, RuntimeMissing
from .graph_core import cluster_homogeneous, compact_chains, mark_violations
from .llm_gateway import LlmClient, load_llm_config
from .model import dumps_canonical, graph_to_doc
from .runner import CheckRunner, RunOptions, TlcRunResult
from .source_mapper import index_definitions
from .tlc_parser import graph_to_dot

EXIT_CLEAN = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_ENVIRONMENT = 3


def _spec_options(fn):
    fn = click.option("--spec", "spec_path", required=True,
                      type=click.Path(exists=True, dir_okay=False),
                      help="TLA+ module file.")(fn)
    fn = click.option("--config", "cfg_path", required=True,
                      type=click.Path(exists=True, dir_okay=False),
                      help="Model configuration file.")(fn)
    fn = click.option("--tlc-jar", type=click.Path(), default=None,
                      help="Checker archive (defaults to MW_TLC_JAR).")(fn)
    fn = click.option("--timeout", type=int, default=60, show_default=True,
                      help="Checker deadline in seconds.")(fn)
    fn = click.option("--workers", type=int, default=1, show_default=True)(fn)
    return fn


def _run_pipeline(spec_path: str, cfg_path: str, tlc_jar: Optional[str],
                  timeout: int, workers: int, dump_graph: bool = True) -> TlcRunResult:
    runner = CheckRunner(jar_path=tlc_jar)
    options = RunOptions(timeout_seconds=timeout, worker_count=workers,
                         dump_graph=dump_graph)
    spec_text = Path(spec_path).read_text()
    cfg_text = Path(cfg_path).read_text()
    handle = runner.prepare_workspace(spec_text, cfg_text, options)
    result = runner.run_check(handle, options)
    return result


def _environment_exit(exc: Exception) -> "click.exceptions.Exit":
    click.echo(f"error: {exc}", err=True)
    return SystemExit(EXIT_ENVIRONMENT)


@click.group()
def main():
    """Workbench for TLA+ model checking."""


@main.command()
@_spec_options
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option("--dump-graph", "dump_graph_path", type=click.Path(), default=None,
              help="Copy the dot-format state graph dump to this path.")
def check(spec_path, cfg_path, tlc_jar, timeout, workers, as_json, dump_graph_path):
    """Run the checker once and report the outcome."""
    try:
        result = _run_pipeline(spec_path, cfg_path, tlc_jar, timeout, workers)
    except (RuntimeMissing, CheckerCrashed) as exc:
        raise _environment_exit(exc)
    if dump_graph_path:
        dot_src = result.raw_output_path.parent / "graph.dot"
        if dot_src.exists():
            shutil.copyfile(dot_src, dump_graph_path)
    if as_json:
        click.echo(dumps_canonical(result.to_doc()), nl=False)
    else:
        stats = result.stats
        click.echo(f"states generated: {stats.states_generated}, "
                   f"distinct: {stats.distinct_states}, depth: {stats.depth}")
        if result.error is None:
            click.echo("no errors found")
        else:
            click.echo(f"{result.error.category.value}: "
                       f"{result.error.message.splitlines()[0]}")
            if result.error.trace:
                for state in result.error.trace.states:
                    bindings = ", ".join(f"{k} = {v}"
                                         for k, v in sorted(state.bindings.items()))
                    click.echo(f"  state {state.index} <{state.action_label}>: {bindings}")
    sys.exit(EXIT_CLEAN if result.error is None else EXIT_VIOLATION)


@main.command()
@_spec_options
@click.option("--format", "fmt", type=click.Choice(["json", "dot"]), default="json",
              show_default=True)
@click.option("--compact", is_flag=True, help="Collapse uniform chains (json only).")
@click.option("--clusters", is_flag=True,
              help="Append homogeneous-node clusters (json only).")
def graph(spec_path, cfg_path, tlc_jar, timeout, workers, fmt, compact, clusters):
    """Check the spec and emit its annotated state graph."""
    if fmt == "dot" and (compact or clusters):
        raise click.UsageError("--compact/--clusters need --format json")
    try:
        result = _run_pipeline(spec_path, cfg_path, tlc_jar, timeout, workers)
    except (RuntimeMissing, CheckerCrashed) as exc:
        raise _environment_exit(exc)
    if result.graph is None:
        click.echo("error: run produced no state graph", err=True)
        sys.exit(EXIT_VIOLATION)
    state_graph = result.graph
    if result.error is not None and result.error.trace is not None:
        state_graph = mark_violations(state_graph, result.error)
    if fmt == "dot":
        click.echo(graph_to_dot(state_graph), nl=False)
    else:
        if compact:
            doc = compact_chains(state_graph).to_doc()
        else:
            doc = graph_to_doc(state_graph)
        if clusters:
            doc["clusters"] = [list(c) for c in cluster_homogeneous(state_graph)]
        click.echo(dumps_canonical(doc), nl=False)
    sys.exit(EXIT_CLEAN if result.error is None else EXIT_VIOLATION)


def _parse_selection(select: Optional[str]) -> Optional[tuple[int, int]]:
    if select is None:
        return None
    try:
        start, end = select.split(":", 1)
        return int(start), int(end)
    except ValueError:
        raise click.UsageError("--select expects L1:L2 line numbers")


@main.command()
@_spec_options
@click.option("--select", default=None, help="Focus on spec lines L1:L2.")
@click.option("--json", "as_json", is_flag=True)
def digest(spec_path, cfg_path, tlc_jar, timeout, workers, select, as_json):
    """Check the spec, summarize the graph, and ask the model to explain it."""
    selection = _parse_selection(select)
    try:
        result = _run_pipeline(spec_path, cfg_path, tlc_jar, timeout, workers)
    except (RuntimeMissing, CheckerCrashed) as exc:
        raise _environment_exit(exc)
    request = digest_engine.DigestRequest(
        spec_text=Path(spec_path).read_text(),
        cfg_text=Path(cfg_path).read_text(),
        run_id=result.run_id,
        selection=selection,
    )
    try:
        report = digest_engine.run_digest(request, result.graph,
                                          LlmClient(load_llm_config()))
    except ModelBenchError as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(EXIT_VIOLATION)
    if as_json:
        click.echo(dumps_canonical(report.to_doc()), nl=False)
    else:
        for name in digest_engine.SECTION_NAMES:
            click.echo(f"## {name.capitalize()}")
            click.echo(report.explanation.get(name, ""))
            click.echo()
    sys.exit(EXIT_CLEAN)


@main.command()
@_spec_options
@click.option("--mode", type=click.Choice(["single", "multi"]), default="single",
              show_default=True)
@click.option("--max-passes", type=int, default=repair_engine.DEFAULT_MAX_PASSES,
              show_default=True)
@click.option("--apply", "apply_fix", is_flag=True,
              help="Write the repaired module back to --spec.")
@click.option("--json", "as_json", is_flag=True)
def repair(spec_path, cfg_path, tlc_jar, timeout, workers, mode, max_passes,
           apply_fix, as_json):
    """Ask the model to fix a failing spec, optionally in a bounded loop."""
    spec_text = Path(spec_path).read_text()
    cfg_text = Path(cfg_path).read_text()
    runner = CheckRunner(jar_path=tlc_jar)
    options = RunOptions(timeout_seconds=timeout, worker_count=workers)

    def checker(spec: str, cfg: str) -> TlcRunResult:
        handle = runner.prepare_workspace(spec, cfg, options)
        return runner.run_check(handle, options)

    client = LlmClient(load_llm_config())
    try:
        if mode == "single":
            result = checker(spec_text, cfg_text)
            if result.error is None:
                click.echo("spec already checks clean; nothing to repair")
                sys.exit(EXIT_CLEAN)
            attempt = repair_engine.single_pass(spec_text, cfg_text, result, client)
            fixed = attempt.patched_spec if attempt.patch_status == "applied" else None
            doc = {"mode": "single_pass",
                   "final_status": "proposal" if fixed else "patch_failed",
                   "attempts": [attempt.to_doc()]}
            success = fixed is not None
        else:
            session = repair_engine.multi_pass(
                spec_text, cfg_text, checker, client, limit=max_passes)
            doc = session.to_doc()
            doc["attempts"] = [a.to_doc() for a in session.attempts]
            applied = [a.patched_spec for a in session.attempts
                       if a.patched_spec is not None]
            fixed = applied[-1] if (session.final_status == "success" and applied) else None
            success = session.final_status == "success"
    except (RuntimeMissing, CheckerCrashed) as exc:
        raise _environment_exit(exc)
    except ModelBenchError as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(EXIT_VIOLATION)

    if as_json:
        click.echo(dumps_canonical(doc), nl=False)
    else:
        click.echo(f"final status: {doc['final_status']} "
                   f"after {len(doc['attempts'])} attempt(s)")
    if apply_fix and fixed is not None:
        Path(spec_path).write_text(fixed)
        click.echo(f"wrote repaired module to {spec_path}", err=True)
    sys.exit(EXIT_CLEAN if success else EXIT_VIOLATION)


@main.command()
@click.option("--port", type=int, default=8600, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data", "data_dir", type=click.Path(), default="./modelbench-data",
              show_default=True, help="Session storage directory.")
def serve(port, host, data_dir):
    """Start the HTTP service that the web workbench talks to."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port)


if __name__ == "__main__":
    main()

"""Input-tree commands: build, distance check and canonical sequence."""

from pathlib import Path

import click

from ...error_handler import handle_errors
from ...ftransform import f_implicit
from ...formatters import format_json
from ...marked import (
    build_input_tree,
    canonical_sequence,
    check_distance_correct,
    default_order,
    final_graph_report,
    preorder,
    presentation_order,
)
from ...serialization import marked_to_dict, marked_to_dot, trace_records, write_jsonl
from ..options import emit, load_tree_source, note, run_settings, tree_argument


@click.command("build-input")
@tree_argument
@click.option("--order", type=click.Choice(["bfs", "preorder"]), default="bfs", help="Topological order of T")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False, path_type=Path), help="Write build steps as JSONL")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Write G_T as JSON")
@click.pass_context
@handle_errors
def build_input(ctx, tree, delta, order, trace_path, out):
    """Build the input tree G_T by running TREE's reflect/split program."""
    settings = run_settings(ctx)
    T = load_tree_source(ctx, tree, delta)
    sequence = default_order(T) if order == "bfs" else preorder(T)
    trace = build_input_tree(T, sequence, node_budget=settings.node_budget, deadline=settings.deadline)

    if trace_path:
        write_jsonl(trace_path, trace_records(trace))
    if out:
        out.write_text(format_json(marked_to_dict(trace.final)) + "\n")

    if ctx.obj["output"] == "dot":
        click.echo(marked_to_dot(trace.final))
    elif ctx.obj["output"] == "json":
        emit(ctx, {"graph": marked_to_dict(trace.final), "steps": trace_records(trace)})
    else:
        summary = final_graph_report(trace)
        summary["mirrors"] = len(trace.mirrors)
        summary["minimum_distance"] = trace.minimum_distance
        emit(ctx, summary)
    note(ctx, f"G_T has {len(trace.final)} nodes after {len(trace.steps)} steps")


@click.command("check-distance")
@tree_argument
@click.option("--mode", type=click.Choice(["full", "path"]), default="full", help="Whole build or first-child path only")
@click.option("-D", "D", type=int, default=None, help="Required distance")
@click.option("--of-f", is_flag=True, help="Check F(TREE) instead of TREE")
@click.option("--no-validate", is_flag=True, help="Skip validation and invariant checks")
@click.pass_context
@handle_errors
def check_distance(ctx, tree, delta, mode, D, of_f, no_validate):
    """Smallest split-target distance to a 2-leaf over the build of TREE."""
    settings = run_settings(ctx)
    T = load_tree_source(ctx, tree, delta)
    source = f_implicit(T) if of_f else T
    report = check_distance_correct(
        source,
        D=D,
        mode=mode,
        require_valid=not no_validate,
        node_budget=settings.node_budget,
        deadline=settings.deadline,
    )
    emit(ctx, report.to_dict())
    if report.correct is False:
        note(ctx, f"not distance-{D}-correct: minimum {report.minimum}", "red")
        raise SystemExit(1)


@click.command("canonical-seq")
@tree_argument
@click.option("--presentation", is_flag=True, help="Show the reversed order used for queries")
@click.pass_context
@handle_errors
def canonical_seq(ctx, tree, delta, presentation):
    """The mirror nodes of G_T in canonical (or presentation) order."""
    settings = run_settings(ctx)
    T = load_tree_source(ctx, tree, delta)
    trace = build_input_tree(T, node_budget=settings.node_budget, deadline=settings.deadline)
    nodes = presentation_order(trace) if presentation else canonical_sequence(trace)
    reflect_of = {g: u for u, g in trace.mirrors.items()}
    rows = [
        {
            "position": i,
            "node": g,
            "label": trace.final.labels[g],
            "reflect": T.labels[reflect_of[g]],
        }
        for i, g in enumerate(nodes, start=1)
    ]
    emit(ctx, rows, headers=["position", "node", "label", "reflect"])

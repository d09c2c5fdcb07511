"""Validation command."""

import click

from ...ctree import validate as validate_tree
from ...error_handler import handle_errors
from ..options import emit, load_tree_source, note, run_settings, tree_argument


@click.command("validate")
@tree_argument
@click.option("--exhaustive-clearing", is_flag=True, help="Enumerate every string instead of the pruned descent")
@click.pass_context
@handle_errors
def validate(ctx, tree, delta, exhaustive_clearing):
    """Check that TREE is a well-nested, balanced tree with a solid labeling."""
    run_settings(ctx)
    T = load_tree_source(ctx, tree, delta)
    report = validate_tree(T, exhaustive_clearing=exhaustive_clearing)

    if ctx.obj["output"] == "json":
        emit(ctx, report.to_dict())
    else:
        rows = report.to_dict()["checks"]
        emit(ctx, rows, headers=["name", "status", "witness", "message"])

    if report.ok:
        note(ctx, f"{T!r} is valid")
        return
    failed = ", ".join(c.name for c in report.failed())
    note(ctx, f"validation failed: {failed}", "red")
    raise SystemExit(1)

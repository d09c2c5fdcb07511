"""The F transformation command."""

from pathlib import Path

import click

from ...error_handler import handle_errors
from ...formatters import format_json
from ...ftransform import f_implicit, f_materialize
from ...serialization import implicit_to_dict, save_tree, tree_to_dict, tree_to_dot
from ..options import emit, load_tree_source, note, run_settings, tree_argument


@click.command("transform")
@tree_argument
@click.option("--implicit/--explicit", default=True, help="Layer patterns only, or the materialized tree")
@click.option("--layer-limit", type=int, default=None, help="Materialize only the first layers")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Write the result as JSON")
@click.pass_context
@handle_errors
def transform(ctx, tree, delta, implicit, layer_limit, out):
    """Compute F(TREE)."""
    settings = run_settings(ctx)
    T = load_tree_source(ctx, tree, delta)
    I = f_implicit(T)

    if implicit:
        data = implicit_to_dict(I)
        if out:
            out.write_text(format_json(data) + "\n")
        if ctx.obj["output"] == "json":
            emit(ctx, data)
        else:
            emit(ctx, data["layers"], headers=["index", "flag", "kind", "pattern", "size", "offset"])
            note(ctx, f"F(T) has {len(I.layers)} layers and {I.total} nodes")
        return

    F = f_materialize(I, layer_limit=layer_limit, node_budget=settings.node_budget)
    if out:
        save_tree(F, out)
    if ctx.obj["output"] == "dot":
        click.echo(tree_to_dot(F))
    elif ctx.obj["output"] == "json":
        emit(ctx, tree_to_dict(F))
    else:
        emit(ctx, {"nodes": len(F), "layers": len(F.layer_members), "b": F.b})

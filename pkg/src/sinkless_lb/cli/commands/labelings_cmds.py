"""Edge labeling command."""

import click

from ...error_handler import handle_errors
from ...labelings import compute_labelings, labelings_report
from ..options import emit, load_tree_source, note, run_settings, tree_argument


@click.command("labelings")
@tree_argument
@click.option("--edges", "show_edges", is_flag=True, help="List psi and pi of every edge")
@click.pass_context
@handle_errors
def labelings(ctx, tree, delta, show_edges):
    """Compute psi/pi on TREE's edges and check the labeling lemmas."""
    run_settings(ctx)
    T = load_tree_source(ctx, tree, delta)
    lab = compute_labelings(T)
    report = labelings_report(T, lab)

    if show_edges:
        rows = [
            {
                "edge": f"{T.labels[T.parent[c]]} -> {T.labels[c]}",
                "psi": sorted(lab.psi[c]),
                "pi": sorted(lab.pi[c]),
            }
            for c in sorted(lab.psi)
        ]
        emit(ctx, rows, headers=["edge", "psi", "pi"])
    elif ctx.obj["output"] == "json":
        emit(ctx, {name: [m._asdict() for m in found] for name, found in report.items()})
    else:
        rows = [
            {"check": name, "mismatches": len(found), "first": found[0].message if found else ""}
            for name, found in report.items()
        ]
        emit(ctx, rows, headers=["check", "mismatches", "first"])

    if any(report.values()):
        note(ctx, "labeling lemmas fail", "red")
        raise SystemExit(1)
    note(ctx, f"all labeling lemmas hold on {len(lab.psi)} edges")

"""Adversary commands: attack and bound."""

from pathlib import Path

import click

from ...adversary import MODES, attack as run_attack, bound_report
from ...algorithms import load_algorithm
from ...error_handler import handle_errors
from ...serialization import instance_to_dot, save_instance, transcript_records, write_jsonl
from ...validators import parse_n, validate_delta, validate_non_negative_int, validate_positive_int
from ..options import emit, load_tree_source, note, run_settings, tree_argument


@click.command("attack")
@tree_argument
@click.option("--alg", "alg_spec", required=True, help="Algorithm name, prefer:<ports> or module:attr")
@click.option("--locality", "-L", type=int, default=None, help="Algorithm locality (default D-1)")
@click.option("--n", "n", type=int, default=None, help="Instance size (default delta * |G_T|)")
@click.option("--mode", type=click.Choice(MODES), default="single", help="Realized run, exact oracle or sampler")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Write the transcript as JSONL")
@click.option("--instance-out", type=click.Path(dir_okay=False, path_type=Path), help="Write the final instance as JSON")
@click.pass_context
@handle_errors
def attack(ctx, tree, delta, alg_spec, locality, n, mode, out, instance_out):
    """
    Present the mirror nodes of G_T to an algorithm, rewiring as it goes.

    Exits 0 when the algorithm fails or no failure is claimed, 1 when it
    survives a run in which failure was certain.
    """
    settings = run_settings(ctx)
    T = load_tree_source(ctx, tree, delta)
    if locality is not None:
        validate_non_negative_int(locality, "locality")
    if n is not None:
        validate_positive_int(n, "n")
    algorithm = load_algorithm(alg_spec)

    result = run_attack(
        T,
        algorithm,
        n=n,
        seed=settings.seed,
        mode=mode,
        locality=locality,
        samples=settings.samples,
        slack=settings.slack,
        max_branches=settings.max_branches,
        deadline=settings.deadline,
    )

    if out and result.transcript is not None:
        write_jsonl(out, transcript_records(result.transcript))
    if instance_out:
        save_instance(result.instance, instance_out)

    if ctx.obj["output"] == "dot":
        click.echo(instance_to_dot(result.instance, highlight=result.presentation))
    elif ctx.obj["output"] == "json":
        emit(ctx, result.to_dict())
    else:
        summary = {
            "algorithm": result.algorithm,
            "mode": result.mode,
            "delta": result.delta,
            "D": result.D,
            "locality": result.locality,
            "n": result.n,
            "claim": result.claim,
            "presentation": result.presentation,
            "q_sequence": result.q_sequence,
        }
        if result.mode == "oracle":
            summary["failure_probability"] = str(result.failure_probability)
            summary["bound"] = str(result.bound)
        if result.verdict is not None:
            summary["verdict"] = "ok" if result.verdict.ok else ", ".join(sorted(result.verdict.kinds()))
        emit(ctx, summary)

    if result.unexpected_survival:
        note(ctx, "algorithm survived a run where failure was certain", "red")
        raise SystemExit(1)
    if result.violated:
        kinds = "/".join(sorted(result.verdict.kinds()))
        note(ctx, f"{kinds} at step {len(result.presentation)}")


@click.command("bound")
@click.option("--n", "n_text", required=True, help="Instance size: 1000000, 1e6 or a tower like 3^3^4+1")
@click.option("--delta", "-d", type=int, default=None, help="Maximum degree")
@click.pass_context
@handle_errors
def bound(ctx, n_text, delta):
    """Radius lower bound 2^(i-1) for n-node trees of maximum degree delta."""
    run_settings(ctx)
    if delta is None:
        delta = ctx.obj["config"].get_int("delta", ctx.obj["profile"])
    report = bound_report(parse_n(n_text), validate_delta(delta))
    if ctx.obj["output"] == "json":
        emit(ctx, report.to_dict())
    else:
        data = report.to_dict()
        data["chain"] = ", ".join(f"i={c['i']}:{'>' if c['exceeded'] else '<='}" for c in data["chain"])
        emit(ctx, data)

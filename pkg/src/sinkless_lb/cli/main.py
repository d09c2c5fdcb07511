"""CLI entry point for sinkless-lb."""

import logging
from pathlib import Path

import click

from ..logging_setup import setup_logger
from .commands import attack_cmds, build_cmds, config_cmds, labelings_cmds, transform_cmds, validate_cmds


@click.group()
@click.version_option(package_name="sinkless-lb")
@click.option("--profile", "-p", default="default", help="Configuration profile")
@click.option(
    "--format", "-o", "output",
    type=click.Choice(["table", "json", "text", "dot"]),
    default="table",
    help="Output format",
)
@click.option("--verbose", "-v", is_flag=True, help="Log every step")
@click.option("--quiet", "-q", is_flag=True, help="Only log errors")
@click.option("--log-file", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Also log to this file")
@click.option("--seed", type=int, default=None, help="Random seed (default from config)")
@click.option("--node-budget", type=int, default=None, help="Largest tree or graph to build")
@click.option("--time-budget", type=float, default=None, help="Seconds before long runs give up")
@click.pass_context
def cli(ctx, profile, output, verbose, quiet, log_file, seed, node_budget, time_budget):
    """
    sinkless-lb - construction trees, input trees and the online-LOCAL adversary.

    Use --profile to switch between configurations.
    Use --format to change output format (table, json, text, dot).
    """
    ctx.ensure_object(dict)
    ctx.obj["profile"] = profile
    ctx.obj["output"] = output
    ctx.obj["verbose"] = verbose
    ctx.obj["quiet"] = quiet
    ctx.obj["log_file"] = log_file
    ctx.obj["overrides"] = {"seed": seed, "node_budget": node_budget, "time_budget": time_budget}

    if verbose:
        setup_logger(logging.DEBUG, log_file)
    elif quiet:
        setup_logger(logging.ERROR, log_file)
    else:
        setup_logger(logging.WARNING, log_file)


# Register commands
cli.add_command(validate_cmds.validate)
cli.add_command(transform_cmds.transform)
cli.add_command(labelings_cmds.labelings)
cli.add_command(build_cmds.build_input)
cli.add_command(build_cmds.check_distance)
cli.add_command(build_cmds.canonical_seq)
cli.add_command(attack_cmds.attack)
cli.add_command(attack_cmds.bound)
cli.add_command(config_cmds.config)


if __name__ == "__main__":
    cli()

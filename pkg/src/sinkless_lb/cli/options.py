"""Options and helpers shared by the command modules."""

import logging
from pathlib import Path
from typing import Any, Optional

import click

from ..config_manager import ConfigManager, RunSettings
from ..ctree import ConstructionTree, build_t2, build_t2_literal
from ..formatters import OutputFormatter
from ..logging_setup import setup_logger
from ..serialization import load_tree
from ..validators import validate_delta

TREE_HELP = "t2, t2-literal, or a path to a tree JSON file"


def tree_argument(f):
    """TREE argument plus --delta for the generated trees."""
    f = click.option("--delta", "-d", type=int, default=None, help="Maximum degree for t2 / t2-literal")(f)
    return click.argument("tree", metavar="TREE")(f)


def run_settings(ctx: click.Context) -> RunSettings:
    """Resolve settings once per invocation; config errors surface inside handle_errors."""
    if "settings" not in ctx.obj:
        config = ConfigManager()
        profile = ctx.obj["profile"]
        ctx.obj["config"] = config
        if not ctx.obj["verbose"] and not ctx.obj["quiet"]:
            level = str(config.get("log_level", profile)).upper()
            setup_logger(getattr(logging, level, logging.WARNING), ctx.obj.get("log_file"))
        ctx.obj["settings"] = RunSettings.resolve(config, profile, **ctx.obj["overrides"])
    return ctx.obj["settings"]


def resolve_delta(ctx: click.Context, delta: Optional[int]) -> int:
    if delta is None:
        run_settings(ctx)
        delta = ctx.obj["config"].get_int("delta", ctx.obj["profile"])
    return validate_delta(delta)


def load_tree_source(ctx: click.Context, source: str, delta: Optional[int]) -> ConstructionTree:
    """
    Raises:
        ParseError: If a file source is missing or malformed
    """
    if source == "t2":
        return build_t2(resolve_delta(ctx, delta))
    if source == "t2-literal":
        return build_t2_literal(resolve_delta(ctx, delta))
    return load_tree(Path(source))


def formatter(ctx: click.Context) -> OutputFormatter:
    return OutputFormatter(ctx.obj["output"])


def emit(ctx: click.Context, data: Any, headers=None) -> None:
    click.echo(formatter(ctx).format(data, headers=headers))


def note(ctx: click.Context, message: str, color: str = "green") -> None:
    """A styled status line, suppressed by --quiet and in JSON output."""
    if not ctx.obj["quiet"] and ctx.obj["output"] != "json":
        click.echo(click.style(message, fg=color), err=True)

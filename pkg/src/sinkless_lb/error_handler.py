"""Exception hierarchy for sinkless-lb."""

from functools import wraps
from typing import Optional

import click


class SinklessLbError(Exception):
    """Base exception for all sinkless-lb errors."""

    exit_code = 1


class UsageError(SinklessLbError):
    """Invalid arguments or mismatched inputs."""

    exit_code = 2


class ParseError(SinklessLbError):
    """Unreadable or malformed input file."""

    exit_code = 2


class ConfigError(SinklessLbError):
    """Invalid configuration value."""

    exit_code = 2


class DomainError(SinklessLbError):
    """A value would leave the label alphabet."""
    pass


class PreconditionError(SinklessLbError):
    """An operation was applied to a node that does not qualify."""
    pass


class WellNestedError(SinklessLbError):
    """A layer skeleton is not well-nested."""

    def __init__(self, clause: str, message: str):
        super().__init__(f"[{clause}] {message}")
        self.clause = clause


class InvariantViolation(SinklessLbError):
    """An inductive invariant of a build or attack failed."""

    def __init__(self, step: int, clause: str, message: str):
        super().__init__(f"step {step}, {clause}: {message}")
        self.step = step
        self.clause = clause


class ProtocolError(SinklessLbError):
    """An online algorithm produced a malformed decision."""

    def __init__(self, algorithm: str, message: str):
        super().__init__(f"algorithm '{algorithm}': {message}")
        self.algorithm = algorithm


class CapacityError(SinklessLbError):
    """A node budget would be exceeded."""

    exit_code = 3

    def __init__(self, demanded: int, budget: int, what: str = "nodes"):
        super().__init__(f"{what} demanded {demanded} exceeds budget {budget}")
        self.demanded = demanded
        self.budget = budget


class TimeBudgetExceeded(CapacityError):
    """The configured time budget ran out."""

    def __init__(self, elapsed: float, budget: float):
        SinklessLbError.__init__(self, f"time budget of {budget:.1f}s exhausted after {elapsed:.1f}s")
        self.demanded = elapsed
        self.budget = budget


def require_budget(demanded: int, budget: Optional[int], what: str = "nodes") -> None:
    """
    Raise CapacityError when demanded exceeds a configured budget.

    Args:
        demanded: Exact amount requested
        budget: Allowed amount, None for unlimited
        what: Unit shown in the error message
    """
    if budget is not None and demanded > budget:
        raise CapacityError(demanded, budget, what)


def handle_errors(f):
    """
    Decorator for CLI commands to handle exceptions gracefully.

    Catches sinkless-lb exceptions, prints a styled message and exits with
    the code attached to the exception class.
    """
    @wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except CapacityError as e:
            click.echo(click.style(f"Over budget: {e}", fg="yellow"), err=True)
            raise SystemExit(e.exit_code)
        except (UsageError, ConfigError) as e:
            click.echo(click.style(f"Invalid input: {e}", fg="red"), err=True)
            raise SystemExit(e.exit_code)
        except ParseError as e:
            click.echo(click.style(f"Parse error: {e}", fg="red"), err=True)
            raise SystemExit(e.exit_code)
        except InvariantViolation as e:
            click.echo(click.style(f"Invariant violated: {e}", fg="red"), err=True)
            raise SystemExit(e.exit_code)
        except SinklessLbError as e:
            click.echo(click.style(f"Error: {e}", fg="red"), err=True)
            raise SystemExit(e.exit_code)
    return wrapper

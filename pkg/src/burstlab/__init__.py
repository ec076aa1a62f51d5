"""burstlab package."""

from .options import RunConfig, parse_cli_args  # noqa: F401

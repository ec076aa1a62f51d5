"""Command-line option parsing and TOML run configuration for burstlab."""

from __future__ import annotations

import argparse
import shlex
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .builder import GridSpec
from .checks import unknown_checks
from .harness import HarnessSettings
from .solver import STEPPERS, SolverConfig

COMMANDS = ("build", "flow", "csf", "verify", "sweep", "report")
ORACLES = ("cigar", "sphere")

# TOML table -> RunConfig field names it may set
CONFIG_TABLES: dict[str, tuple[str, ...]] = {
    "cb": ("r_c", "l_c"),
    "grid": ("h", "left_margin", "right_depth", "ratio"),
    "solver": ("dt_init", "dt_max", "cadence", "max_du", "stepper"),
    "checks": ("checks", "u_tolerance", "seed"),
    "run": ("scenario", "t_end", "oracle", "refine", "rho0", "rc_list", "jobs", "out", "stride"),
}


class ConfigError(ValueError):
    """Raised for unreadable config files, unknown keys and invalid values."""


@dataclass(slots=True)
class RunConfig:
    """Structured representation of CLI arguments merged over a config file."""

    command: str | None
    scenario: str | None = None
    r_c: float = 0.05
    l_c: float | None = None
    h: float = 0.05
    left_margin: float = 10.0
    right_depth: float = 8.0
    ratio: float = 1.1
    dt_init: float | None = None
    dt_max: float | None = None
    cadence: float | None = None
    max_du: float | None = None
    stepper: str | None = None
    t_end: float | None = None
    oracle: str | None = None
    refine: int = 0
    rho0: float = 0.0
    series: str | None = None
    profile_path: str | None = None
    checks: list[str] | None = None
    u_tolerance: float | None = None
    rc_list: list[float] = field(default_factory=list)
    seed: int = 0
    jobs: int = 1
    stride: int = 1
    out: str | None = None
    root: str = "runs"
    verbose: bool = False
    quiet: bool = False
    list_checks_format: str | None = None
    config_file: str | None = None
    invocation_command: str | None = None

    def effective_l_c(self) -> float:
        """l_c as given, else the smallest admissible 1/(8 r_c)."""

        return self.l_c if self.l_c is not None else 0.125 / self.r_c

    def effective_scenario(self) -> str:
        if self.scenario:
            return self.scenario
        if self.command == "flow" and self.oracle:
            return f"flow-{self.oracle}"
        return f"{self.command or 'run'}-rc{self.r_c:g}"

    def effective_t_end(self) -> float:
        if self.t_end is not None:
            return self.t_end
        if self.command == "flow" and self.oracle:
            return 1.0
        return 4.5

    def effective_grid(self) -> GridSpec:
        return GridSpec(
            h=self.h, left_margin=self.left_margin, right_depth=self.right_depth, ratio=self.ratio
        )

    @property
    def solver_overridden(self) -> bool:
        return any(
            getattr(self, name) is not None
            for name in ("dt_init", "dt_max", "cadence", "max_du", "stepper")
        )

    def effective_solver(self) -> SolverConfig:
        overrides: dict[str, Any] = {}
        for name in ("dt_init", "dt_max", "cadence", "max_du"):
            value = getattr(self, name)
            if value is not None:
                overrides[name] = value
        if self.stepper is not None:
            overrides["time_stepper"] = self.stepper
        return SolverConfig(**overrides)

    def effective_settings(self) -> HarnessSettings:
        if self.u_tolerance is None:
            return HarnessSettings(seed=self.seed, jobs=self.jobs)
        return HarnessSettings(u_tolerance=self.u_tolerance, seed=self.seed, jobs=self.jobs)


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from exc


def _name_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def load_config_file(path: Path) -> dict[str, Any]:
    """Flatten the [cb], [grid], [solver], [checks] and [run] tables into RunConfig keys."""

    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc

    values: dict[str, Any] = {}
    for table, content in data.items():
        allowed = CONFIG_TABLES.get(table)
        if allowed is None:
            raise ConfigError(f"{path}: unknown table [{table}]")
        if not isinstance(content, Mapping):
            raise ConfigError(f"{path}: [{table}] must be a table")
        for key, value in content.items():
            if key not in allowed:
                raise ConfigError(f"{path}: unknown key '{key}' in [{table}]")
            values[key] = value
    return values


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="TOML run configuration; flags override it.")
    common.add_argument("--scenario", help="Label for the run directory.")
    common.add_argument("--rc", dest="r_c", type=float, help="Cylinder radius r_c in (0, 1).")
    common.add_argument("--lc", dest="l_c", type=float, help="Cylinder length parameter l_c.")
    common.add_argument("--h", type=float, help="Uniform grid spacing (default 0.05).")
    common.add_argument("--left-margin", type=float, help="Plane region kept left of s_e.")
    common.add_argument("--right-depth", type=float, help="Grid depth past the sphere centre.")
    common.add_argument("--dt-init", type=float, help="Initial time step.")
    common.add_argument("--dt-max", type=float, help="Largest time step.")
    common.add_argument("--cadence", type=float, help="Recording interval in t.")
    common.add_argument("--max-du", type=float, help="Largest accepted change of u per step.")
    common.add_argument("--stepper", choices=STEPPERS, help="Time stepper.")
    common.add_argument("--t-end", type=float, help="Final time (flow horizon).")
    common.add_argument("--seed", type=int, help="Seed for sampled checks (default 0).")
    common.add_argument("--jobs", "-j", type=int, help="Parallel workers (default 1).")
    common.add_argument("--out", "-o", help="Write into this directory instead of a fresh one.")
    common.add_argument("--root", default="runs", help="Parent of fresh run directories.")
    common.add_argument("--stride", type=int, help="Keep every n-th frame in the checkpoint.")
    common.add_argument("--quiet", "-q", action="store_true", help="Suppress progress output.")
    common.add_argument("--verbose", "-v", action="store_true", help="Report every solver step.")

    parser = argparse.ArgumentParser(
        prog="burstlab",
        description="Ricci flow of cylinder-with-bulb surfaces and their curvature bursts.",
    )
    parser.add_argument(
        "--list-checks",
        "-l",
        nargs="?",
        const="json",
        choices=("json", "csv", "text"),
        help="Print the check registry (json/csv/text) and exit; defaults to json.",
    )
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("build", parents=[common], help="Build a CB profile and its property report.")
    flow = sub.add_parser("flow", parents=[common], help="Flow a CB profile or an oracle.")
    flow.add_argument("--oracle", choices=ORACLES, help="Evolve a closed-form solution instead.")
    flow.add_argument("--refine", type=int, help="Refinements for the convergence table.")
    flow.add_argument("--profile", dest="profile", help="Two-column profile to flow.")
    csf = sub.add_parser("csf", parents=[common], help="Flow with the coupled loop.")
    csf.add_argument("--rho", dest="rho0", type=float, help="Initial loop position (default 0).")
    verify = sub.add_parser("verify", parents=[common], help="Run checks on a stored series.")
    verify.add_argument("--series", required=True, help="Checkpoint file written by flow/csf.")
    verify.add_argument("--checks", type=_name_list, help="Comma-separated check names.")
    verify.add_argument("--u-tol", dest="u_tolerance", type=float, help="Base tolerance in u.")
    sweep = sub.add_parser("sweep", parents=[common], help="Burst scenario for several r_c.")
    sweep.add_argument("--rc-list", "--rcs", dest="rc_list", type=_float_list, help="r_c values.")
    sweep.add_argument("--j", dest="j_list", type=_float_list, help="j values mapped to r_c.")
    report = sub.add_parser("report", parents=[common], help="Full scenario with phase report.")
    report.add_argument("--checks", type=_name_list, help="Comma-separated check names.")
    report.add_argument("--u-tol", dest="u_tolerance", type=float, help="Base tolerance in u.")
    return parser


_FLAG_FIELDS = (
    "scenario", "r_c", "l_c", "h", "left_margin", "right_depth", "dt_init", "dt_max",
    "cadence", "max_du", "stepper", "t_end", "seed", "jobs", "out", "stride", "oracle",
    "refine", "rho0", "checks", "u_tolerance", "rc_list",
)


def parse_cli_args(argv: Sequence[str] | None = None) -> RunConfig:
    """Parse CLI arguments, merge them over the config file and validate."""

    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.list_checks:
        return RunConfig(command=args.command, list_checks_format=args.list_checks)
    if not args.command:
        parser.error("a subcommand is required unless --list-checks is given.")
    if args.quiet and args.verbose:
        parser.error("--quiet and --verbose cannot be combined.")

    values: dict[str, Any] = {}
    if args.config:
        try:
            values.update(load_config_file(Path(args.config).expanduser()))
        except ConfigError as exc:
            parser.error(str(exc))
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    j_list = getattr(args, "j_list", None)
    if j_list:
        from .experiment import rc_from_j

        values["rc_list"] = [rc_from_j(int(j)) for j in j_list]

    argv_source = list(argv) if argv is not None else sys.argv[1:]
    program = sys.argv[0] if sys.argv else "burstlab"
    known = {f.name for f in fields(RunConfig)}
    try:
        config = RunConfig(
            command=args.command,
            series=getattr(args, "series", None),
            profile_path=getattr(args, "profile", None),
            root=args.root,
            verbose=args.verbose,
            quiet=args.quiet,
            config_file=args.config,
            invocation_command=shlex.join([program, *argv_source]),
            **{k: v for k, v in values.items() if k in known},
        )
        _validate(config)
    except (ConfigError, TypeError, ValueError) as exc:
        parser.error(str(exc))
    return config


def _validate(config: RunConfig) -> None:
    if not 0.0 < config.r_c < 1.0:
        raise ConfigError(f"r_c must lie in (0, 1), got {config.r_c}")
    if config.l_c is not None and not config.l_c > 0.0:
        raise ConfigError(f"l_c must be positive, got {config.l_c}")
    if not config.h > 0.0:
        raise ConfigError(f"h must be positive, got {config.h}")
    if config.t_end is not None and not config.t_end > 0.0:
        raise ConfigError(f"t_end must be positive, got {config.t_end}")
    if config.jobs < 1 or config.stride < 1 or config.refine < 0:
        raise ConfigError("jobs and stride must be positive, refine non-negative")
    if config.oracle is not None and config.oracle not in ORACLES:
        raise ConfigError(f"unknown oracle '{config.oracle}'")
    if config.stepper is not None and config.stepper not in STEPPERS:
        raise ConfigError(f"unknown stepper '{config.stepper}'")
    if config.checks:
        missing = unknown_checks(config.checks)
        if missing:
            raise ConfigError(f"unknown check(s): {', '.join(missing)}")
    if config.command == "sweep" and not config.rc_list:
        raise ConfigError("sweep needs --rc-list or --j")
    config.effective_solver()

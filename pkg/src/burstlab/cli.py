"""Command-line interface for burstlab."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import replace
from io import StringIO
from pathlib import Path
from typing import Callable

from . import formats
from .builder import CBParams, JunctionSolveError, build_cb_profile, cb_property_report, solve_junctions
from .checks import list_checks
from .experiment import ChecksFailedError, ScenarioError, run_cb_scenario, sweep_rc
from .harness import HarnessReport, run_checks
from .noose import NooseError, NooseSummary, run_coupled, summary_from_series
from .options import RunConfig, parse_cli_args
from .profile import RadialProfile
from .solver import (
    CoverageError,
    DiagnosticRegions,
    FlowSeries,
    ProgressCallback,
    convergence_study,
    oracle_run,
    run,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

Logger = Callable[[str], None]


def main(argv: list[str] | None = None) -> int:
    """Entry-point invoked by the `burstlab` console script."""

    options = parse_cli_args(argv)
    if options.list_checks_format:
        print(_render_checks(options.list_checks_format))
        return EXIT_OK
    logger = _build_logger(options.quiet)
    commands = {
        "build": _cmd_build,
        "flow": _cmd_flow,
        "csf": _cmd_csf,
        "verify": _cmd_verify,
        "sweep": _cmd_sweep,
        "report": _cmd_report,
    }
    return commands[options.command or "build"](options, logger)


def _render_checks(fmt: str) -> str:
    payload = [
        {
            "name": rule.name,
            "full_name": rule.full_name,
            "needs": rule.needs,
            "required": rule.required,
            "documentation": rule.documentation,
        }
        for rule in list_checks()
    ]

    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True)

    if fmt == "csv":
        output = StringIO()
        writer = csv.DictWriter(
            output, fieldnames=["name", "full_name", "needs", "required", "documentation"]
        )
        writer.writeheader()
        writer.writerows(payload)
        return output.getvalue().rstrip()

    lines = []
    for entry in payload:
        lines.append(
            " | ".join(
                [
                    str(entry["name"]),
                    str(entry["full_name"]),
                    str(entry["needs"]),
                    "required" if entry["required"] else "optional",
                    str(entry["documentation"] or ""),
                ]
            )
        )
    return "\n".join(lines)


def _prepare_run(options: RunConfig, log: Logger) -> Path:
    forced = Path(options.out).expanduser() if options.out else None
    run_dir = formats.run_directory(
        Path(options.root).expanduser(), options.effective_scenario(), forced=forced
    )
    formats.write_doit_file(run_dir, options.invocation_command)
    log(f"Run directory: {run_dir}")
    return run_dir


def _fail(run_dir: Path, phase: str, message: str, log: Logger, code: int) -> int:
    formats.append_failure(run_dir, phase, message)
    log(f"Error: {phase}: {message}")
    return code


def _report_checks(harness: HarnessReport, log: Logger) -> None:
    for report in harness.checks:
        if report.skipped and not report.required:
            log(f"Check {report.witness()}")
    for report in harness.failures:
        log(f"Check {report.witness()}")
    passed = sum(1 for r in harness.checks if r.passed and not r.skipped)
    log(f"Checks: {passed}/{len(harness.checks)} passed, {len(harness.failures)} failed")


def _write_series(run_dir: Path, series: FlowSeries, options: RunConfig, log: Logger) -> None:
    formats.write_checkpoint(run_dir / "series.chk", series, stride=options.stride)
    formats.write_diagnostics_csv(run_dir / "diagnostics.csv", series)
    log(f"Series: {len(series)} frame(s) up to t={series.horizon:.6g}")


def _cmd_build(options: RunConfig, log: Logger) -> int:
    run_dir = _prepare_run(options, log)
    log("Build phase: starting")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            params = solve_junctions(options.r_c, options.effective_l_c())
        except ValueError as exc:
            return _fail(run_dir, "build", str(exc), log, EXIT_USAGE)
        except JunctionSolveError as exc:
            return _fail(run_dir, "build", str(exc), log, EXIT_SOLVER)
        profile = build_cb_profile(params, options.effective_grid())
        report = cb_property_report(profile, params)
    _log_warning_records(caught, log)

    formats.write_profile(run_dir / "profile.txt", profile)
    formats.write_json(run_dir / "params.json", params.to_dict())
    formats.write_json(run_dir / "properties.json", report.to_dict())
    log(
        f"Build phase: {len(profile)} node(s), s_e={params.se:.6g}, s2={params.s2:.6g}, "
        f"s_b={params.sb:.6g} (s_b·r_c={params.sb * params.r_c:.4f})"
    )
    if not report.passed:
        for failure in report.failures:
            formats.append_failure(run_dir, "build", failure)
            log(f"Property failed: {failure}")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_flow(options: RunConfig, log: Logger) -> int:
    if options.oracle:
        return _flow_oracle(options, log)
    run_dir = _prepare_run(options, log)
    t_end = options.effective_t_end()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            profile, params = _initial_profile(options)
        except (ValueError, OSError) as exc:
            _log_warning_records(caught, log)
            return _fail(run_dir, "flow", str(exc), log, EXIT_USAGE)
        except JunctionSolveError as exc:
            _log_warning_records(caught, log)
            return _fail(run_dir, "flow", str(exc), log, EXIT_SOLVER)
        if params is not None:
            formats.write_json(run_dir / "params.json", params.to_dict())
        regions = _regions(params)
        log(f"Flow phase: starting ({len(profile)} nodes, t_end={t_end:g})")
        series = run(
            profile,
            t_end,
            options.effective_solver(),
            progress_callback=_progress(options, log, "Flow phase"),
            regions=regions,
        )
    _log_warning_records(caught, log)
    _write_series(run_dir, series, options, log)
    if not series.complete:
        return _fail(run_dir, "flow", series.failure or "incomplete series", log, EXIT_SOLVER)
    return EXIT_OK


def _flow_oracle(options: RunConfig, log: Logger) -> int:
    name = options.oracle or "cigar"
    run_dir = _prepare_run(options, log)
    t_end = options.effective_t_end()
    if options.refine:
        h_list = [options.h / 2**k for k in range(options.refine + 1)]
        log(f"Convergence phase: {name} to t={t_end:g} on h={', '.join(f'{h:g}' for h in h_list)}")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            study = convergence_study(name, t_end=t_end, h_list=h_list)
        _log_warning_records(caught, log)
        orders = [None, *study.orders]
        rows = [
            {"h": row.h, "dt": row.dt, "error": row.error, "order": order}
            for row, order in zip(study.rows, orders)
        ]
        formats.write_rows_csv(run_dir / "convergence.csv", rows, ("h", "dt", "error", "order"))
        formats.write_json(run_dir / "convergence.json", study.to_dict())
        for row in rows:
            order = "" if row["order"] is None else f" order={row['order']:.3f}"
            log(f"h={row['h']:g} dt={row['dt']:.3e} error={row['error']:.3e}{order}")
        return EXIT_OK

    log(f"Flow phase: oracle {name} to t={t_end:g}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        config = options.effective_solver() if options.solver_overridden else None
        series, error = oracle_run(name, options.h, t_end, config)
    _log_warning_records(caught, log)
    _write_series(run_dir, series, options, log)
    formats.write_json(
        run_dir / "oracle.json", {"oracle": name, "h": options.h, "t_end": t_end, "error": error}
    )
    log(f"Flow phase: max-norm error against the closed form {error:.3e}")
    if not series.complete:
        return _fail(run_dir, "flow", series.failure or "incomplete series", log, EXIT_SOLVER)
    return EXIT_OK


def _initial_profile(options: RunConfig) -> tuple[RadialProfile, CBParams | None]:
    if options.profile_path:
        return formats.read_profile(Path(options.profile_path).expanduser()), None
    params = solve_junctions(options.r_c, options.effective_l_c())
    return build_cb_profile(params, options.effective_grid()), params


def _regions(params: CBParams | None) -> DiagnosticRegions:
    if params is None:
        return DiagnosticRegions()
    return DiagnosticRegions(bulb_from=0.0, width_from=params.cylinder_start)


def _cmd_csf(options: RunConfig, log: Logger) -> int:
    run_dir = _prepare_run(options, log)
    t_end = options.effective_t_end()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            profile, params = _initial_profile(options)
        except (ValueError, OSError) as exc:
            _log_warning_records(caught, log)
            return _fail(run_dir, "csf", str(exc), log, EXIT_USAGE)
        except JunctionSolveError as exc:
            _log_warning_records(caught, log)
            return _fail(run_dir, "csf", str(exc), log, EXIT_SOLVER)
        if params is not None:
            formats.write_json(run_dir / "params.json", params.to_dict())
        log(f"Coupled phase: loop from s={options.rho0:g} to t={t_end:g}")
        try:
            coupled = run_coupled(
                profile,
                t_end,
                rho0=options.rho0,
                config=options.effective_solver(),
                regions=_regions(params),
                progress_callback=_progress(options, log, "Coupled phase"),
            )
        except NooseError as exc:
            _log_warning_records(caught, log)
            return _fail(run_dir, "csf", str(exc), log, EXIT_SOLVER)
    _log_warning_records(caught, log)
    _write_series(run_dir, coupled.series, options, log)
    formats.write_json(run_dir / "noose.json", coupled.noose.to_dict())
    noose = coupled.noose
    if noose.extinct:
        log(
            f"Coupled phase: loop extinct at t={noose.t_emp:.6g} ({noose.extinct_by}), "
            f"area law predicts {noose.t_pred:.6g}"
        )
    else:
        log(f"Coupled phase: loop alive at t={coupled.series.horizon:.6g}")
    if not coupled.series.complete:
        return _fail(run_dir, "csf", coupled.series.failure or "incomplete series", log, EXIT_SOLVER)
    return EXIT_OK


def _stored_params(options: RunConfig, series_path: Path) -> CBParams:
    stored = series_path.parent / "params.json"
    if stored.exists():
        return CBParams.from_dict(json.loads(stored.read_text(encoding="utf-8")))
    return solve_junctions(options.r_c, options.effective_l_c())


def _stored_noose(series: FlowSeries, series_path: Path) -> NooseSummary | None:
    stored = series_path.parent / "noose.json"
    t_emp: float | None = None
    extinct_by: str | None = None
    if stored.exists():
        payload = json.loads(stored.read_text(encoding="utf-8"))
        t_emp = payload.get("t_emp")
        extinct_by = payload.get("extinct_by")
    try:
        return summary_from_series(series, t_emp=t_emp, extinct_by=extinct_by)
    except CoverageError:
        return None


def _cmd_verify(options: RunConfig, log: Logger) -> int:
    run_dir = _prepare_run(options, log)
    series_path = Path(options.series or "").expanduser()
    try:
        series = formats.read_checkpoint(series_path)
        params = _stored_params(options, series_path)
    except (OSError, ValueError) as exc:
        return _fail(run_dir, "verify", str(exc), log, EXIT_USAGE)
    except JunctionSolveError as exc:
        return _fail(run_dir, "verify", str(exc), log, EXIT_SOLVER)

    log(f"Verify phase: {len(series)} frame(s) from {series_path}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        noose = _stored_noose(series, series_path)
        harness = run_checks(
            series, params, names=options.checks, noose=noose, settings=options.effective_settings()
        )
    _log_warning_records(caught, log)
    formats.write_json(run_dir / "verify.json", harness.to_dict())
    _report_checks(harness, log)
    for failure in harness.failures:
        formats.append_failure(run_dir, "verify", failure.witness())
    return EXIT_OK if harness.passed else EXIT_CHECK_FAILED


def _cmd_sweep(options: RunConfig, log: Logger) -> int:
    run_dir = _prepare_run(options, log)
    log(f"Sweep phase: r_c in {', '.join(f'{r:g}' for r in options.rc_list)} with {options.jobs} job(s)")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        table = sweep_rc(
            options.rc_list,
            horizon=options.effective_t_end(),
            config=options.effective_solver(),
            grid=options.effective_grid(),
            settings=replace(options.effective_settings(), jobs=1),
            jobs=options.jobs,
        )
    _log_warning_records(caught, log)
    rows = [row.row() | {"error": row.error} for row in table.rows]
    formats.write_rows_csv(run_dir / "sweep.csv", rows, formats.SWEEP_COLUMNS)
    formats.write_json(run_dir / "sweep.json", table.to_dict())

    code = EXIT_OK
    for row in table.rows:
        if row.failures:
            for failure in row.failures:
                formats.append_failure(run_dir, "sweep", f"r_c={row.r_c:g}: {failure.witness()}")
                log(f"Check r_c={row.r_c:g} {failure.witness()}")
            code = max(code, EXIT_CHECK_FAILED)
        elif row.error:
            formats.append_failure(run_dir, "sweep", f"r_c={row.r_c:g}: {row.error}")
            code = EXIT_SOLVER
        elif row.report is not None and not row.report.passed:
            for failure in row.report.harness.failures:
                log(f"Check r_c={row.r_c:g} {failure.witness()}")
            code = max(code, EXIT_CHECK_FAILED)
        if row.report is not None:
            log(f"r_c={row.r_c:g}: peak sup K={row.report.phases.peak_sup_k:.4g}")
    exponent = table.exponent
    if exponent is not None:
        log(f"Sweep phase: peak sup K grows like r_c^-{exponent:.3f}")
    return code


def _cmd_report(options: RunConfig, log: Logger) -> int:
    run_dir = _prepare_run(options, log)
    log(f"Scenario phase: r_c={options.r_c:g}, l_c={options.effective_l_c():g}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            report = run_cb_scenario(
                options.r_c,
                options.effective_l_c(),
                options.effective_t_end(),
                options.effective_solver(),
                grid=options.effective_grid(),
                checks=options.checks,
                settings=options.effective_settings(),
                progress_callback=_progress(options, log, "Scenario phase"),
            )
        except ValueError as exc:
            _log_warning_records(caught, log)
            return _fail(run_dir, "report", str(exc), log, EXIT_USAGE)
        except (ScenarioError, JunctionSolveError, NooseError) as exc:
            _log_warning_records(caught, log)
            harness = getattr(exc, "report", None)
            if harness is not None:
                formats.write_json(run_dir / "verify.json", harness.to_dict())
                _report_checks(harness, log)
            if isinstance(exc, ChecksFailedError) and harness is not None:
                for failure in harness.failures:
                    formats.append_failure(run_dir, "report", failure.witness())
                return EXIT_CHECK_FAILED
            return _fail(run_dir, "report", str(exc), log, EXIT_SOLVER)
    _log_warning_records(caught, log)

    if report.series is not None:
        _write_series(run_dir, report.series, options, log)
    formats.write_json(run_dir / "params.json", report.params.to_dict())
    formats.write_json(run_dir / "noose.json", report.noose.to_dict())
    formats.write_json(run_dir / "report.json", report.to_dict())
    phases = [{"phase": p.name, "start": p.start, "end": p.end} for p in report.phases.phases]
    formats.write_rows_csv(run_dir / "phases.csv", phases, ("phase", "start", "end"))

    log(f"Scenario phase: t1={report.t1:.4f}, phases {' -> '.join(report.phases.names())}")
    interval = report.phases.burst_interval
    if interval is not None:
        log(
            f"Scenario phase: burst on [{interval[0]:.4f}, {interval[1]:.4f}], "
            f"peak sup K={report.phases.peak_sup_k:.4g} at t={report.phases.peak_time:.4f}"
        )
    _report_checks(report.harness, log)
    if report.passed:
        return EXIT_OK
    for failure in report.harness.failures:
        formats.append_failure(run_dir, "report", failure.witness())
    if not report.burst_in_window:
        formats.append_failure(run_dir, "report", f"no burst inside the window, interval={interval}")
    if not report.early_bounded:
        formats.append_failure(run_dir, "report", "curvature exceeded the early envelope")
    if report.recovered is False:
        formats.append_failure(run_dir, "report", "sup K did not recover after t=4")
    return EXIT_CHECK_FAILED


def _progress(options: RunConfig, log: Logger, label: str) -> ProgressCallback | None:
    if options.verbose and not options.quiet:
        return _build_progress_logger(log, label)
    return None


def _build_logger(quiet: bool) -> Logger:
    def _log(message: str) -> None:
        if not quiet:
            print(message)

    return _log


def _build_progress_logger(log: Logger, label: str) -> ProgressCallback:
    def _progress(step: int, t: float, dt: float, accepted: bool) -> None:
        status = "accepted" if accepted else "rejected"
        log(f"{label} step {step}: t={t:.6f} dt={dt:.3e} [{status}]")

    return _progress


def _log_warning_records(records: list[warnings.WarningMessage], log: Logger) -> None:
    for record in records:
        message = str(record.message)
        if message:
            log(f"Warning: {message}")

"""Command-line front end: solve, sweep, calibrate, validate, screen.

Exit codes: 0 all good, 1 configuration or input error, 2 a solve failed
or did not converge.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .calibration import (
    DEFECTIVE,
    CalibrationProblem,
    PiezometerRecord,
    calibrate,
    screen_piezometers,
)
from .config import RunConfig, load_config
from .errors import ConfigError, DamseepError, SolverError, ValidationError
from .exports import export_flow_net
from .geometry import SahandParams, build_sahand_section
from .postproc import HeadProbe, total_discharge
from .runner import run_sweep, solve_scenario

log = logging.getLogger(__name__)

RESERVOIR = "RESERVOIR"
DISCHARGE = "DISCHARGE_LPS"
RESERVED = (RESERVOIR, DISCHARGE)

_HEADER = ("date", "instrument", "level_m")
# piezometer naming: I<chainage>-<U|D><offset from dam axis>
_NAME_RE = re.compile(r"^I\d+(?:\.\d+)?-([UD])(\d+(?:\.\d+)?)$")


def ingest_instrument_csv(path) -> dict:
    """Read `date,instrument,level_m` rows into per-instrument series.

    Series are sorted by date; a duplicate (date, instrument) pair keeps
    the last row and logs a warning.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read observations {path}: {exc}") from exc
    if not lines:
        raise ConfigError(f"{path}: empty file, expected header {','.join(_HEADER)}")
    header = tuple(c.strip() for c in lines[0].split(","))
    if header != _HEADER:
        raise ConfigError(
            f"{path}:1: bad header {','.join(header)!r}, expected {','.join(_HEADER)}"
        )
    table: dict = {}
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 3:
            raise ConfigError(f"{path}:{no}: expected 3 columns, got {len(cells)}")
        date, name, level_text = cells
        try:
            datetime.date.fromisoformat(date)
        except ValueError:
            raise ConfigError(f"{path}:{no}: bad ISO date {date!r}") from None
        try:
            level = float(level_text)
        except ValueError:
            raise ConfigError(f"{path}:{no}: bad level {level_text!r}") from None
        if not name:
            raise ConfigError(f"{path}:{no}: empty instrument name")
        series = table.setdefault(name, {})
        if date in series:
            log.warning("%s:%d: duplicate reading %s/%s, keeping the last",
                        path, no, date, name)
        series[date] = level
    return {name: sorted(series.items()) for name, series in table.items()}


def instrument_location(name: str, params: SahandParams) -> tuple:
    """(x, y) of a piezometer from its name.

    The chainage prefix picks the instrumented section (this model is that
    section); U/D offsets hang off the dam axis. No elevation is encoded,
    so instruments sit 1 m below the bed contact, under the dam body.
    """
    m = _NAME_RE.match(name)
    if m is None:
        raise ConfigError(
            f"instrument {name!r} does not follow the I<chainage>-<U|D><offset> "
            "naming, cannot locate it"
        )
    side, offset = m.group(1), float(m.group(2))
    x = params.axis_x + (offset if side == "D" else -offset)
    return (x, params.bed_elevation - 1.0)


def _series_level(series, date: str) -> Optional[float]:
    for d, level in series:
        if d == date:
            return level
    return None


def _usable_instruments(instruments: dict) -> dict:
    return {k: v for k, v in instruments.items() if k not in RESERVED}


def _screen(instruments: dict) -> dict:
    reservoir = instruments.get(RESERVOIR)
    if not reservoir:
        raise ConfigError(f"observations contain no {RESERVOIR} series")
    return screen_piezometers(_usable_instruments(instruments), reservoir)


@dataclass(frozen=True)
class ValidationReport:
    date: str
    reservoir_level: float
    scenario: str
    q_model_lps: float
    residuals: dict  # instrument -> m, after the shared datum fit
    datum_offset: float
    rms: float
    statuses: dict  # instrument -> healthy/defective/indeterminate
    q_observed_lps: Optional[float] = None
    anomaly: bool = False

    def lines(self) -> list:
        out = [
            f"scenario {self.scenario} at {self.date}: "
            f"reservoir {self.reservoir_level:g} m",
            f"model discharge: {self.q_model_lps:.4g} L/s",
        ]
        if self.q_observed_lps is not None:
            verdict = "LEAKAGE ANOMALY" if self.anomaly else "within range"
            out.append(
                f"observed discharge: {self.q_observed_lps:.4g} L/s "
                f"({verdict}, threshold 2x model)"
            )
        out.append(f"datum offset: {self.datum_offset:+.3f} m")
        for name in sorted(self.residuals):
            out.append(f"  {name}: residual {self.residuals[name]:+.3f} m")
        out.append(f"rms: {self.rms:.4f} m over {len(self.residuals)} piezometers")
        return out


def validate_against_instruments(
    config: RunConfig,
    instruments: dict,
    date: str,
    scenario_name: Optional[str] = None,
) -> ValidationReport:
    """Solve at the date's reservoir level and compare against readings."""
    reservoir = instruments.get(RESERVOIR)
    if not reservoir:
        raise ConfigError(f"observations contain no {RESERVOIR} series")
    level = _series_level(reservoir, date)
    if level is None:
        raise ConfigError(f"no {RESERVOIR} reading on {date}")

    statuses = _screen(instruments)
    usable = {k for k, s in statuses.items() if s != DEFECTIVE}
    if not usable:
        raise ConfigError("no healthy observations")

    base = config.scenario(scenario_name) if scenario_name else (
        config.scenarios[0] if len(config.scenarios) == 1
        else config.scenario("baseline")
    )
    scenario = dataclasses.replace(base, reservoir_level=level)

    records = []
    for name in sorted(usable):
        obs = _series_level(instruments[name], date)
        if obs is None:
            continue
        try:
            loc = instrument_location(name, config.section)
        except ConfigError as exc:
            log.warning("%s", exc)
            continue
        records.append(PiezometerRecord(name, loc, obs))
    if not records:
        raise ConfigError(f"no usable piezometer readings on {date}")

    result = solve_scenario(config, scenario)
    if not result.converged:
        raise SolverError(f"validation solve did not converge at level {level:g}")
    report = total_discharge(result, config.crest_length, scenario_id=scenario.name)
    probe = HeadProbe(result)
    modeled = np.array([probe(r.location) for r in records])
    observed = np.array([r.observed_level for r in records])
    diff = modeled - observed
    offset = float(diff.mean())
    residuals = {r.name: float(d) for r, d in zip(records, diff - offset)}
    rms = float(np.sqrt(np.mean((diff - offset) ** 2)))

    q_obs = None
    anomaly = False
    if DISCHARGE in instruments:
        q_obs = _series_level(instruments[DISCHARGE], date)
        if q_obs is not None:
            anomaly = q_obs > 2.0 * report.q_total_lps
    return ValidationReport(
        date=date,
        reservoir_level=level,
        scenario=scenario.name,
        q_model_lps=report.q_total_lps,
        residuals=residuals,
        datum_offset=offset,
        rms=rms,
        statuses=statuses,
        q_observed_lps=q_obs,
        anomaly=anomaly,
    )


# --- subcommands ---------------------------------------------------------------

def _cmd_solve(args) -> int:
    config = load_config(args.config)
    name = args.scenario or (
        "baseline" if any(s.name == "baseline" for s in config.scenarios)
        else config.scenarios[0].name
    )
    scenario = config.scenario(name)
    result = solve_scenario(config, scenario)
    if not result.converged:
        print(f"{name}: did not converge in {result.outer_iterations} iterations",
              file=sys.stderr)
        return 2
    report = total_discharge(result, config.crest_length, scenario_id=name)
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    vtk, svg = export_flow_net(result, out, name)
    print(f"{name}: q = {report.q_per_meter:.6g} m^3/s per m, "
          f"{report.q_total_lps:.4g} L/s over {config.crest_length:g} m crest")
    print(f"wrote {vtk} and {svg}")
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    result = run_sweep(config, jobs=args.jobs, out_dir=args.out)
    out = Path(args.out or config.output_dir)
    print((out / "report.txt").read_text(), end="")
    print(f"report written to {out / 'report.csv'}")
    return 0 if result.all_converged else 2


def _cmd_calibrate(args) -> int:
    config = load_config(args.config)
    instruments = ingest_instrument_csv(args.observations)
    reservoir = instruments.get(RESERVOIR)
    if not reservoir:
        raise ConfigError(f"observations contain no {RESERVOIR} series")
    level = _series_level(reservoir, args.date)
    if level is None:
        raise ConfigError(f"no {RESERVOIR} reading on {args.date}")
    statuses = _screen(instruments)
    usable = {k for k, s in statuses.items() if s != DEFECTIVE}
    if not usable:
        raise ConfigError("no healthy observations")

    base = config.scenarios[0] if len(config.scenarios) == 1 else config.scenario("baseline")
    scenario = dataclasses.replace(base, reservoir_level=level)
    records = []
    for name in sorted(usable):
        obs = _series_level(instruments[name], args.date)
        if obs is None:
            continue
        records.append(
            PiezometerRecord(name, instrument_location(name, config.section), obs)
        )
    if not records:
        raise ConfigError(f"no usable piezometer readings on {args.date}")

    section = build_sahand_section(config.section)
    problem = CalibrationProblem(
        section=section,
        scenario=scenario,
        free_parameters=((args.zone, (args.lo, args.hi)),),
        observations=tuple(records),
        mesh_options=config.mesh,
        solver=config.solver,
    )
    fit = calibrate(problem, budget=args.budget)
    for zone, value in fit.parameters.items():
        print(f"fitted {zone}: log10 k = {value:.3f}  (k = {10 ** value:.3g} m/s)")
    print(f"datum offset: {fit.datum_offset:+.3f} m")
    print(f"rms residual: {fit.rms_residual:.4f} m "
          f"after {fit.evaluations} evaluations")
    return 0 if fit.converged else 2


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    instruments = ingest_instrument_csv(args.observations)
    report = validate_against_instruments(
        config, instruments, args.date, scenario_name=args.scenario
    )
    for line in report.lines():
        print(line)
    return 0


def _cmd_screen(args) -> int:
    instruments = ingest_instrument_csv(args.observations)
    statuses = _screen(instruments)
    for name in sorted(statuses):
        print(f"{name}: {statuses[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="damseep",
        description="Steady seepage analysis and leakage-control studies "
                    "for zoned embankment dams",
    )
    parser.add_argument("--version", action="version", version=f"damseep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario and export its flow net")
    p.add_argument("config")
    p.add_argument("--scenario", help="scenario name (default: baseline or first)")
    p.add_argument("--out", help="output directory (default: config output_dir)")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="solve every scenario and write the report")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--out", help="output directory (default: config output_dir)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("calibrate", help="fit a zone permeability to piezometers")
    p.add_argument("config")
    p.add_argument("--observations", required=True, help="instrument CSV")
    p.add_argument("--date", required=True, help="ISO date of the snapshot")
    p.add_argument("--zone", default="Stone Foundation", help="zone to fit")
    p.add_argument("--lo", type=float, default=-9.0, help="log10 k lower bound")
    p.add_argument("--hi", type=float, default=-3.0, help="log10 k upper bound")
    p.add_argument("--budget", type=int, default=200, help="objective evaluations")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("validate", help="compare a solve against instrument readings")
    p.add_argument("config")
    p.add_argument("--observations", required=True, help="instrument CSV")
    p.add_argument("--date", required=True, help="ISO date of the snapshot")
    p.add_argument("--scenario", help="scenario name (default: baseline)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("screen", help="classify piezometer series health")
    p.add_argument("--observations", required=True, help="instrument CSV")
    p.set_defaults(func=_cmd_screen)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DamseepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Scenario sweep engine: solve every scenario in a config, write the
report tables, exports, and run manifest.

The CSV report is the deterministic artifact (no timing, fixed float
format); the text table is for reading and carries wall-clock seconds.
Scenario solves are independent, so they can run in a process pool; the
results are merged by scenario name and emitted in config order, which
makes parallel and sequential output identical.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .config import RunConfig, config_hash
from .errors import DamseepError
from .exports import export_flow_net
from .fem import SolveResult, solve_unconfined
from .geometry import Scenario, apply_scenario, boundary_conditions_for, build_sahand_section
from .meshing import triangulate
from .postproc import DischargeReport, exit_gradient, phreatic_line, total_discharge

_G = "%.10g"

GREEN, YELLOW, RED = "green", "yellow", "red"


@dataclass(frozen=True)
class ScenarioRow:
    """Summary of one scenario solve, as it appears in the report."""

    name: str
    converged: bool
    seconds: float
    q_per_meter: Optional[float] = None
    q_total_lps: Optional[float] = None
    ratio_to_baseline: Optional[float] = None
    max_exit_gradient: Optional[float] = None
    phreatic_exit_m: Optional[float] = None
    mass_balance: Optional[float] = None  # |inflow - outflow| / inflow
    zone: str = ""
    error: str = ""
    vtk: str = ""
    svg: str = ""


@dataclass(frozen=True)
class SweepResult:
    rows: tuple  # of ScenarioRow, in config order
    baseline_name: str
    config_digest: str

    def row(self, name: str) -> ScenarioRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.rows)


def solve_scenario(config: RunConfig, scenario: Scenario) -> SolveResult:
    """Mesh and solve a single scenario of the config."""
    section = build_sahand_section(config.section)
    section = apply_scenario(section, scenario)
    segments = boundary_conditions_for(section, scenario)
    mesh = triangulate(section, config.mesh, segments=segments)
    return solve_unconfined(mesh, config.solver)


def _classify(q_total_lps: float, config: RunConfig) -> str:
    if q_total_lps <= config.report.discharge_green_lps:
        return GREEN
    if q_total_lps <= config.report.discharge_red_lps:
        return YELLOW
    return RED


def _run_one(config: RunConfig, name: str, out_dir: str) -> ScenarioRow:
    """Worker body: solve one scenario and write its exports."""
    t0 = time.perf_counter()
    scenario = config.scenario(name)
    try:
        result = solve_scenario(config, scenario)
        if not result.converged:
            raise DamseepError(
                f"free-surface iteration did not converge in "
                f"{result.outer_iterations} iterations"
            )
        report = total_discharge(result, config.crest_length, scenario_id=name)
        grad = exit_gradient(result)
        line = phreatic_line(result)
        exit_y = float(line.points[-1][1]) if len(line.points) else None
        vtk, svg = export_flow_net(result, out_dir, name)
    except DamseepError as exc:
        return ScenarioRow(
            name=name,
            converged=False,
            seconds=time.perf_counter() - t0,
            error=f"{type(exc).__name__}: {exc}",
        )
    return ScenarioRow(
        name=name,
        converged=True,
        seconds=time.perf_counter() - t0,
        q_per_meter=report.q_per_meter,
        q_total_lps=report.q_total_lps,
        max_exit_gradient=grad,
        phreatic_exit_m=exit_y,
        mass_balance=result.mass_balance_error,
        zone=_classify(report.q_total_lps, config),
        vtk=str(Path(vtk).name),
        svg=str(Path(svg).name),
    )


def run_sweep(
    config: RunConfig,
    jobs: int = 1,
    out_dir: Optional[str] = None,
) -> SweepResult:
    """Solve every scenario, write reports + exports, return the summary.

    jobs > 1 dispatches scenarios to a process pool; the merge is keyed by
    scenario name so worker completion order cannot affect the output.
    """
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = [s.name for s in config.scenarios]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {n: pool.submit(_run_one, config, n, str(out)) for n in names}
            by_name = {n: f.result() for n, f in futures.items()}
    else:
        by_name = {n: _run_one(config, n, str(out)) for n in names}

    baseline_name = "baseline" if "baseline" in by_name else names[0]
    base = by_name[baseline_name]
    rows = []
    for n in names:
        row = by_name[n]
        # ratio only means something when both endpoints converged
        if row.converged and base.converged and base.q_total_lps > 0:
            row = dataclasses.replace(
                row, ratio_to_baseline=row.q_total_lps / base.q_total_lps
            )
        rows.append(row)

    result = SweepResult(
        rows=tuple(rows),
        baseline_name=baseline_name,
        config_digest=config_hash(config),
    )
    write_report_csv(result, out / "report.csv")
    write_report_text(result, out / "report.txt")
    write_manifest(config, result, out / "manifest.json")
    return result


_CSV_COLUMNS = (
    "scenario",
    "converged",
    "q_per_meter_m3_s",
    "q_total_lps",
    "ratio_to_baseline",
    "max_exit_gradient",
    "phreatic_exit_m",
    "mass_balance",
    "zone",
    "error",
)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return _G % value
    return str(value)


def _row_cells(r: ScenarioRow) -> list:
    return [
        r.name,
        _cell(r.converged),
        _cell(r.q_per_meter),
        _cell(r.q_total_lps),
        _cell(r.ratio_to_baseline),
        _cell(r.max_exit_gradient),
        _cell(r.phreatic_exit_m),
        _cell(r.mass_balance),
        r.zone,
        r.error.replace(",", ";").replace("\n", " "),
    ]


def write_report_csv(result: SweepResult, path) -> None:
    """Deterministic summary table: fixed float format, no wall clock."""
    lines = [",".join(_CSV_COLUMNS)]
    for r in result.rows:
        lines.append(",".join(_row_cells(r)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_report_text(result: SweepResult, path) -> None:
    """Human-oriented aligned table; includes timing."""
    header = list(_CSV_COLUMNS[:-1]) + ["seconds"]
    table = [header]
    for r in result.rows:
        table.append(_row_cells(r)[:-1] + ["%.2f" % r.seconds])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    out = []
    for k, row in enumerate(table):
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if k == 0:
            out.append("  ".join("-" * w for w in widths))
    failed = [r for r in result.rows if not r.converged]
    if failed:
        out.append("")
        out.append("failed scenarios:")
        for r in failed:
            out.append(f"  {r.name}: {r.error}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def write_manifest(config: RunConfig, result: SweepResult, path) -> None:
    """Reproducibility record: effective config + hash + produced files."""
    doc = {
        "tool": "damseep",
        "version": __version__,
        "config_hash": result.config_digest,
        "baseline": result.baseline_name,
        "report_csv": "report.csv",
        "report_txt": "report.txt",
        "effective_config": config.to_dict(),
        "scenarios": {
            r.name: {
                "converged": r.converged,
                "q_total_lps": r.q_total_lps,
                "vtk": r.vtk,
                "svg": r.svg,
                "error": r.error,
            }
            for r in result.rows
        },
    }
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

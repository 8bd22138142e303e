"""Steady-state seepage analysis and leakage-control studies for zoned
embankment dams."""

from .errors import (
    ConfigError,
    DamseepError,
    GeometryError,
    MeshingError,
    PostprocError,
    SolverError,
    ValidationError,
)
from .geometry import (
    BlanketDrain,
    ClawDrain,
    ClayBlanket,
    ConcreteCover,
    CoreBlanket,
    CutoffUnderCore,
    CutoffUpstreamHeel,
    DamSection,
    FoundationDepthOverride,
    MaterialProperties,
    Permeability,
    SahandParams,
    Scenario,
    Zone,
    apply_scenario,
    boundary_conditions_for,
    build_rectangular_section,
    build_sahand_section,
)
from .meshing import Mesh, MeshOptions, triangulate
from .fem import SolverSettings, SolveResult, solve_unconfined
from .postproc import (
    DischargeReport,
    HeadProbe,
    PhreaticLine,
    cutline_discharge,
    exit_gradient,
    phreatic_line,
    probe_head,
    total_discharge,
    velocity_field,
)
from .calibration import (
    CalibrationProblem,
    CalibrationResult,
    PiezometerRecord,
    calibrate,
    screen_piezometers,
)
from .config import RunConfig, config_hash, load_config, packaged_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DamseepError", "GeometryError", "MeshingError", "SolverError",
    "PostprocError", "ConfigError", "ValidationError",
    "Permeability", "MaterialProperties", "Zone", "DamSection",
    "SahandParams", "Scenario", "build_sahand_section",
    "build_rectangular_section", "apply_scenario", "boundary_conditions_for",
    "FoundationDepthOverride", "CutoffUnderCore", "CutoffUpstreamHeel",
    "ConcreteCover", "ClayBlanket", "CoreBlanket", "BlanketDrain", "ClawDrain",
    "Mesh", "MeshOptions", "triangulate",
    "SolverSettings", "SolveResult", "solve_unconfined",
    "DischargeReport", "PhreaticLine", "HeadProbe", "probe_head",
    "total_discharge", "cutline_discharge", "exit_gradient", "phreatic_line",
    "velocity_field",
    "PiezometerRecord", "CalibrationProblem", "CalibrationResult",
    "calibrate", "screen_piezometers",
    "RunConfig", "parse_config", "load_config", "packaged_config",
    "config_hash",
]

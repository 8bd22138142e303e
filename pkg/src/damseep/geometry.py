"""Zoned embankment dam cross-sections, scenarios, and boundary conditions.

Coordinates are meters in a vertical (x, y) plane: x increases downstream,
y is elevation. Hydraulic heads are elevations in the same datum.
Permeabilities are stored in m/s internally; the unit they were entered in
is kept so values round-trip through reports unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import ClassVar, Mapping, Optional, Union

from shapely.geometry import LineString, Point, Polygon, box
from shapely.ops import unary_union

from .errors import GeometryError

# Relative tolerance for area bookkeeping (zone partition, sliver filtering).
AREA_RTOL = 1e-9
# Fraction of an intervention's ideal area that must survive trimming by
# previously placed interventions; below this the combination is a conflict.
MIN_SURVIVING_FRACTION = 0.10

_UNIT_TO_M_PER_S = {"m/s": 1.0, "cm/s": 0.01}


def convert_permeability(value: float, unit: str) -> float:
    """Convert a permeability value in `unit` to m/s."""
    try:
        factor = _UNIT_TO_M_PER_S[unit]
    except KeyError:
        raise GeometryError(
            f"unknown permeability unit {unit!r}; expected one of "
            f"{sorted(_UNIT_TO_M_PER_S)}"
        ) from None
    return value * factor


@dataclass(frozen=True)
class Permeability:
    """Saturated permeability with the unit it was specified in.

    `m_per_s` is the value actually used in computations. `unit` and
    `literal` exist so that a value entered as "1e-1 cm/s" re-serializes
    to exactly that string.
    """

    m_per_s: float
    unit: str = "m/s"
    literal: Optional[str] = None

    def __post_init__(self) -> None:
        if self.unit not in _UNIT_TO_M_PER_S:
            raise GeometryError(f"unknown permeability unit {self.unit!r}")
        if not (0.0 < self.m_per_s <= 1.0):
            raise GeometryError(
                f"permeability must be in (0, 1] m/s, got {self.m_per_s} m/s"
            )

    @classmethod
    def from_value(cls, value: float, unit: str = "m/s") -> "Permeability":
        return cls(convert_permeability(value, unit), unit)

    @classmethod
    def parse(cls, text: str) -> "Permeability":
        """Parse strings like "1e-1 cm/s" or "0.0001 m/s"."""
        parts = text.split()
        if len(parts) != 2:
            raise GeometryError(
                f"cannot parse permeability {text!r}; expected '<value> <unit>'"
            )
        literal, unit = parts
        try:
            value = float(literal)
        except ValueError:
            raise GeometryError(f"bad permeability value {literal!r}") from None
        return cls(convert_permeability(value, unit), unit, literal)

    def value_in_input_unit(self) -> float:
        return self.m_per_s / _UNIT_TO_M_PER_S[self.unit]

    def display(self) -> str:
        """Render in the original unit; preserves the parsed literal exactly."""
        if self.literal is not None:
            return f"{self.literal} {self.unit}"
        return f"{self.value_in_input_unit()!r} {self.unit}"


@dataclass(frozen=True)
class MaterialProperties:
    """Hydraulic and index properties of one fill material.

    Only the permeability participates in seepage computations; unit weight,
    friction angle and cohesion are carried as metadata for reporting.
    """

    name: str
    k: Permeability
    gamma: float = 0.0  # unit weight, kN/m^3
    phi: float = 0.0  # friction angle, degrees
    cohesion: float = 0.0  # kPa

    def __post_init__(self) -> None:
        if not self.name:
            raise GeometryError("material name must be non-empty")
        for attr in ("gamma", "phi", "cohesion"):
            if getattr(self, attr) < 0:
                raise GeometryError(f"material {self.name!r}: {attr} must be >= 0")

    @property
    def k_sat(self) -> float:
        """Saturated permeability in m/s."""
        return self.k.m_per_s


def _normalize_ring(coords) -> tuple:
    """Canonical vertex tuple: open ring, CCW, starting at the lexicographic
    minimum, consecutive near-duplicates collapsed."""
    pts = [(float(x), float(y)) for x, y in coords]
    if len(pts) > 1 and _close(pts[0], pts[-1]):
        pts.pop()
    cleaned = []
    for p in pts:
        if not cleaned or not _close(cleaned[-1], p):
            cleaned.append(p)
    if len(cleaned) >= 2 and _close(cleaned[0], cleaned[-1]):
        cleaned.pop()
    if len(cleaned) < 3:
        raise GeometryError("polygon ring needs at least 3 distinct vertices")
    # shoelace; positive = CCW
    area2 = sum(
        cleaned[i][0] * cleaned[(i + 1) % len(cleaned)][1]
        - cleaned[(i + 1) % len(cleaned)][0] * cleaned[i][1]
        for i in range(len(cleaned))
    )
    if area2 < 0:
        cleaned.reverse()
    start = min(range(len(cleaned)), key=lambda i: cleaned[i])
    return tuple(cleaned[start:] + cleaned[:start])


def _close(a, b, tol: float = 1e-9) -> bool:
    return abs(a[0] - b[0]) <= tol and abs(a[1] - b[1]) <= tol


@dataclass(frozen=True)
class Zone:
    """A simply connected region of one material."""

    name: str
    material: MaterialProperties
    vertices: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", _normalize_ring(self.vertices))
        poly = Polygon(self.vertices)
        if not poly.is_valid:
            raise GeometryError(f"zone {self.name!r}: polygon is not simple/valid")
        if poly.area <= 0:
            raise GeometryError(f"zone {self.name!r}: polygon has no area")

    @property
    def polygon(self) -> Polygon:
        return Polygon(self.vertices)

    @property
    def area(self) -> float:
        return self.polygon.area

    @classmethod
    def from_polygon(cls, name: str, material: MaterialProperties, poly: Polygon) -> "Zone":
        return cls(name, material, tuple(poly.exterior.coords))


FIXED_HEAD = "fixed_head"
IMPERMEABLE = "impermeable"
POTENTIAL_SEEPAGE_FACE = "potential_seepage_face"


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str
    head: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in (FIXED_HEAD, IMPERMEABLE, POTENTIAL_SEEPAGE_FACE):
            raise GeometryError(f"unknown boundary condition kind {self.kind!r}")
        if self.kind == FIXED_HEAD and self.head is None:
            raise GeometryError("fixed_head condition requires a head value")
        if self.kind != FIXED_HEAD and self.head is not None:
            raise GeometryError(f"{self.kind} condition takes no head value")


def fixed_head(head: float) -> BoundaryCondition:
    return BoundaryCondition(FIXED_HEAD, float(head))


def impermeable() -> BoundaryCondition:
    return BoundaryCondition(IMPERMEABLE)


def seepage_face() -> BoundaryCondition:
    return BoundaryCondition(POTENTIAL_SEEPAGE_FACE)


@dataclass(frozen=True)
class BoundarySegment:
    """A polyline piece of the section exterior with one condition."""

    name: str
    points: tuple
    condition: BoundaryCondition

    def __post_init__(self) -> None:
        pts = tuple((float(x), float(y)) for x, y in self.points)
        if len(pts) < 2:
            raise GeometryError(f"boundary segment {self.name!r} needs >= 2 points")
        object.__setattr__(self, "points", pts)

    @property
    def length(self) -> float:
        return sum(
            math.dist(self.points[i], self.points[i + 1])
            for i in range(len(self.points) - 1)
        )

    def polyline(self) -> LineString:
        return LineString(self.points)


# ---------------------------------------------------------------------------
# Interventions
# ---------------------------------------------------------------------------

MaterialRef = Union[str, MaterialProperties]


def default_concrete() -> MaterialProperties:
    return MaterialProperties(
        "Concrete cover", Permeability.from_value(1e-5, "cm/s"), gamma=24.0
    )


@dataclass(frozen=True)
class Intervention:
    kind: ClassVar[str] = ""


@dataclass(frozen=True)
class FoundationDepthOverride(Intervention):
    """Rebuild the section with a different modelled foundation depth."""

    kind: ClassVar[str] = "foundation_depth_override"
    depth: float

    def __post_init__(self) -> None:
        if self.depth <= 0:
            raise GeometryError("foundation depth must be > 0")


@dataclass(frozen=True)
class CutoffUnderCore(Intervention):
    """Vertical cutoff wall continuing the core key downward."""

    kind: ClassVar[str] = "cutoff_under_core"
    depth: float
    thickness: float = 2.0
    material: MaterialRef = "Core"

    def __post_init__(self) -> None:
        if self.depth <= 0 or self.thickness <= 0:
            raise GeometryError("cutoff wall depth and thickness must be > 0")


@dataclass(frozen=True)
class CutoffUpstreamHeel(Intervention):
    """Vertical cutoff wall through the upstream shell near the heel."""

    kind: ClassVar[str] = "cutoff_upstream_heel"
    depth: float
    thickness: float = 2.0
    # Wall axis sits half a thickness inside the heel, so the upstream wall
    # face is flush with it. Further in, the permeable shell above the wall
    # top short-circuits it and the wall stops doing anything.
    inset: float = 1.0
    material: MaterialRef = "Core"

    def __post_init__(self) -> None:
        if self.depth <= 0 or self.thickness <= 0 or self.inset <= 0:
            raise GeometryError("heel wall depth, thickness, inset must be > 0")


@dataclass(frozen=True)
class ConcreteCover(Intervention):
    """Low-permeability skin on the upstream face (thickness normal to it)."""

    kind: ClassVar[str] = "concrete_cover"
    thickness: float = 0.5
    material: MaterialRef = field(default_factory=default_concrete)

    def __post_init__(self) -> None:
        if self.thickness <= 0:
            raise GeometryError("cover thickness must be > 0")


@dataclass(frozen=True)
class ClayBlanket(Intervention):
    """Blanket replacing the top of the reservoir bottom upstream of the heel."""

    kind: ClassVar[str] = "clay_blanket"
    thickness: float = 1.0
    length: float = 200.0
    material: MaterialRef = "Core"

    def __post_init__(self) -> None:
        if self.thickness <= 0 or self.length <= 0:
            raise GeometryError("blanket thickness and length must be > 0")


@dataclass(frozen=True)
class CoreBlanket(Intervention):
    """Inclined band of core material under and parallel to the upstream face.

    Runs from the core's upstream face down-slope; reaches the bed when
    `length` is None, else is truncated after that horizontal extent.
    """

    kind: ClassVar[str] = "core_blanket"
    thickness: float = 3.0  # vertical thickness of the band
    burial: float = 5.0  # vertical depth of the band top below the face
    length: Optional[float] = None
    material: MaterialRef = "Core"

    def __post_init__(self) -> None:
        if self.thickness <= 0 or self.burial < 0:
            raise GeometryError("core blanket thickness must be > 0, burial >= 0")
        if self.length is not None and self.length <= 0:
            raise GeometryError("core blanket length must be > 0 when given")


@dataclass(frozen=True)
class BlanketDrain(Intervention):
    """Horizontal drain layer along the base of the downstream shell."""

    kind: ClassVar[str] = "blanket_drain"
    depth: float = 3.0  # layer thickness above the bed
    material: MaterialRef = "Drain adjacent to the filter"

    def __post_init__(self) -> None:
        if self.depth <= 0:
            raise GeometryError("blanket drain depth must be > 0")


@dataclass(frozen=True)
class ClawDrain(Intervention):
    """Drain prism at the downstream toe ("claw"), rising `depth` above bed."""

    kind: ClassVar[str] = "claw_drain"
    depth: float = 10.0
    material: MaterialRef = "Drain adjacent to the filter"

    def __post_init__(self) -> None:
        if self.depth <= 0:
            raise GeometryError("claw drain depth must be > 0")


INTERVENTION_KINDS: Mapping[str, type] = {
    cls.kind: cls
    for cls in (
        FoundationDepthOverride,
        CutoffUnderCore,
        CutoffUpstreamHeel,
        ConcreteCover,
        ClayBlanket,
        CoreBlanket,
        BlanketDrain,
        ClawDrain,
    )
}

# Placement order when several interventions combine: later entries are
# trimmed by earlier ones wherever they overlap.
_APPLICATION_ORDER = (
    "concrete_cover",
    "clay_blanket",
    "core_blanket",
    "cutoff_under_core",
    "cutoff_upstream_heel",
    "blanket_drain",
    "claw_drain",
)

_INTERVENTION_ZONE_NAMES = {
    "cutoff_under_core": "Cutoff wall under core",
    "cutoff_upstream_heel": "Heel cutoff wall",
    "concrete_cover": "Concrete cover",
    "clay_blanket": "Clay blanket",
    "core_blanket": "Core upstream blanket",
    "blanket_drain": "Blanket drain",
    "claw_drain": "Claw drain",
}


@dataclass(frozen=True)
class Scenario:
    """Operating state plus the set of seepage-control measures to model."""

    name: str
    reservoir_level: float
    tailwater_level: Optional[float] = None
    interventions: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "interventions", tuple(self.interventions))
        kinds = [iv.kind for iv in self.interventions]
        dupes = {k for k in kinds if kinds.count(k) > 1}
        if dupes:
            raise GeometryError(
                f"scenario {self.name!r}: duplicate intervention kinds {sorted(dupes)}"
            )
        if self.tailwater_level is not None and (
            self.tailwater_level > self.reservoir_level
        ):
            raise GeometryError(
                f"scenario {self.name!r}: tailwater above reservoir level"
            )

    def get(self, kind: str):
        for iv in self.interventions:
            if iv.kind == kind:
                return iv
        return None


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------

TABLE_MATERIALS = (
    MaterialProperties("Upstream shell", Permeability.from_value(1e-1, "cm/s"), 20, 35, 30),
    MaterialProperties("Downstream shell", Permeability.from_value(1e-1, "cm/s"), 20, 35, 30),
    MaterialProperties("Core", Permeability.from_value(1e-8, "cm/s"), 20, 30, 50),
    MaterialProperties("Stone Foundation", Permeability.from_value(1e-4, "cm/s"), 21, 35, 0),
    MaterialProperties("Filter", Permeability.from_value(1e-2, "cm/s"), 18, 35, 0),
    MaterialProperties("Drain adjacent to the filter", Permeability.from_value(1.0, "cm/s"), 18, 35, 0),
    MaterialProperties("Bottom waste material", Permeability.from_value(1e-2, "cm/s"), 19, 30, 0),
)


@dataclass(frozen=True)
class SahandParams:
    """Dimensions of the Sahand-type zoned rockfill section (meters)."""

    bed_elevation: float = 1560.0
    dam_height: float = 47.0
    crest_width: float = 10.0
    crest_length: float = 450.0
    domain_length: float = 500.0
    upstream_flat: float = 200.0  # reservoir-bottom run before the heel
    upstream_slope: float = 2.5  # H per V
    downstream_slope: float = 2.0
    core_top_width: float = 6.0
    core_slope: float = 0.25  # H per V, each face
    core_key_depth: float = 12.0  # core penetration below the bed
    filter_width: float = 2.0
    drain_width: float = 2.0
    band_top_offset: float = 5.0  # chimney bands stop this far below crest
    waste_thickness: float = 3.0
    foundation_depth: float = 60.0
    materials: tuple = TABLE_MATERIALS

    def __post_init__(self) -> None:
        positive = (
            "dam_height crest_width crest_length domain_length upstream_flat "
            "upstream_slope downstream_slope core_top_width core_slope "
            "core_key_depth filter_width drain_width band_top_offset "
            "waste_thickness foundation_depth"
        ).split()
        for attr in positive:
            if getattr(self, attr) <= 0:
                raise GeometryError(f"SahandParams.{attr} must be > 0")
        if self.core_key_depth >= self.foundation_depth:
            raise GeometryError("core key must not reach the domain bottom")
        if self.waste_thickness >= self.core_key_depth:
            raise GeometryError("core key must pass through the waste layer")
        if self.band_top_offset >= self.dam_height:
            raise GeometryError("chimney band top offset exceeds dam height")
        object.__setattr__(self, "materials", tuple(self.materials))
        names = [m.name for m in self.materials]
        if len(names) != len(set(names)):
            raise GeometryError("duplicate material names")

    def material(self, name: str) -> MaterialProperties:
        for m in self.materials:
            if m.name == name:
                return m
        raise GeometryError(f"no material named {name!r}")

    @property
    def axis_x(self) -> float:
        """x of the dam axis (mid-crest); instrument offsets hang off it."""
        return self.upstream_flat + self.upstream_slope * self.dam_height + 0.5 * self.crest_width


class _Frame:
    """Derived coordinates of a Sahand section (placement helper)."""

    def __init__(self, p: SahandParams):
        self.p = p
        self.bed = p.bed_elevation
        self.crest = p.bed_elevation + p.dam_height
        self.base = p.bed_elevation - p.foundation_depth
        self.x_heel = p.upstream_flat
        self.x_crest0 = self.x_heel + p.upstream_slope * p.dam_height
        self.x_crest1 = self.x_crest0 + p.crest_width
        self.x_axis = 0.5 * (self.x_crest0 + self.x_crest1)
        self.x_toe = self.x_crest1 + p.downstream_slope * p.dam_height
        self.core_bottom = self.bed - p.core_key_depth
        if self.x_toe >= p.domain_length:
            raise GeometryError(
                f"dam toe at x={self.x_toe:.1f} exceeds domain length "
                f"{p.domain_length:.1f}"
            )

    def face_y(self, x: float) -> float:
        """Upstream face elevation at x (valid heel..crest start)."""
        return self.bed + (x - self.x_heel) / self.p.upstream_slope

    def face_x(self, y: float) -> float:
        return self.x_heel + self.p.upstream_slope * (y - self.bed)

    def core_half_width(self, y: float) -> float:
        return 0.5 * self.p.core_top_width + self.p.core_slope * (self.crest - y)

    def core_face_upstream_x(self, y: float) -> float:
        return self.x_axis - self.core_half_width(y)

    def core_face_downstream_x(self, y: float) -> float:
        return self.x_axis + self.core_half_width(y)


@dataclass(frozen=True)
class DamSection:
    """A complete 2D section: zone partition plus its exterior boundary."""

    name: str
    zones: tuple
    boundaries: tuple
    crest_elevation: float
    bed_elevation: float
    foundation_depth: float
    crest_length: float
    builder_params: Optional[SahandParams] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        if not self.zones:
            raise GeometryError("section needs at least one zone")
        if self.crest_elevation <= self.bed_elevation:
            raise GeometryError("crest must be above the bed")
        if self.foundation_depth < 0:
            raise GeometryError("foundation depth must be >= 0")
        if self.crest_length <= 0:
            raise GeometryError("crest length must be > 0")
        names = [z.name for z in self.zones]
        if len(names) != len(set(names)):
            raise GeometryError(f"duplicate zone names: {sorted(names)}")

    def hull(self) -> Polygon:
        merged = unary_union([z.polygon for z in self.zones])
        if not isinstance(merged, Polygon):
            raise GeometryError("zones do not form a connected region")
        if merged.interiors:
            # boolean ops leave hairline seams where carved pieces rejoin;
            # real holes in the section are an error
            worst = max(Polygon(ring).area for ring in merged.interiors)
            if worst > 1e-6:
                raise GeometryError(
                    f"zones leave an interior hole of {worst:.3e} m^2"
                )
            merged = Polygon(merged.exterior)
        return merged

    def materials(self) -> dict:
        out = {}
        if self.builder_params is not None:
            for m in self.builder_params.materials:
                out[m.name] = m
        for z in self.zones:
            out.setdefault(z.material.name, z.material)
        return out

    def zone(self, name: str) -> Zone:
        for z in self.zones:
            if z.name == name:
                return z
        raise GeometryError(f"no zone named {name!r}")

    def validate(self) -> None:
        """Check the zone partition and boundary coverage invariants."""
        hull = self.hull()
        total = sum(z.area for z in self.zones)
        if abs(total - hull.area) > AREA_RTOL * max(hull.area, 1.0) * 10:
            raise GeometryError(
                f"zone areas sum to {total:.6f} but hull area is {hull.area:.6f}"
            )
        polys = [z.polygon for z in self.zones]
        for i in range(len(polys)):
            for j in range(i + 1, len(polys)):
                inter = polys[i].intersection(polys[j]).area
                if inter > AREA_RTOL * max(1.0, min(polys[i].area, polys[j].area)):
                    raise GeometryError(
                        f"zones {self.zones[i].name!r} and {self.zones[j].name!r} "
                        f"overlap by {inter:.3e} m^2"
                    )
        ring = LineString(hull.exterior.coords)
        cover = 0.0
        for seg in self.boundaries:
            line = seg.polyline()
            cover += line.length
            # every boundary polyline must lie on the hull exterior
            if line.distance(ring) > 1e-6 or not _polyline_on_ring(line, ring):
                raise GeometryError(
                    f"boundary segment {seg.name!r} does not lie on the exterior"
                )
        if abs(cover - ring.length) > 1e-6 * max(ring.length, 1.0):
            raise GeometryError(
                f"boundary segments cover {cover:.6f} m of a "
                f"{ring.length:.6f} m exterior"
            )


def _polyline_on_ring(line: LineString, ring: LineString) -> bool:
    # sample midpoints of each leg; cheap containment proxy
    coords = list(line.coords)
    for a, b in zip(coords[:-1], coords[1:]):
        mid = Point(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
        if ring.distance(mid) > 1e-6:
            return False
    return True


def _single_polygon(geom, what: str) -> Polygon:
    if isinstance(geom, Polygon):
        return geom
    parts = [g for g in getattr(geom, "geoms", []) if isinstance(g, Polygon)]
    parts = [g for g in parts if g.area > 1e-12]
    if len(parts) == 1:
        return parts[0]
    raise GeometryError(f"{what}: expected one polygon, got {len(parts)} pieces")


def build_sahand_section(params: Optional[SahandParams] = None) -> DamSection:
    """Construct the seven-zone Sahand section from its dimensions.

    Zones: upstream/downstream shells, keyed central core, chimney filter
    and drain bands on the core's downstream face, bottom waste layer under
    the downstream shell, and the stone foundation block.
    """
    p = params if params is not None else SahandParams()
    f = _Frame(p)
    mat = p.material

    core = Polygon(
        [
            (f.x_axis - f.core_half_width(f.core_bottom), f.core_bottom),
            (f.x_axis + f.core_half_width(f.core_bottom), f.core_bottom),
            (f.x_axis + 0.5 * p.core_top_width, f.crest),
            (f.x_axis - 0.5 * p.core_top_width, f.crest),
        ]
    )
    dam_body = Polygon(
        [
            (f.x_heel, f.bed),
            (f.x_toe, f.bed),
            (f.x_crest1, f.crest),
            (f.x_crest0, f.crest),
        ]
    )
    band_top = f.crest - p.band_top_offset

    def band(offset0: float, offset1: float) -> Polygon:
        return Polygon(
            [
                (f.core_face_downstream_x(f.bed) + offset0, f.bed),
                (f.core_face_downstream_x(f.bed) + offset1, f.bed),
                (f.core_face_downstream_x(band_top) + offset1, band_top),
                (f.core_face_downstream_x(band_top) + offset0, band_top),
            ]
        )

    filter_band = band(0.0, p.filter_width)
    drain_band = band(p.filter_width, p.filter_width + p.drain_width)
    waste = Polygon(
        [
            (f.core_face_downstream_x(f.bed - p.waste_thickness), f.bed - p.waste_thickness),
            (f.x_toe, f.bed - p.waste_thickness),
            (f.x_toe, f.bed),
            (f.core_face_downstream_x(f.bed), f.bed),
        ]
    )
    foundation_rect = box(0.0, f.base, p.domain_length, f.bed)

    shells = dam_body.difference(core).difference(filter_band).difference(drain_band)
    shell_parts = sorted(
        (g for g in getattr(shells, "geoms", [shells]) if g.area > 1e-9),
        key=lambda g: g.centroid.x,
    )
    if len(shell_parts) != 2:
        raise GeometryError(
            f"dam body minus core/bands gave {len(shell_parts)} pieces, expected 2"
        )
    us_shell, ds_shell = shell_parts
    foundation = _single_polygon(
        foundation_rect.difference(core).difference(waste), "foundation"
    )

    zones = (
        Zone.from_polygon("Upstream shell", mat("Upstream shell"), us_shell),
        Zone.from_polygon("Downstream shell", mat("Downstream shell"), ds_shell),
        Zone.from_polygon("Core", mat("Core"), core),
        Zone.from_polygon("Filter", mat("Filter"), filter_band),
        Zone.from_polygon(
            "Drain adjacent to the filter", mat("Drain adjacent to the filter"), drain_band
        ),
        Zone.from_polygon("Bottom waste material", mat("Bottom waste material"), waste),
        Zone.from_polygon("Stone Foundation", mat("Stone Foundation"), foundation),
    )

    boundaries = (
        BoundarySegment("upstream_ground", ((0.0, f.bed), (f.x_heel, f.bed)), impermeable()),
        BoundarySegment(
            "upstream_face", ((f.x_heel, f.bed), (f.x_crest0, f.crest)), impermeable()
        ),
        BoundarySegment("crest", ((f.x_crest0, f.crest), (f.x_crest1, f.crest)), impermeable()),
        BoundarySegment(
            "downstream_face", ((f.x_crest1, f.crest), (f.x_toe, f.bed)), impermeable()
        ),
        BoundarySegment(
            "downstream_ground", ((f.x_toe, f.bed), (p.domain_length, f.bed)), impermeable()
        ),
        BoundarySegment(
            "right_wall", ((p.domain_length, f.bed), (p.domain_length, f.base)), impermeable()
        ),
        BoundarySegment("base", ((p.domain_length, f.base), (0.0, f.base)), impermeable()),
        BoundarySegment("left_wall", ((0.0, f.base), (0.0, f.bed)), impermeable()),
    )

    section = DamSection(
        name="sahand",
        zones=zones,
        boundaries=boundaries,
        crest_elevation=f.crest,
        bed_elevation=f.bed,
        foundation_depth=p.foundation_depth,
        crest_length=p.crest_length,
        builder_params=p,
    )
    section.validate()
    return section


def build_rectangular_section(
    length: float,
    height: float,
    material: MaterialProperties,
    name: str = "rectangle",
    crest_length: float = 1.0,
) -> DamSection:
    """Homogeneous rectangular section (analytic benchmark geometry)."""
    if length <= 0 or height <= 0:
        raise GeometryError("rectangle length and height must be > 0")
    zone = Zone("Body", material, ((0, 0), (length, 0), (length, height), (0, height)))
    boundaries = (
        BoundarySegment("upstream_face", ((0.0, height), (0.0, 0.0)), impermeable()),
        BoundarySegment("base", ((0.0, 0.0), (length, 0.0)), impermeable()),
        BoundarySegment(
            "downstream_face", ((length, 0.0), (length, height)), impermeable()
        ),
        BoundarySegment("crest", ((length, height), (0.0, height)), impermeable()),
    )
    return DamSection(
        name=name,
        zones=(zone,),
        boundaries=boundaries,
        crest_elevation=height,
        bed_elevation=0.0,
        foundation_depth=0.0,
        crest_length=crest_length,
    )


# ---------------------------------------------------------------------------
# Scenario application
# ---------------------------------------------------------------------------


def _resolve_material(ref: MaterialRef, section: DamSection) -> MaterialProperties:
    if isinstance(ref, MaterialProperties):
        return ref
    table = section.materials()
    if ref not in table:
        raise GeometryError(f"intervention references unknown material {ref!r}")
    return table[ref]


def _ideal_polygon(iv: Intervention, f: _Frame) -> Polygon:
    """Intended footprint of an intervention before trimming."""
    p = f.p
    if isinstance(iv, CutoffUnderCore):
        half = 0.5 * iv.thickness
        top = f.core_bottom
        return box(f.x_axis - half, top - iv.depth, f.x_axis + half, top)
    if isinstance(iv, CutoffUpstreamHeel):
        half = 0.5 * iv.thickness
        x0 = f.x_heel + iv.inset - half
        x1 = f.x_heel + iv.inset + half
        if x1 >= f.x_crest0:
            raise GeometryError("heel wall lies beyond the upstream face")
        # top edge flush with the face so the wall stays inside the shell
        return Polygon(
            [
                (x0, f.bed - iv.depth),
                (x1, f.bed - iv.depth),
                (x1, f.face_y(x1)),
                (x0, f.face_y(x0)),
            ]
        )
    if isinstance(iv, ConcreteCover):
        sin_face = 1.0 / math.hypot(1.0, p.upstream_slope)
        dx = iv.thickness / sin_face  # horizontal shift giving normal thickness
        return Polygon(
            [
                (f.x_heel, f.bed),
                (f.x_heel + dx, f.bed),
                (f.x_crest0 + dx, f.crest),
                (f.x_crest0, f.crest),
            ]
        )
    if isinstance(iv, ClayBlanket):
        if iv.length > f.x_heel:
            raise GeometryError(
                f"clay blanket length {iv.length} exceeds the upstream run "
                f"{f.x_heel} before the heel"
            )
        return box(f.x_heel - iv.length, f.bed - iv.thickness, f.x_heel, f.bed)
    if isinstance(iv, CoreBlanket):
        return _core_blanket_polygon(iv, f)
    if isinstance(iv, BlanketDrain):
        if iv.depth >= p.dam_height:
            raise GeometryError("blanket drain thicker than the dam")
        y1 = f.bed + iv.depth
        # upstream edge butts flush against the chimney band, downstream edge
        # follows the sloping face, so the layer stays inside the shell with
        # no pinched sliver against either line
        x0_bed = f.core_face_downstream_x(f.bed) + p.filter_width + p.drain_width
        x0_top = f.core_face_downstream_x(y1) + p.filter_width + p.drain_width
        x_face = f.x_crest1 + p.downstream_slope * (f.crest - y1)
        return Polygon(
            [(x0_bed, f.bed), (f.x_toe, f.bed), (x_face, y1), (x0_top, y1)]
        )
    if isinstance(iv, ClawDrain):
        d = iv.depth
        apex_x = f.x_toe - p.downstream_slope * d
        inner_x = apex_x - d  # 1H:1V inner slope back to the bed
        x_bands = f.core_face_downstream_x(f.bed) + p.filter_width + p.drain_width
        if inner_x <= x_bands:
            raise GeometryError("claw drain reaches back into the chimney bands")
        return Polygon([(inner_x, f.bed), (f.x_toe, f.bed), (apex_x, f.bed + d)])
    raise GeometryError(f"cannot place intervention kind {iv.kind!r}")


def _core_blanket_polygon(iv: CoreBlanket, f: _Frame) -> Polygon:
    p = f.p
    # band between two lines parallel to the upstream face, `burial` and
    # `burial + thickness` below it, clipped by the bed and the core
    y_top_at = lambda x: f.face_y(x) - iv.burial
    x_tip_top = f.face_x(f.bed + iv.burial)  # where the band top meets the bed
    x_tip_bot = f.face_x(f.bed + iv.burial + iv.thickness)
    x_far = f.x_axis  # safely inside the core at these elevations
    band = Polygon(
        [
            (x_tip_top, f.bed),
            (x_tip_bot, f.bed),
            (x_far, y_top_at(x_far) - iv.thickness),
            (x_far, y_top_at(x_far)),
        ]
    )
    core = Polygon(
        [
            (f.x_axis - f.core_half_width(f.core_bottom), f.core_bottom),
            (f.x_axis + f.core_half_width(f.core_bottom), f.core_bottom),
            (f.x_axis + 0.5 * p.core_top_width, f.crest),
            (f.x_axis - 0.5 * p.core_top_width, f.crest),
        ]
    )
    arm = band.difference(core)
    if iv.length is not None:
        # truncate: keep the down-slope part nearest the core
        top_at_core = arm.bounds[2]  # max x of the trimmed band
        x_stop = top_at_core - iv.length
        arm = arm.intersection(box(x_stop, f.base, f.x_axis + 1.0, f.crest))
    return _single_polygon(arm, "core blanket")


def apply_scenario(section: DamSection, scenario: Scenario) -> DamSection:
    """Return a new section with the scenario's interventions carved in.

    The input section is never mutated. Interventions are placed in a fixed
    order; each is trimmed by the ones already placed, and the combination is
    rejected as conflicting when almost nothing of an intervention survives.
    """
    override = scenario.get("foundation_depth_override")
    if override is not None:
        if section.builder_params is None:
            raise GeometryError(
                "foundation_depth_override requires a parameterized section"
            )
        section = build_sahand_section(
            replace(section.builder_params, foundation_depth=override.depth)
        )
    _check_levels(section, scenario)
    rest = [iv for iv in scenario.interventions if iv.kind != "foundation_depth_override"]
    if not rest:
        return section
    if section.builder_params is None:
        raise GeometryError("interventions require a parameterized section")
    f = _Frame(section.builder_params)
    hull = section.hull()
    order = {k: i for i, k in enumerate(_APPLICATION_ORDER)}
    try:
        rest.sort(key=lambda iv: order[iv.kind])
    except KeyError as exc:
        raise GeometryError(f"unplaceable intervention kind {exc}") from None

    placed = []  # (zone name, material, polygon)
    carve_union = None
    for iv in rest:
        ideal = _ideal_polygon(iv, f)
        if not ideal.within(hull.buffer(1e-6)):
            raise GeometryError(
                f"intervention {iv.kind!r} extends outside the section"
            )
        remaining = ideal if carve_union is None else ideal.difference(carve_union)
        parts = [
            g
            for g in getattr(remaining, "geoms", [remaining])
            if isinstance(g, Polygon) and g.area > 1e-6 * ideal.area
        ]
        kept = sum(g.area for g in parts)
        if kept < MIN_SURVIVING_FRACTION * ideal.area:
            raise GeometryError(
                f"intervention {iv.kind!r} conflicts with earlier interventions: "
                f"only {kept:.2f} of {ideal.area:.2f} m^2 would remain"
            )
        material = _resolve_material(iv.material, section)
        base_name = _INTERVENTION_ZONE_NAMES[iv.kind]
        for i, part in enumerate(sorted(parts, key=lambda g: (g.centroid.y, g.centroid.x))):
            name = base_name if len(parts) == 1 else f"{base_name} ({i + 1})"
            placed.append((name, material, part))
        carve_union = unary_union(
            [ideal] if carve_union is None else [carve_union, ideal]
        )

    new_zones = []
    for z in section.zones:
        cut = z.polygon.difference(carve_union)
        parts = [
            g
            for g in getattr(cut, "geoms", [cut])
            if isinstance(g, Polygon) and g.area > 1e-9 * max(z.area, 1.0)
        ]
        if not parts:
            continue  # zone fully replaced
        for i, part in enumerate(sorted(parts, key=lambda g: (g.centroid.x, g.centroid.y))):
            name = z.name if len(parts) == 1 else f"{z.name} ({i + 1})"
            new_zones.append(Zone.from_polygon(name, z.material, part))
    for name, material, poly in placed:
        new_zones.append(Zone.from_polygon(name, material, poly))

    result = replace(section, zones=tuple(new_zones))
    result.validate()
    return result


def _check_levels(section: DamSection, scenario: Scenario) -> None:
    base = section.bed_elevation - section.foundation_depth
    if scenario.reservoir_level > section.crest_elevation:
        raise GeometryError(
            f"reservoir level {scenario.reservoir_level} exceeds crest "
            f"{section.crest_elevation}"
        )
    if scenario.reservoir_level < base:
        raise GeometryError(
            f"reservoir level {scenario.reservoir_level} below domain bottom {base}"
        )
    tw = scenario.tailwater_level
    if tw is not None and tw < base:
        raise GeometryError(f"tailwater level {tw} below domain bottom {base}")


# ---------------------------------------------------------------------------
# Boundary conditions
# ---------------------------------------------------------------------------


def _split_at_level(points: tuple, level: float):
    """Split a polyline into (at/below level, above level) runs."""
    runs = []  # (is_below, [points])
    pts = list(points)
    eps = 1e-12

    def side(y):
        return y <= level + eps

    cur = [pts[0]]
    cur_side = side(pts[0][1])
    for a, b in zip(pts[:-1], pts[1:]):
        sb = side(b[1])
        if sb == cur_side:
            cur.append(b)
            continue
        # crossing: interpolate the waterline point
        t = (level - a[1]) / (b[1] - a[1])
        xc = (a[0] + t * (b[0] - a[0]), level)
        if not _close(cur[-1], xc):
            cur.append(xc)
        runs.append((cur_side, cur))
        cur = [xc]
        if not _close(xc, b):
            cur.append(b)
        cur_side = sb
    runs.append((cur_side, cur))
    return [(s, r) for s, r in runs if len(r) >= 2]


def boundary_conditions_for(section: DamSection, scenario: Scenario) -> tuple:
    """Hydraulic boundary segmentation for a scenario.

    Splits the structural exterior at the reservoir and tailwater lines and
    assigns: fixed head on submerged upstream surfaces, fixed tailwater head
    on strictly submerged downstream surfaces, potential seepage face on dry
    downstream surfaces (including ground at exactly tailwater elevation),
    impermeable everywhere else.
    """
    _check_levels(section, scenario)
    res = scenario.reservoir_level
    tw = (
        scenario.tailwater_level
        if scenario.tailwater_level is not None
        else section.bed_elevation
    )
    if tw > res:
        raise GeometryError("tailwater above reservoir level")

    out = []
    for seg in section.boundaries:
        if seg.name.startswith("upstream"):
            for below, pts in _split_at_level(seg.points, res):
                cond = fixed_head(res) if below else impermeable()
                suffix = "_wet" if below else "_dry"
                name = seg.name + (suffix if len(_split_at_level(seg.points, res)) > 1 else "")
                out.append(BoundarySegment(name, tuple(pts), cond))
        elif seg.name.startswith("downstream"):
            for below, pts in _split_at_level(seg.points, tw):
                # only genuinely submerged runs carry the tailwater head; a
                # run lying exactly at the waterline (dry ground at tailwater
                # elevation) is an exit surface, and pinning it would inject
                # water wherever the table sits below ground
                submerged = below and min(y for _, y in pts) < tw - 1e-9
                cond = fixed_head(tw) if submerged else seepage_face()
                suffix = "_wet" if submerged else "_dry"
                name = seg.name + (suffix if len(_split_at_level(seg.points, tw)) > 1 else "")
                out.append(BoundarySegment(name, tuple(pts), cond))
        else:
            out.append(BoundarySegment(seg.name, seg.points, impermeable()))
    return tuple(out)

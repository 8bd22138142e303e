"""Section construction, units, scenario transforms, boundary conditions."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from damseep import geometry as geo
from damseep.errors import GeometryError

ZONE_NAMES = {
    "Upstream shell",
    "Downstream shell",
    "Core",
    "Filter",
    "Drain adjacent to the filter",
    "Bottom waste material",
    "Stone Foundation",
}


# ---------------------------------------------------------------- units ----


def test_permeability_cm_per_s_converts():
    k = geo.Permeability.from_value(1e-1, "cm/s")
    assert k.m_per_s == pytest.approx(1e-3, rel=1e-15)


def test_permeability_string_round_trip():
    k = geo.Permeability.parse("1e-1 cm/s")
    assert k.m_per_s == pytest.approx(1e-3, rel=1e-15)
    assert k.display() == "1e-1 cm/s"


def test_permeability_rejects_unknown_unit():
    with pytest.raises(GeometryError):
        geo.Permeability.from_value(1.0, "ft/day")


def test_permeability_bounds():
    with pytest.raises(GeometryError):
        geo.Permeability.from_value(0.0, "m/s")
    with pytest.raises(GeometryError):
        geo.Permeability.from_value(2.0, "m/s")


@given(
    value=st.floats(min_value=1e-12, max_value=1.0, allow_nan=False),
    unit=st.sampled_from(["m/s", "cm/s"]),
)
def test_permeability_value_round_trip(value, unit):
    k = geo.Permeability.from_value(value, unit)
    assert k.value_in_input_unit() == pytest.approx(value, rel=1e-12)
    again = geo.Permeability.parse(k.display())
    assert again.m_per_s == pytest.approx(k.m_per_s, rel=1e-6)


def test_material_metadata_validated():
    with pytest.raises(GeometryError):
        geo.MaterialProperties("x", geo.Permeability.from_value(1e-3), gamma=-1)


# ------------------------------------------------------------- building ----


def test_sahand_has_exactly_seven_zones(sahand_section):
    assert len(sahand_section.zones) == 7
    assert {z.name for z in sahand_section.zones} == ZONE_NAMES


def test_sahand_material_permeabilities(sahand_section):
    k = {z.name: z.material.k_sat for z in sahand_section.zones}
    # table values entered in cm/s, stored in m/s
    assert k["Upstream shell"] == pytest.approx(1e-3)
    assert k["Downstream shell"] == pytest.approx(1e-3)
    assert k["Core"] == pytest.approx(1e-10)
    assert k["Stone Foundation"] == pytest.approx(1e-6)
    assert k["Filter"] == pytest.approx(1e-4)
    assert k["Drain adjacent to the filter"] == pytest.approx(1e-2)
    assert k["Bottom waste material"] == pytest.approx(1e-4)


def test_sahand_zone_partition(sahand_section):
    sahand_section.validate()
    hull = sahand_section.hull()
    total = sum(z.area for z in sahand_section.zones)
    assert total == pytest.approx(hull.area, rel=1e-12)
    # hull = 500x60 foundation block + dam trapezoid ((221.5+10)/2 * 47)
    assert hull.area == pytest.approx(30000.0 + 5440.25, rel=1e-12)


def test_sahand_core_dimensions(sahand_section):
    core = sahand_section.zone("Core")
    ys = [y for _, y in core.vertices]
    # keyed 12 m below the bed, 59 m tall in total
    assert min(ys) == pytest.approx(1548.0)
    assert max(ys) == pytest.approx(1607.0)
    assert core.area == pytest.approx((6.0 + 35.5) / 2.0 * 59.0)


def test_sahand_boundary_coverage(sahand_section):
    names = [b.name for b in sahand_section.boundaries]
    assert names == [
        "upstream_ground",
        "upstream_face",
        "crest",
        "downstream_face",
        "downstream_ground",
        "right_wall",
        "base",
        "left_wall",
    ]
    hull_len = sahand_section.hull().exterior.length
    assert sum(b.length for b in sahand_section.boundaries) == pytest.approx(hull_len)


def test_sahand_rejects_zero_foundation_depth():
    with pytest.raises(GeometryError):
        geo.build_sahand_section(geo.SahandParams(foundation_depth=0.0))


def test_rectangular_section(rect_section):
    rect_section.validate()
    assert len(rect_section.zones) == 1
    assert rect_section.hull().area == pytest.approx(200.0)


# ------------------------------------------------------------ scenarios ----


def test_empty_scenario_is_identity(sahand_section):
    out = geo.apply_scenario(sahand_section, geo.Scenario("nop", 1600.3))
    assert out == sahand_section


def test_cutoff_under_core_area(sahand_section, baseline_drains):
    sc = geo.Scenario(
        "w", 1600.3, interventions=baseline_drains + (geo.CutoffUnderCore(depth=30.0),)
    )
    out = geo.apply_scenario(sahand_section, sc)
    out.validate()
    wall = out.zone("Cutoff wall under core")
    assert wall.area == pytest.approx(60.0, abs=1e-9)
    ys = [y for _, y in wall.vertices]
    assert min(ys) == pytest.approx(1518.0)  # hangs from the core key bottom
    assert max(ys) == pytest.approx(1548.0)


def test_clay_blanket_area(sahand_section):
    sc = geo.Scenario("b", 1600.3, interventions=(geo.ClayBlanket(),))
    out = geo.apply_scenario(sahand_section, sc)
    out.validate()
    blanket = out.zone("Clay blanket")
    assert blanket.area == pytest.approx(200.0, abs=1e-9)
    xs = [x for x, _ in blanket.vertices]
    assert min(xs) == pytest.approx(0.0)  # runs 200 m upstream of the heel
    assert max(xs) == pytest.approx(200.0)


def test_concrete_cover_thickness(sahand_section):
    sc = geo.Scenario("c", 1600.3, interventions=(geo.ConcreteCover(thickness=0.5),))
    out = geo.apply_scenario(sahand_section, sc)
    out.validate()
    cover = out.zone("Concrete cover")
    face_len = math.hypot(2.5, 1.0) * 47.0
    assert cover.area == pytest.approx(0.5 * face_len, rel=1e-9)


def test_heel_wall_hugs_heel(sahand_section):
    sc = geo.Scenario("h", 1600.3, interventions=(geo.CutoffUpstreamHeel(depth=30.0),))
    out = geo.apply_scenario(sahand_section, sc)
    out.validate()
    # default inset puts the upstream wall face flush with the heel, so the
    # shell keeps a single piece and the wall top carries the thin face wedge
    shells = [z for z in out.zones if z.name.startswith("Upstream shell")]
    assert len(shells) == 1
    wall = out.zone("Heel cutoff wall")
    # 2 m wide, 30 m into the foundation, plus the 0.8 m face wedge
    assert wall.area == pytest.approx(60.8, rel=1e-9)


def test_heel_wall_inset_splits_shell(sahand_section):
    iv = geo.CutoffUpstreamHeel(depth=30.0, inset=20.0)
    sc = geo.Scenario("h", 1600.3, interventions=(iv,))
    out = geo.apply_scenario(sahand_section, sc)
    out.validate()
    shells = [z for z in out.zones if z.name.startswith("Upstream shell")]
    assert len(shells) == 2
    wall = out.zone("Heel cutoff wall")
    # 2 m wide, from the face (~1567.6..1568.4) down to bed-30
    assert wall.area == pytest.approx(76.0, rel=1e-9)


def test_scenario_application_is_pure(sahand_section, baseline_drains):
    before = sahand_section.zones
    sc = geo.Scenario("w", 1600.3, interventions=baseline_drains)
    geo.apply_scenario(sahand_section, sc)
    assert sahand_section.zones == before


def test_foundation_depth_override(sahand_section, baseline_drains):
    for depth in (30.0, 90.0, 120.0):
        sc = geo.Scenario(
            "d",
            1600.3,
            interventions=baseline_drains + (geo.FoundationDepthOverride(depth),),
        )
        out = geo.apply_scenario(sahand_section, sc)
        out.validate()
        assert out.foundation_depth == depth
        assert out.hull().bounds[1] == pytest.approx(1560.0 - depth)


def test_composite_scenario(sahand_section, baseline_drains):
    sc = geo.Scenario(
        "composite",
        1600.3,
        interventions=(
            geo.FoundationDepthOverride(90.0),
            geo.ConcreteCover(),
            geo.ClayBlanket(),
            geo.CoreBlanket(),
            geo.CutoffUpstreamHeel(depth=30.0, inset=20.0),
        )
        + baseline_drains,
    )
    out = geo.apply_scenario(sahand_section, sc)
    out.validate()
    names = {z.name for z in out.zones}
    assert "Concrete cover" in names
    assert "Clay blanket" in names
    assert "Core upstream blanket" in names
    # the heel wall crosses the inclined core blanket and is split by it
    assert {"Heel cutoff wall (1)", "Heel cutoff wall (2)"} <= names
    # determinism of the whole transform
    assert geo.apply_scenario(sahand_section, sc) == out


def test_duplicate_intervention_kind_rejected():
    with pytest.raises(GeometryError):
        geo.Scenario("x", 1600.3, interventions=(geo.ClawDrain(), geo.ClawDrain(5.0)))


def test_intervention_outside_domain_rejected(sahand_section):
    sc = geo.Scenario("x", 1600.3, interventions=(geo.CutoffUnderCore(depth=100.0),))
    with pytest.raises(GeometryError):
        geo.apply_scenario(sahand_section, sc)


def test_blanket_longer_than_reservoir_run_rejected(sahand_section):
    sc = geo.Scenario("x", 1600.3, interventions=(geo.ClayBlanket(length=300.0),))
    with pytest.raises(GeometryError):
        geo.apply_scenario(sahand_section, sc)


def test_reservoir_above_crest_rejected(sahand_section):
    with pytest.raises(GeometryError):
        geo.apply_scenario(sahand_section, geo.Scenario("x", 1610.0))


def test_reservoir_below_domain_bottom_rejected(sahand_section):
    with pytest.raises(GeometryError):
        geo.boundary_conditions_for(sahand_section, geo.Scenario("x", 1400.0))


# --------------------------------------------------- boundary conditions ----


def test_boundary_conditions_sahand(sahand_section, baseline_scenario):
    bcs = geo.boundary_conditions_for(sahand_section, baseline_scenario)
    by_name = {b.name: b for b in bcs}
    assert by_name["upstream_ground"].condition == geo.fixed_head(1600.3)
    assert by_name["upstream_face_wet"].condition == geo.fixed_head(1600.3)
    assert by_name["upstream_face_dry"].condition == geo.impermeable()
    assert by_name["crest"].condition == geo.impermeable()
    assert by_name["downstream_face"].condition == geo.seepage_face()
    # dry ground at tailwater elevation is an exit surface, not a fixed head
    assert by_name["downstream_ground"].condition == geo.seepage_face()
    for wall in ("left_wall", "right_wall", "base"):
        assert by_name[wall].condition == geo.impermeable()
    # the waterline split point is exactly on the reservoir level
    wet = by_name["upstream_face_wet"].points
    assert max(y for _, y in wet) == pytest.approx(1600.3)
    # coverage: the split pieces still tile the full exterior
    hull_len = sahand_section.hull().exterior.length
    assert sum(b.length for b in bcs) == pytest.approx(hull_len)


def test_boundary_conditions_rectangle(rect_section):
    sc = geo.Scenario("dupuit", 10.0, tailwater_level=2.0)
    bcs = geo.boundary_conditions_for(rect_section, sc)
    by_name = {b.name: b for b in bcs}
    assert by_name["upstream_face"].condition == geo.fixed_head(10.0)
    assert by_name["downstream_face_wet"].condition == geo.fixed_head(2.0)
    assert by_name["downstream_face_dry"].condition == geo.seepage_face()
    assert by_name["base"].condition == geo.impermeable()


def test_tailwater_above_reservoir_rejected():
    with pytest.raises(GeometryError):
        geo.Scenario("x", 5.0, tailwater_level=6.0)


@given(st.floats(min_value=1561.0, max_value=1606.9))
def test_waterline_always_splits_upstream_face(level):
    section = geo.build_sahand_section()
    bcs = geo.boundary_conditions_for(section, geo.Scenario("s", level))
    wet = [b for b in bcs if b.name == "upstream_face_wet"]
    dry = [b for b in bcs if b.name == "upstream_face_dry"]
    assert len(wet) == 1 and len(dry) == 1
    assert wet[0].length + dry[0].length == pytest.approx(
        math.hypot(2.5, 1.0) * 47.0, rel=1e-9
    )

"""Shared fixtures: sections and scenarios used across the test suite."""

import pytest

from damseep import geometry as geo


@pytest.fixture(scope="session")
def sahand_section():
    return geo.build_sahand_section()


@pytest.fixture(scope="session")
def baseline_drains():
    return (geo.BlanketDrain(), geo.ClawDrain())


@pytest.fixture(scope="session")
def baseline_scenario(baseline_drains):
    return geo.Scenario("baseline", 1600.3, interventions=baseline_drains)


@pytest.fixture(scope="session")
def rect_material():
    return geo.MaterialProperties("Sand", geo.Permeability.from_value(1e-4, "m/s"))


@pytest.fixture(scope="session")
def rect_section(rect_material):
    # the unconfined-rectangle benchmark geometry: L=20, H=10
    return geo.build_rectangular_section(20.0, 10.0, rect_material)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criterion verdicts after the run (they are printed
    inside captured test output and would otherwise be invisible on pass)."""
    results = getattr(config, "_acceptance_criteria", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        label, ok = results[n]
        terminalreporter.write_line(
            f"criterion {n} ({label}): {'PASS' if ok else 'FAIL'}"
        )

from pathlib import Path

import numpy as np
import pytest

from elastoscatter.models.errors import (
    CoincidentPointsError,
    ErrorCode,
    InvariantViolationError,
    ParameterDomainError,
    ScenarioParseError,
)
from elastoscatter.models.scenario import GridSection, Scenario
from elastoscatter.services.grid_service import grid_service
from elastoscatter.services.scenario_service import scenario_service

REFLECT = """
# 垂直入射 P 波
medium.lambda = 2
medium.mu = 1
medium.omega = 2
incidence.type = plane
incidence.c_p = 1+0.5i
grid.extents = 1, 1, 0.5
grid.resolution = 3, 3, 2
outputs.quantities = displacement, traction
"""


def test_parse_text_nests_dotted_keys():
    tree = scenario_service.parse_text("a.b = 1  # comment\n\n# only a comment\na.c = x, y\nseed = 4\n")
    assert tree == {"a": {"b": "1", "c": ["x", "y"]}, "seed": "4"}


@pytest.mark.parametrize("text, fragment", [
    ("medium.mu 1", "expected 'key = value'"),
    ("medium.mu = 1\nmedium.mu = 2", "duplicate key"),
    ("medium.mu =", "empty value"),
    ("grid.extents = 1, , 0", "empty list item"),
    ("1medium = 2", "invalid key"),
    ("medium = 1\nmedium.mu = 2", "both a value and a section"),
    ("medium.mu = 1\nmedium = 2", "already a section"),
])
def test_parse_text_rejects_malformed_lines(text, fragment):
    with pytest.raises(ScenarioParseError) as exc:
        scenario_service.parse_text(text)
    assert fragment in exc.value.message


def test_parse_builds_scenario():
    scenario = scenario_service.parse(REFLECT)
    assert scenario.medium.lam == 2.0
    assert scenario.outputs.quantities == ["displacement", "traction"]
    assert scenario.grid.resolution == [3, 3, 2]
    assert scenario_service.plane_spec(scenario).c_p == 1 + 0.5j
    assert scenario.echo()["medium"]["lambda"] == 2.0


@pytest.mark.parametrize("text", [
    "medium.rho = 3",
    "outputs.quantities = displacement, velocity",
    "grid.resolution = 2, 2",
    "validate.groups = optics",
])
def test_schema_errors_are_parse_errors(text):
    with pytest.raises(ScenarioParseError) as exc:
        scenario_service.parse(text)
    assert exc.value.details["errors"]


def test_load_missing_file(tmp_path):
    with pytest.raises(ScenarioParseError):
        scenario_service.load(tmp_path / "missing.scn")


def test_tolerance_override_sets_both_tolerances():
    scenario = scenario_service.apply_overrides(scenario_service.parse(REFLECT), seed=9, tolerance=1e-6)
    assert scenario.seed == 9
    assert scenario_service.quadrature_config(scenario).tolerance == 1e-6
    assert scenario.quadrature.beam_tolerance == 1e-6


@pytest.mark.parametrize("tolerance", [0.0, -1.0, float("nan")])
def test_tolerance_override_must_be_positive(tolerance):
    with pytest.raises(ScenarioParseError):
        scenario_service.apply_overrides(scenario_service.parse(REFLECT), tolerance=tolerance)


def test_grid_points_order_x1_fastest():
    grid = GridSection(origin=[0.0, 0.0, 1.0], extents=[1.0, 2.0, 0.0], resolution=[2, 3, 1])
    points = grid_service.points(grid)
    assert points.shape == (6, 3)
    np.testing.assert_allclose(points[:3, 0], [0.0, 1.0, 0.0])
    np.testing.assert_allclose(points[:, 1], [0.0, 0.0, 1.0, 1.0, 2.0, 2.0])
    assert np.all(points[:, 2] == 1.0)


@pytest.mark.parametrize("extents, resolution", [
    ([1.0, 1.0, 0.0], [1, 4, 1]),
    ([0.0, 1.0, 0.0], [2, 4, 1]),
    ([-1.0, 1.0, 0.0], [4, 4, 1]),
])
def test_invalid_grid(extents, resolution):
    with pytest.raises(InvariantViolationError):
        grid_service.points(GridSection(extents=extents, resolution=resolution))


def test_map_chunks_keeps_order():
    points = np.arange(3000, dtype=float).reshape(-1, 3)
    values = grid_service.map_chunks(lambda chunk: chunk * 1j, points, threads=4, chunk_size=7)
    np.testing.assert_array_equal(values, points * 1j)


def test_unsupported_output_code(medium):
    scenario = scenario_service.parse("outputs.quantities = residual\n")
    with pytest.raises(ScenarioParseError) as exc:
        scenario_service.check_invariants("propagate", scenario, medium)
    assert exc.value.code == ErrorCode.UNSUPPORTED_OUTPUT


def test_wrong_incidence_type(medium):
    scenario = scenario_service.parse("incidence.type = plane\n")
    with pytest.raises(ScenarioParseError):
        scenario_service.check_invariants("greens", scenario, medium)


def test_negative_shear_modulus_is_domain_error():
    with pytest.raises(ParameterDomainError):
        scenario_service.build_medium(scenario_service.parse("medium.mu = -1\n"))


def test_reflect_grid_below_surface(medium):
    scenario = scenario_service.parse("grid.origin = 0, 0, -0.5\n")
    with pytest.raises(InvariantViolationError):
        scenario_service.check_invariants("reflect", scenario, medium)


def test_plane_wave_at_grazing_angle_is_invariant_error():
    with pytest.raises(InvariantViolationError):
        scenario_service.plane_spec(scenario_service.parse("incidence.theta = 1.5707963267948966\n"))


def test_propagate_heights_must_be_non_negative(medium):
    scenario = scenario_service.parse("trace.heights = 0.5, -0.1\n")
    with pytest.raises(InvariantViolationError):
        scenario_service.check_invariants("propagate", scenario, medium)


def test_beam_needs_sigma(medium):
    scenario = scenario_service.parse("incidence.type = beam\n")
    with pytest.raises(ScenarioParseError):
        scenario_service.check_invariants("beam", scenario, medium)


def test_beam_support_outside_branch_circle(medium):
    text = "incidence.type = beam\nincidence.sigma = 0.1\nincidence.support_radius = 1.5\n"
    with pytest.raises(ParameterDomainError):
        scenario_service.check_invariants("beam", scenario_service.parse(text), medium)


def test_beam_defaults(medium):
    text = "incidence.type = beam\nincidence.kind = S\nincidence.sigma = 0.1\n"
    spec = scenario_service.beam_spec(scenario_service.parse(text))
    assert spec.support_radius == pytest.approx(0.4)


GREENS = """
incidence.type = point_source
incidence.position = 0.5, 0.5, 1
grid.origin = 0, 0, 1
grid.extents = 1, 1, 0
grid.resolution = 3, 3, 1
"""


def test_greens_grid_containing_source(medium):
    with pytest.raises(CoincidentPointsError):
        scenario_service.check_invariants("greens", scenario_service.parse(GREENS), medium)


def test_greens_residual_needs_clearance(medium):
    text = GREENS.replace("grid.origin = 0, 0, 1", "grid.origin = 0, 0, 0.01") + "outputs.quantities = residual\n"
    with pytest.raises(InvariantViolationError):
        scenario_service.check_invariants("greens", scenario_service.parse(text), medium)


def test_point_source_above_surface(medium):
    text = GREENS.replace("incidence.position = 0.5, 0.5, 1", "incidence.position = 0.5, 0.5, 0")
    with pytest.raises(InvariantViolationError):
        scenario_service.point_source(scenario_service.parse(text))


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "scenarios").glob("*.scn")), ids=lambda p: p.stem)
def test_bundled_scenarios_pass_invariants(path):
    scenario = scenario_service.load(path)
    subcommand = path.stem.split("_")[0]
    scenario_service.check_invariants(subcommand, scenario, scenario_service.build_medium(scenario))


def test_validate_ignores_outputs(medium):
    # 既定の outputs.quantities = displacement でも validate は通る
    scenario_service.check_invariants("validate", Scenario(), medium)
    scenario_service.check_invariants("validate", scenario_service.parse("outputs.quantities = traction\n"), medium)

import json

import numpy as np
import pytest

from elastoscatter.main import main
from elastoscatter.models.validation import CheckResult
from elastoscatter.services.field_io_service import RECORD_COLUMNS, field_io_service
from elastoscatter.services.validation_service import validation_service

NORMAL_P = """
medium.lambda = 2
medium.mu = 1
medium.omega = 2
incidence.type = plane
incidence.theta = 0
incidence.c_p = 1
grid.origin = 0, 0, 0
grid.extents = 1, 1, 0.5
grid.resolution = 3, 3, 2
outputs.quantities = displacement, traction
"""


def _scenario(tmp_path, text: str, name: str = "run.scn"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _stderr_error(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def test_reflect_normal_p_text_output(tmp_path):
    out = tmp_path / "out"
    code = main(["reflect", "--scenario", _scenario(tmp_path, NORMAL_P), "--out", str(out), "--format", "text"])
    assert code == 0

    points, values = field_io_service.read_field(out / "displacement.txt")
    assert points.shape == (18, 3)
    on_surface = points[:, 2] == 0.0
    assert np.max(np.abs(values[on_surface])) <= 1e-12

    # 全場は e₃ 方向のみ、|u₃| = 2|sin(κ_p x₃)|
    above = ~on_surface
    np.testing.assert_allclose(values[above, :2], 0.0, atol=1e-14)
    np.testing.assert_allclose(np.abs(values[above, 2]), 2.0 * np.sin(0.5), rtol=1e-12)

    metadata = json.loads((out / "metadata.json").read_text())
    assert metadata["exit_code"] == 0
    assert metadata["files"] == ["displacement.txt", "traction.txt"]
    assert metadata["record_layout"]["columns"] == RECORD_COLUMNS
    assert metadata["scenario"]["incidence"]["c_p"] == "1"
    assert "memory_rss_mb" in metadata


def test_binary_output_is_independent_of_thread_count(tmp_path):
    text = NORMAL_P.replace("3, 3, 2", "20, 20, 2").replace("incidence.theta = 0", "incidence.theta = 0.6\nincidence.c_s1 = 0.5i")
    scenario = _scenario(tmp_path, text)
    assert main(["reflect", "--scenario", scenario, "--out", str(tmp_path / "one"), "--threads", "1"]) == 0
    assert main(["reflect", "--scenario", scenario, "--out", str(tmp_path / "four"), "--threads", "4"]) == 0
    for name in ("displacement.bin", "traction.bin"):
        first = (tmp_path / "one" / name).read_bytes()
        assert first == (tmp_path / "four" / name).read_bytes()
        assert len(first) == 800 * len(RECORD_COLUMNS) * 8


def test_invalid_medium_exits_before_output(tmp_path, capsys):
    out = tmp_path / "out"
    scenario = _scenario(tmp_path, NORMAL_P.replace("medium.mu = 1", "medium.mu = -1"))
    assert main(["reflect", "--scenario", scenario, "--out", str(out)]) == 3
    assert not out.exists()
    assert _stderr_error(capsys)["error"]["code"] == "PARAMETER_DOMAIN"


def test_malformed_scenario_exits_2(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["reflect", "--scenario", _scenario(tmp_path, "medium.mu 1\n"), "--out", str(out)]) == 2
    assert not out.exists()
    assert _stderr_error(capsys)["error"]["code"] == "SCENARIO_PARSE"


def test_unsupported_output_exits_2(tmp_path, capsys):
    scenario = _scenario(tmp_path, "outputs.quantities = residual\ntrace.n = 8\n")
    assert main(["propagate", "--scenario", scenario, "--out", str(tmp_path / "out")]) == 2
    assert _stderr_error(capsys)["error"]["code"] == "UNSUPPORTED_OUTPUT"


def test_missing_required_argument_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["reflect", "--out", str(tmp_path / "out")])
    assert exc.value.code == 2


def test_threads_must_be_positive(tmp_path):
    scenario = _scenario(tmp_path, NORMAL_P)
    assert main(["reflect", "--scenario", scenario, "--out", str(tmp_path / "out"), "--threads", "0"]) == 2


def test_greens_too_close_to_surface_exits_4(tmp_path, capsys):
    text = """
incidence.type = point_source
incidence.position = 0.3, 0, 1e-5
grid.origin = 0, 0, 1e-5
grid.extents = 0, 0, 0
grid.resolution = 1, 1, 1
"""
    out = tmp_path / "out"
    assert main(["greens", "--scenario", _scenario(tmp_path, text), "--out", str(out)]) == 4
    assert _stderr_error(capsys)["error"]["code"] == "SLOW_CONVERGENCE"


def test_propagate_writes_levels(tmp_path):
    text = "trace.n = 8\ntrace.heights = 0, 0.5\noutputs.quantities = displacement, traction\n"
    out = tmp_path / "out"
    assert main(["propagate", "--scenario", _scenario(tmp_path, text), "--out", str(out), "--seed", "5"]) == 0

    points, values = field_io_service.read_field(out / "displacement.bin")
    assert points.shape == (128, 3)
    np.testing.assert_array_equal(np.unique(points[:, 2]), [0.0, 0.5])
    # x₁ が最も速く変化
    assert points[1, 0] > points[0, 0]
    assert points[1, 1] == points[0, 1]
    metadata = json.loads((out / "metadata.json").read_text())
    assert metadata["seed"] == 5
    assert metadata["trace"]["levels"] == [0.0, 0.5]


def test_validate_selected_groups(tmp_path):
    out = tmp_path / "out"
    scenario = _scenario(tmp_path, "validate.groups = algebra\n")
    assert main(["validate", "--scenario", scenario, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["summary"] == {"passed": 5, "failed": 0, "skipped": 0}
    assert "record_layout" not in json.loads((out / "metadata.json").read_text())


@pytest.mark.slow
def test_beam_run_reports_error_estimate(tmp_path):
    text = """
incidence.type = beam
incidence.kind = P
incidence.sigma = 0.1
incidence.center = 0.1, 0
incidence.reference_height = 1
grid.origin = -0.5, 0, 0
grid.extents = 1, 0, 0.5
grid.resolution = 3, 1, 2
outputs.quantities = displacement
"""
    out = tmp_path / "out"
    assert main(["beam", "--scenario", _scenario(tmp_path, text), "--out", str(out), "--format", "text"]) == 0
    points, values = field_io_service.read_field(out / "displacement.txt")
    assert np.max(np.abs(values[points[:, 2] == 0.0])) < 1e-6 * np.max(np.abs(values))
    metadata = json.loads((out / "metadata.json").read_text())
    assert 0.0 <= metadata["max_error_estimate"] <= 2.0 * metadata["tolerances"]["beam"]


def test_validate_ignores_outputs_section(tmp_path):
    # outputs.quantities があっても validate は走る
    scenario = _scenario(tmp_path, "outputs.quantities = displacement, traction\nvalidate.groups = algebra\n")
    assert main(["validate", "--scenario", scenario, "--out", str(tmp_path / "out")]) == 0


def test_failing_check_exits_1(tmp_path, monkeypatch):
    def failing(medium, rng):
        return [CheckResult.evaluate("algebra.forced", "algebra", 1.0, 1e-13)]

    monkeypatch.setattr(validation_service, "check_kernel_identities", failing)
    out = tmp_path / "out"
    scenario = _scenario(tmp_path, "validate.groups = algebra\n")
    assert main(["validate", "--scenario", scenario, "--out", str(out)]) == 1

    metadata = json.loads((out / "metadata.json").read_text())
    assert metadata["exit_code"] == 1
    assert metadata["error"]["code"] == "CHECK_FAILED"
    assert metadata["error"]["details"]["failed"] == ["algebra.forced"]
    report = json.loads((out / "report.json").read_text())
    assert report["summary"]["failed"] == 1


def test_repeated_runs_differ_only_in_run_fields(tmp_path):
    scenario = _scenario(tmp_path, NORMAL_P)
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["reflect", "--scenario", scenario, "--out", str(first), "--seed", "3"]) == 0
    assert main(["reflect", "--scenario", scenario, "--out", str(second), "--seed", "3"]) == 0
    for name in ("displacement.bin", "traction.bin"):
        assert (first / name).read_bytes() == (second / name).read_bytes()

    per_run = {"run_id", "created_at", "wall_time_s", "memory_rss_mb"}
    meta_first = json.loads((first / "metadata.json").read_text())
    meta_second = json.loads((second / "metadata.json").read_text())
    assert per_run <= set(meta_first)
    assert {k: v for k, v in meta_first.items() if k not in per_run} == \
        {k: v for k, v in meta_second.items() if k not in per_run}

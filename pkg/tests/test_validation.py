import sys

import numpy as np
import pytest

from elastoscatter.config.settings import settings
from elastoscatter.models.validation import ALL_GROUPS, CheckResult, SuiteConfig
from elastoscatter.services.validation_service import validation_service


def test_check_result_evaluate():
    assert CheckResult.evaluate("a", "algebra", 1e-14, 1e-13).status == "pass"
    assert CheckResult.evaluate("a", "algebra", 1e-12, 1e-13).status == "fail"


def test_non_finite_measurement_fails():
    result = CheckResult.evaluate("a", "algebra", float("nan"), 1.0)
    assert result.status == "fail"
    assert result.measured == sys.float_info.max


def test_algebra_group(medium):
    report = validation_service.run_all(medium, SuiteConfig(groups=["algebra"], seed=1))
    assert report.n_passed == 5
    assert report.all_passed
    assert all(name.startswith("algebra.") for name in report.names())


def test_suite_is_seeded(medium):
    config = SuiteConfig(groups=["spectral"], seed=3)
    first = validation_service.run_all(medium, config)
    second = validation_service.run_all(medium, config.model_copy(update={"threads": 4}))
    assert first.names() == second.names()
    assert [c.measured for c in first.checks] == [c.measured for c in second.checks]


def test_raising_check_becomes_failure(medium, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(validation_service, "check_kernel_identities", broken)
    report = validation_service.run_all(medium, SuiteConfig(groups=["algebra"]))
    assert report.n_failed == 1
    assert "RuntimeError: boom" in report.checks[0].detail
    assert not report.all_passed


def test_unknown_group_is_rejected():
    with pytest.raises(ValueError):
        SuiteConfig(groups=["optics"])


@pytest.mark.slow
def test_full_suite_passes(medium):
    report = validation_service.run_all(medium, SuiteConfig(groups=ALL_GROUPS, seed=0, threads=2))
    failed = [c for c in report.checks if c.status == "fail"]
    assert not failed, failed
    assert report.n_passed >= 12


def test_flux_check_uses_configured_trace_count(medium, monkeypatch):
    assert settings.flux_trace_count == 50
    calls = []
    original = validation_service.check_flux_identities

    def counting(medium_, trace):
        calls.append(trace)
        return original(medium_, trace)

    monkeypatch.setattr(validation_service, "check_flux_identities", counting)
    flux = next(check for group, label, check in validation_service._registry() if label == "flux")
    results = flux(medium, SuiteConfig(groups=["spectral"]), np.random.default_rng(0))

    assert len(calls) == 50
    assert [r.name for r in results] == ["spectral.flux.energy", "spectral.flux.rellich", "spectral.flux.evanescent"]
    assert all(r.status == "pass" for r in results), results
    assert "worst of 50" in results[0].detail

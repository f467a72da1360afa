import numpy as np
import pytest

from elastoscatter.models.errors import CoincidentPointsError, ErrorCode, ParameterDomainError, QuadratureError
from elastoscatter.models.greens import CorrectionResult, QuadratureConfig
from elastoscatter.services.greens_service import greens_service
from elastoscatter.services.validation_service import validation_service
from elastoscatter.services.wave_service import wave_service


def test_free_tensor_reciprocity(medium, rng):
    xs = rng.uniform(-1.0, 1.0, size=(20, 3))
    ys = rng.uniform(-1.0, 1.0, size=(20, 3))
    forward = greens_service.greens_free_batch(medium, xs, ys)
    backward = greens_service.greens_free_batch(medium, ys, xs)
    np.testing.assert_allclose(forward, np.swapaxes(backward, -1, -2), rtol=1e-13)
    np.testing.assert_allclose(forward, np.swapaxes(forward, -1, -2), rtol=1e-13)


def test_free_tensor_rejects_coincident_points(medium):
    with pytest.raises(CoincidentPointsError):
        greens_service.greens_free(medium, [0.1, 0.2, 0.3], [0.1, 0.2, 0.3])


def test_free_tensor_navier_order(medium):
    x = np.array([0.1, -0.2, 1.0])
    order, _ = wave_service.fd_convergence_order(
        medium, lambda y: greens_service.greens_free_batch(medium, x, y) @ np.array([1.0, 0.5, -0.25]),
        np.array([0.4, 0.3, 1.6]),
    )
    assert order >= 3.5


def test_truncation_radius_and_angular_nodes(medium):
    config = QuadratureConfig()
    low = config.truncation_radius(medium, 0.1)
    high = config.truncation_radius(medium, 2.0)
    assert high >= 1.5 * medium.kappa_s
    assert low > high
    assert config.n_angular(medium, 3.0, low) % 8 == 0


def test_correction_rejects_points_below_surface(medium):
    with pytest.raises(ParameterDomainError):
        greens_service.correction_batch(medium, [0.0, 0.0, -0.1], [0.0, 0.0, 1.0])


def test_correction_needs_minimum_height(medium):
    with pytest.raises(QuadratureError) as exc:
        greens_service.correction_batch(medium, [0.0, 0.0, 1e-5], [0.3, 0.0, 1e-5])
    assert exc.value.code == ErrorCode.SLOW_CONVERGENCE


def test_hat_kernel_identity(medium, rng):
    result = validation_service.check_hat_kernel_identity(medium, rng, n_samples=500)[0]
    assert result.status == "pass", result


def test_layer_potential_rejects_points_on_trace_plane(medium):
    trace = validation_service.compact_trace(medium, n=16)
    with pytest.raises(ParameterDomainError):
        greens_service.layer_potential(medium, trace, np.array([[0.0, 0.0, trace.height]]))


@pytest.mark.slow
def test_halfspace_dirichlet_trace(medium, quadrature, rng):
    result = validation_service.check_greens_dirichlet(medium, quadrature, rng, n_points=10)[0]
    assert result.status == "pass", result


@pytest.mark.slow
def test_halfspace_symmetry_and_parts(medium, quadrature, rng):
    results = {r.name: r for r in validation_service.check_greens_symmetry(medium, quadrature, rng, n_pairs=5)}
    assert results["greens.symmetry"].status == "pass", results["greens.symmetry"]
    assert results["greens.parts"].status == "pass"


@pytest.mark.slow
def test_halfspace_single_pair_matches_batch(medium, quadrature):
    x = np.array([0.2, 0.1, 0.8])
    y = np.array([-0.3, 0.4, 1.2])
    single = greens_service.greens_halfspace(medium, x, y, quadrature, with_parts=True)
    assert single.value.shape == (3, 3)
    np.testing.assert_array_equal(single.value, single.parts.free - single.parts.image + single.parts.correction)
    assert single.error_estimate > 0.0


@pytest.mark.slow
def test_halfspace_navier_order(medium, quadrature):
    for result in validation_service.check_greens_navier(medium, quadrature):
        assert result.status == "pass", result


@pytest.mark.slow
def test_layer_potential_two_paths(medium, quadrature, rng):
    result = validation_service.check_layer_potential(medium, quadrature, rng, n_points=8)[0]
    assert result.status == "pass", result


@pytest.mark.slow
def test_kupradze_decay(medium, quadrature):
    results = {r.name: r for r in validation_service.check_kupradze(medium, quadrature)}
    for name in ("greens.kupradze_p", "greens.kupradze_s", "greens.kupradze_free", "greens.axis_reduction"):
        assert results[name].status == "pass", results[name]


def test_kupradze_rejects_downward_direction(medium, quadrature):
    with pytest.raises(ParameterDomainError):
        greens_service.kupradze_decay_diagnostic(medium, quadrature, direction=(0.6, 0.0, -0.8))


def test_kupradze_sweeps_observation_point(medium, quadrature, monkeypatch):
    calls = []

    def fake_correction(medium_, xs, ys, config=None):
        xs, ys = np.asarray(xs), np.asarray(ys)
        calls.append((xs.copy(), ys.copy()))
        decay = 1.0 / np.linalg.norm(xs - ys, axis=-1)
        block = decay[:, None, None] * np.ones((3, 3))
        return CorrectionResult(p=block, s=2.0 * block, error_estimate=0.0, xi_max=1.0, n_angular=1)

    monkeypatch.setattr(greens_service, "correction_batch", fake_correction)
    report = greens_service.kupradze_decay_diagnostic(medium, quadrature)

    xs, ys = calls[0]
    anchor = np.array([0.0, 0.0, 1.0 / medium.kappa_p])
    np.testing.assert_allclose(ys, np.broadcast_to(anchor, ys.shape))
    np.testing.assert_allclose(xs - anchor, np.asarray(report.radii)[:, None] * np.array([0.6, 0.0, 0.8]))
    assert report.slope_p == pytest.approx(-1.0)
    assert report.slope_s == pytest.approx(-1.0)
    # 軸上の比較でも x を動かす
    xs_axis, ys_axis = calls[1]
    np.testing.assert_allclose(ys_axis, np.broadcast_to(anchor, ys_axis.shape))
    assert np.all(xs_axis[:, 2] > anchor[2])

import numpy as np
import pytest
from pydantic import ValidationError

from elastoscatter.models.errors import ParameterDomainError, QuadratureError
from elastoscatter.models.waves import GaussianDensity, ModeSuperposition, PlaneWaveSpec, SpectralBeamSpec
from elastoscatter.services.spectral_service import spectral_service
from elastoscatter.services.validation_service import validation_service
from elastoscatter.services.wave_service import wave_service


def test_plane_wave_parses_complex_text():
    spec = PlaneWaveSpec(c_p="1+2i", c_s1="-0.5j", c_s2=3)
    assert spec.c_p == 1 + 2j
    assert spec.c_s1 == -0.5j
    assert spec.c_s2 == 3 + 0j


def test_default_polarizations_are_orthonormal():
    spec = PlaneWaveSpec(theta=0.7, phi=2.1)
    d = spec.direction()
    d1, d2 = spec.s_polarizations()
    basis = np.stack([d, d1, d2])
    np.testing.assert_allclose(basis @ basis.T, np.eye(3), atol=1e-14)
    assert d[2] < 0.0


@pytest.mark.parametrize("kwargs", [
    {"theta": np.pi / 2},
    {"theta": -0.1},
    {"d1": (1.0, 1.0, 0.0)},
    {"d2": (0.0, 0.0, 1.0)},
])
def test_plane_wave_rejects_invalid_geometry(kwargs):
    with pytest.raises(ValidationError):
        PlaneWaveSpec(**kwargs)


def test_normal_p_incidence_has_no_mode_conversion(medium):
    spec = PlaneWaveSpec(theta=0.0, c_p=1.0)
    reflected = wave_service.reflected_plane_modes(medium, spec)
    # 先頭3本が P、残りが S
    np.testing.assert_allclose(reflected.amplitudes[3:], 0.0, atol=1e-15)
    np.testing.assert_allclose(reflected.amplitudes[0], [0.0, 0.0, 1.0], atol=1e-15)


def test_total_plane_field_vanishes_on_surface(medium, rng):
    points = np.concatenate([rng.uniform(-10.0, 10.0, size=(200, 2)), np.zeros((200, 1))], axis=-1)
    spec = PlaneWaveSpec(theta=1.1, phi=0.3, c_p=0.4, c_s1=1.0, c_s2="0.2-0.7i")
    total = wave_service.eval_incident_plane(medium, spec, points) + wave_service.eval_reflected_plane(medium, spec, points)
    assert np.max(np.abs(total)) < 1e-12


def test_rigid_boundary_check(medium, rng):
    result = validation_service.check_rigid_boundary(medium, rng, n_incidences=20, n_points=2000)[0]
    assert result.status == "pass", result


@pytest.mark.parametrize("label, spec", [
    ("normal_p", PlaneWaveSpec(theta=0.0, c_p=1.0)),
    ("oblique", PlaneWaveSpec(theta=0.4, phi=1.0, c_p=1.0, c_s1=0.3j, c_s2=-0.8)),
    ("postcritical_s", PlaneWaveSpec(theta=np.pi / 3, phi=0.4, c_s1=1.0, c_s2=0.5j)),
])
def test_scattering_consistency(medium, label, spec):
    for result in validation_service.check_scattering_consistency(medium, spec, label=label):
        assert result.status == "pass", result


def test_postcritical_s_reflects_evanescent_p(medium):
    spec = PlaneWaveSpec(theta=np.pi / 3, c_s1=1.0)
    reflected = wave_service.reflected_plane_modes(medium, spec)
    # S 入射（2, 3 行目）は κ_s sin θ > κ_p なので反射 P の鉛直波数は純虚数
    assert np.all(reflected.wavevectors[1:3, 2].real == 0.0)
    assert np.all(reflected.wavevectors[1:3, 2].imag > 0.0)


def test_reflected_plane_rejects_points_below_surface(medium):
    with pytest.raises(ParameterDomainError):
        wave_service.eval_reflected_plane(medium, PlaneWaveSpec(c_p=1.0), np.array([0.0, 0.0, -0.1]))


def test_traction_of_single_mode(medium):
    k = np.array([[0.3, -0.2, 0.9]])
    a = np.array([[1.0, 0.5j, -0.2]])
    field = ModeSuperposition(wavevectors=k, amplitudes=a)
    x = np.array([[0.1, 0.2, 0.3], [1.0, -1.0, 2.0]])
    expected = np.exp(1j * x @ k[0])[:, None] * (spectral_service.traction_symbol(medium, k[0]) @ a[0])
    np.testing.assert_allclose(wave_service.traction_plane(medium, field, x), expected, atol=1e-14)


def test_incident_navier_order(medium):
    result = validation_service.check_incident_navier(medium)[0]
    assert result.status == "pass", result


def test_stencil_size():
    offsets, weights = wave_service._stencil(0.1)
    assert offsets.shape == (61, 3)
    # 2階差分の重みの和は0
    for a in range(3):
        for b in range(3):
            assert abs(np.sum(weights[a][b])) < 1e-9


def test_fd_order_of_zero_field_is_infinite(medium):
    order, norms = wave_service.fd_convergence_order(medium, lambda p: np.zeros(p.shape, dtype=complex), np.ones(3))
    assert order == float("inf")
    assert np.all(norms == 0.0)


def _p_beam(medium, radius=0.4):
    center = (0.1, 0.0)
    return SpectralBeamSpec(
        kind="P",
        density=GaussianDensity(center=center, sigma=0.1, amplitude=1.0),
        support_center=center,
        support_radius=radius,
        reference_height=1.0,
    )


def test_gaussian_density_is_normalized():
    density = GaussianDensity(center=(0.2, -0.1), sigma=0.05, amplitude="2")
    h = 0.004
    grid = np.arange(-0.4, 0.4, h)
    xi = np.stack(np.meshgrid(grid + 0.2, grid - 0.1, indexing="ij"), axis=-1)
    assert np.sum(density(xi)) * h * h == pytest.approx(2.0, rel=1e-6)


def test_beam_boundary_and_source_density(medium, rng):
    for result in validation_service.check_beam_boundary(medium, rng, n_points=40):
        assert result.status == "pass", result


def test_beam_support_beyond_branch_circle_is_rejected(medium):
    spec = _p_beam(medium, radius=0.95)
    with pytest.raises(ParameterDomainError):
        wave_service.evaluate_beam(medium, spec, "incident", np.zeros(3))


def test_beam_quadrature_failure_reports_estimate(medium):
    with pytest.raises(QuadratureError) as exc:
        wave_service.evaluate_beam(medium, _p_beam(medium), "incident", np.zeros(3), max_doublings=0)
    assert "achieved" in exc.value.details


def test_source_density_needs_horizontal_points(medium):
    with pytest.raises(ParameterDomainError):
        wave_service.source_density(medium, _p_beam(medium), np.zeros((4, 3)))


def test_reflected_beam_rejects_points_below_surface(medium):
    with pytest.raises(ParameterDomainError):
        wave_service.eval_reflected_beam(medium, _p_beam(medium), np.array([0.0, 0.0, -0.5]))


def test_incident_beam_matches_adaptive_evaluation(medium):
    spec = _p_beam(medium)
    x = np.array([[0.2, -0.1, 0.5], [0.0, 0.3, 0.9]])
    np.testing.assert_allclose(
        wave_service.eval_incident_beam(medium, spec, x),
        wave_service.evaluate_beam(medium, spec, "incident", x).value,
        rtol=0.0, atol=0.0,
    )


def _straddling_s_beam(medium):
    center = (0.6 * medium.kappa_p, 0.2 * medium.kappa_p)
    return SpectralBeamSpec(
        kind="S",
        density=GaussianDensity(center=center, sigma=0.2, polarization=[1.0, 0.5j, 0.2]),
        support_center=center,
        support_radius=0.8,
        reference_height=1.0,
    )


def test_disk_nodes_split_at_p_circle(medium):
    spec = _straddling_s_beam(medium)
    xi, weights = wave_service._disk_nodes(medium, spec, 8, 16)
    center = np.asarray(spec.support_center)
    assert np.all(np.hypot(*(xi - center).T) <= spec.support_radius + 1e-14)
    assert np.all(weights > 0.0)
    assert np.min(np.abs(np.hypot(*xi.T) - medium.kappa_p)) > 0.0
    # 各パネルで多項式は厳密に積分される
    area = np.pi * spec.support_radius ** 2
    assert np.sum(weights) == pytest.approx(area, rel=1e-13)
    second_moment = np.sum(weights * np.sum(xi ** 2, axis=-1))
    assert second_moment == pytest.approx(area * (0.5 * spec.support_radius ** 2 + center @ center), rel=1e-12)


def test_source_density_converges_across_p_circle(medium, rng):
    spec = _straddling_s_beam(medium)
    xprime = rng.uniform(-3.0, 3.0, size=(20, 2))
    result = wave_service.evaluate_beam(medium, spec, "source_density", xprime)
    assert np.all(np.isfinite(result.value))
    assert result.error_estimate < 1e-8 * max(1.0, float(np.max(np.abs(result.value))))


def test_narrow_beam_approaches_plane_mode(medium):
    center = np.array([0.3, -0.2])
    spec = SpectralBeamSpec(
        kind="P",
        density=GaussianDensity(center=tuple(center), sigma=0.004, amplitude=1.0),
        support_center=tuple(center),
        support_radius=0.04,
        reference_height=1.0,
    )
    beta = np.sqrt(medium.kappa_p ** 2 - center @ center)
    k_in = np.array([center[0], center[1], -beta])
    mode = ModeSuperposition(wavevectors=[k_in], amplitudes=[k_in * np.exp(1j * beta * spec.reference_height)])

    x = np.array([[0.2, -0.1, 0.5], [0.0, 0.3, 0.9], [-0.4, 0.1, 0.0]])
    atol = 1e-3 * medium.kappa_p
    np.testing.assert_allclose(wave_service.eval_incident_beam(medium, spec, x), mode.evaluate(x), atol=atol)
    np.testing.assert_allclose(
        wave_service.eval_reflected_beam(medium, spec, x),
        wave_service.reflect_modes(medium, mode).evaluate(x),
        atol=atol,
    )

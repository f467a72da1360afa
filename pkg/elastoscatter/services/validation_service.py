import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from elastoscatter.config.settings import settings
from elastoscatter.models.greens import QuadratureConfig
from elastoscatter.models.medium import ElasticMedium
from elastoscatter.models.spectral import TraceGrid
from elastoscatter.models.validation import CheckResult, SuiteConfig, ValidationReport
from elastoscatter.models.waves import GaussianDensity, PlaneWaveSpec, SpectralBeamSpec
from elastoscatter.services.greens_service import greens_service
from elastoscatter.services.spectral_service import spectral_service
from elastoscatter.services.wave_service import wave_service

logger = logging.getLogger(__name__)

CheckFunction = Callable[[ElasticMedium, SuiteConfig, np.random.Generator], List[CheckResult]]

# 許容誤差
KERNEL_TOLERANCE = 1e-13
BOUNDARY_TOLERANCE = 1e-12
PROPAGATION_TOLERANCE = 1e-11
ORDER_SLACK = 0.5
BEAM_TOLERANCE = 1e-6
RAYLEIGH_TOLERANCE = 1e-10
FLUX_TOLERANCE = 1e-9
ISOTROPY_TOLERANCE = 1e-12
HELMHOLTZ_TOLERANCE = 1e-12
DIRICHLET_TOLERANCE = 1e-6
HAT_KERNEL_TOLERANCE = 1e-10
LAYER_POTENTIAL_TOLERANCE = 1e-4
SLOPE_TOLERANCE = 0.3
FREE_SLOPE_TOLERANCE = 0.05
AXIS_TOLERANCE = 1e-9


def _fro(a: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a, axis=(-2, -1))


def _random_xi(rng: np.random.Generator, radius: float, n: int) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(size=n))
    t = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)


def _order_measure(order: float) -> float:
    """4 − 観測次数（残差が厳密に0なら0）"""
    return 0.0 if np.isinf(order) else 4.0 - order


def _relative_gap(a: float, b: float, scale: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), scale)


def _worst(results: Sequence[CheckResult], name: str, detail: str = "") -> CheckResult:
    """複数試行の最悪値を1件にまとめる"""
    measured = [r for r in results if r.status != "skip"]
    if not measured:
        return CheckResult.skipped(name, results[0].group, results[0].tolerance, "all samples skipped")
    worst = max(measured, key=lambda r: r.measured)
    return CheckResult.evaluate(name, worst.group, worst.measured, worst.tolerance,
                                detail or f"worst of {len(measured)} samples")


class ValidationService:
    """理論的恒等式の両側検証"""

    # ---- algebra ----

    def check_kernel_identities(self, medium: ElasticMedium, rng: np.random.Generator, n_samples: int = 1000) -> List[CheckResult]:
        xi = _random_xi(rng, 3.0 * medium.kappa_s, n_samples)
        km = spectral_service.kernel_matrices(medium, xi)
        d = km.denom[:, None, None]
        eye = np.eye(3)
        stacked_identity = np.vstack([eye, np.zeros((1, 3))])

        split = np.max(_fro(km.M_p + km.M_s - d * eye) / (_fro(km.M_p) + np.abs(km.denom)))
        product = np.max(_fro(km.G @ km.D - km.M) / (_fro(km.G) * _fro(km.D)))
        inverse = np.max(_fro(km.Dtilde @ km.D - stacked_identity) / (_fro(km.Dtilde) * _fro(km.D)))
        tilde = np.max(_fro(km.Mtilde_p + km.Mtilde_s - d * km.V) / ((_fro(km.M_p) + np.abs(km.denom)) * _fro(km.V)))
        downward = np.max(_fro(km.M_minus - spectral_service.substituted_dtn_symbol(medium, xi)) / _fro(km.M))

        detail = f"{n_samples} random xi with |xi| < 3 kappa_s"
        return [
            CheckResult.evaluate("algebra.mp_plus_ms", "algebra", split, KERNEL_TOLERANCE, detail),
            CheckResult.evaluate("algebra.g_times_d", "algebra", product, KERNEL_TOLERANCE, detail),
            CheckResult.evaluate("algebra.dtilde_times_d", "algebra", inverse, KERNEL_TOLERANCE, detail),
            CheckResult.evaluate("algebra.mtilde_sum", "algebra", tilde, KERNEL_TOLERANCE, detail),
            CheckResult.evaluate("algebra.downward_symbol", "algebra", downward, KERNEL_TOLERANCE, detail),
        ]

    # ---- waves ----

    def check_rigid_boundary(
        self,
        medium: ElasticMedium,
        rng: np.random.Generator,
        n_incidences: int = 20,
        n_points: int = 10000,
    ) -> List[CheckResult]:
        extent = 20.0 / medium.kappa_p
        points = np.concatenate([rng.uniform(-extent, extent, size=(n_points, 2)), np.zeros((n_points, 1))], axis=-1)
        worst = 0.0
        for k in range(n_incidences):
            # 先頭は P 波の臨界角を超える S 入射
            theta = np.pi / 3 if k == 0 else rng.uniform(0.0, 0.49 * np.pi)
            c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            spec = PlaneWaveSpec(theta=theta, phi=rng.uniform(0.0, 2.0 * np.pi), c_p=c[0], c_s1=c[1], c_s2=c[2])
            total = wave_service.eval_incident_plane(medium, spec, points) + wave_service.eval_reflected_plane(medium, spec, points)
            worst = max(worst, float(np.max(np.abs(total))) / float(np.sum(np.abs(c))))
        return [CheckResult.evaluate("waves.rigid_boundary", "waves", worst, BOUNDARY_TOLERANCE,
                                     f"{n_incidences} incidences x {n_points} surface points")]

    def check_scattering_consistency(
        self,
        medium: ElasticMedium,
        spec: PlaneWaveSpec,
        heights: Optional[Sequence[float]] = None,
        label: str = "plane",
    ) -> List[CheckResult]:
        """成分ごとに境界条件・伝播・Navier 残差を検証"""
        heights = heights if heights is not None else [h / medium.kappa_s for h in (0.1, 1.0, 5.0)]
        results = []
        for index, (name, component, coefficient) in enumerate(
            zip(("p", "s1", "s2"), spec.components(), (spec.c_p, spec.c_s1, spec.c_s2))
        ):
            prefix = f"waves.{label}.{name}"
            scale = max(1.0, abs(coefficient))
            incident = wave_service.incident_plane_modes(medium, component)
            reflected = wave_service.reflect_modes(medium, incident)

            alpha = tuple(float(a) for a in incident.wavevectors[index, :2].real)
            template = TraceGrid(cell_length=4.0 * np.pi / medium.kappa_p, n=8, alpha=alpha,
                                 values=np.zeros((8, 8, 3), dtype=complex))
            surface = np.concatenate([template.coordinates(), np.zeros((8, 8, 1))], axis=-1)

            boundary = np.max(np.abs(incident.evaluate(surface) + reflected.evaluate(surface))) / scale
            results.append(CheckResult.evaluate(f"{prefix}.boundary", "waves", boundary, BOUNDARY_TOLERANCE))

            trace = template.with_values(reflected.evaluate(surface))
            gap = 0.0
            for h in heights:
                level = spectral_service.propagate(medium, trace, h) if h > 0 else trace
                closed = reflected.evaluate(surface + np.array([0.0, 0.0, h]))
                gap = max(gap, float(np.max(np.abs(level.values - closed))) / scale)
            results.append(CheckResult.evaluate(f"{prefix}.propagation", "waves", gap, PROPAGATION_TOLERANCE,
                                                f"heights {', '.join(f'{h:.4g}' for h in heights)}"))

            x0 = np.array([0.3, -0.2, 1.0]) / medium.kappa_p
            order, _ = wave_service.fd_convergence_order(medium, reflected.evaluate, x0)
            results.append(CheckResult.evaluate(f"{prefix}.navier_order", "waves", _order_measure(order), ORDER_SLACK,
                                                f"observed order {order:.3f}"))
        return results

    def check_incident_navier(self, medium: ElasticMedium) -> List[CheckResult]:
        spec = PlaneWaveSpec(theta=np.pi / 5, phi=0.7, c_p=1.0, c_s1=0.5j, c_s2=-0.3)
        modes = wave_service.incident_plane_modes(medium, spec)
        order, _ = wave_service.fd_convergence_order(medium, modes.evaluate, np.array([0.1, 0.4, -0.7]) / medium.kappa_p)
        return [CheckResult.evaluate("waves.incident.navier_order", "waves", _order_measure(order), ORDER_SLACK,
                                     f"observed order {order:.3f}")]

    def default_beams(self, medium: ElasticMedium) -> List[Tuple[str, SpectralBeamSpec]]:
        kp, ks = medium.kappa_p, medium.kappa_s
        p_center = (0.2 * kp, -0.1 * kp)
        s_center = (0.3 * ks, 0.1 * ks)
        return [
            ("beam_p", SpectralBeamSpec(
                kind="P",
                density=GaussianDensity(center=p_center, sigma=0.12 * kp, amplitude=1.0),
                support_center=p_center,
                support_radius=0.5 * kp,
                reference_height=1.0 / kp,
            )),
            ("beam_s", SpectralBeamSpec(
                kind="S",
                density=GaussianDensity(center=s_center, sigma=0.1 * ks, polarization=[1.0, 0.5j, 0.2]),
                support_center=s_center,
                support_radius=0.4 * ks,
                reference_height=1.0 / kp,
            )),
        ]

    def check_beam_boundary(self, medium: ElasticMedium, rng: np.random.Generator, n_points: int = 100) -> List[CheckResult]:
        """ビームの境界条件と面上密度の別経路評価"""
        extent = 5.0 / medium.kappa_p
        xprime = rng.uniform(-extent, extent, size=(n_points, 2))
        surface = np.concatenate([xprime, np.zeros((n_points, 1))], axis=-1)
        results = []
        for name, spec in self.default_beams(medium):
            incident = wave_service.evaluate_beam(medium, spec, "incident", surface)
            reflected = wave_service.evaluate_beam(medium, spec, "reflected", surface)
            scale = max(1.0, float(np.max(np.abs(incident.value))))
            boundary = float(np.max(np.abs(incident.value + reflected.value))) / scale
            results.append(CheckResult.evaluate(f"waves.{name}.boundary", "waves", boundary, BEAM_TOLERANCE))

            density = wave_service.evaluate_beam(medium, spec, "source_density", xprime)
            total = (wave_service.beam_modes(medium, spec, "incident", density.n_radial, density.n_angular)
                     + wave_service.beam_modes(medium, spec, "reflected", density.n_radial, density.n_angular))
            traction = wave_service.traction_plane(medium, total, surface)
            gap = float(np.max(np.abs(density.value - traction))) / max(1.0, float(np.max(np.abs(density.value))))
            results.append(CheckResult.evaluate(f"waves.{name}.source_density", "waves", gap, BEAM_TOLERANCE,
                                                "explicit density vs traction of the total field"))

            modes = wave_service.beam_modes(medium, spec, "incident", 32, 64)
            order, _ = wave_service.fd_convergence_order(medium, modes.evaluate, np.array([0.2, 0.1, 0.5]) / medium.kappa_p)
            results.append(CheckResult.evaluate(f"waves.{name}.navier_order", "waves", _order_measure(order),
                                                ORDER_SLACK, f"observed order {order:.3f}"))
        return results

    # ---- spectral ----

    def _random_cell(self, medium: ElasticMedium, rng: np.random.Generator, n: int = 16, evanescent_only: bool = False) -> TraceGrid:
        cell_length = 3.0 * 2.0 * np.pi / medium.kappa_p
        alpha = rng.uniform(-np.pi / cell_length, np.pi / cell_length, size=2)
        return spectral_service.random_trace(
            cell_length, n, alpha=alpha, seed=int(rng.integers(2 ** 31)),
            evanescent_only=evanescent_only, medium=medium,
        )

    def check_random_flux(self, medium: ElasticMedium, rng: np.random.Generator, n_traces: int) -> List[CheckResult]:
        """ランダムなトレースでの流束恒等式（最悪値）と純エバネッセント流束"""
        samples = [self.check_flux_identities(medium, self._random_cell(medium, rng)) for _ in range(n_traces)]
        evanescent = self._random_cell(medium, rng, evanescent_only=True)
        note = f"worst of {n_traces} random traces"
        return [
            _worst([s[0] for s in samples], "spectral.flux.energy", note),
            _worst([s[1] for s in samples], "spectral.flux.rellich", note),
        ] + self.check_evanescent_flux(medium, evanescent)

    def check_asr_rayleigh(self, medium: ElasticMedium, trace: TraceGrid, heights: Optional[Sequence[float]] = None) -> List[CheckResult]:
        heights = heights if heights is not None else [h / medium.kappa_s for h in (0.1, 1.0, 5.0)]
        coefficients = spectral_service.rayleigh_coefficients(medium, trace)
        coords = trace.coordinates()
        scale = float(np.max(np.abs(trace.values))) or 1.0
        gap = 0.0
        for h in heights:
            level = spectral_service.propagate(medium, trace, h)
            points = np.concatenate([coords, np.full(coords.shape[:-1] + (1,), trace.height + h)], axis=-1)
            direct = spectral_service.rayleigh_evaluate(medium, coefficients, points)
            gap = max(gap, float(np.max(np.abs(level.values - direct))) / scale)
        return [CheckResult.evaluate("spectral.asr_rayleigh", "spectral", gap, RAYLEIGH_TOLERANCE,
                                     f"{trace.n}x{trace.n} quasi-periodic trace")]

    def check_flux_identities(self, medium: ElasticMedium, trace: TraceGrid) -> List[CheckResult]:
        if not np.any(trace.values):
            return [
                CheckResult.skipped("spectral.flux.energy", "spectral", FLUX_TOLERANCE, "zero trace"),
                CheckResult.skipped("spectral.flux.rellich", "spectral", FLUX_TOLERANCE, "zero trace"),
            ]
        decomposition = spectral_service.decompose_trace(medium, trace)
        energy_surface, rellich_surface = spectral_service.surface_flux_integrals(medium, trace)
        energy_modes, rellich_modes = spectral_service.mode_flux_sums(medium, decomposition)

        mass = float(np.sum(np.abs(trace.values) ** 2)) * trace.spacing ** 2
        energy_scale = 1e-12 * medium.omega ** 2 * medium.kappa_s * mass
        rellich_scale = energy_scale * medium.kappa_s
        return [
            CheckResult.evaluate("spectral.flux.energy", "spectral",
                                 _relative_gap(energy_surface, energy_modes, energy_scale), FLUX_TOLERANCE,
                                 f"surface {energy_surface:.6e}, modes {energy_modes:.6e}"),
            CheckResult.evaluate("spectral.flux.rellich", "spectral",
                                 _relative_gap(rellich_surface, rellich_modes, rellich_scale), FLUX_TOLERANCE,
                                 f"surface {rellich_surface:.6e}, modes {rellich_modes:.6e}"),
        ]

    def check_evanescent_flux(self, medium: ElasticMedium, trace: TraceGrid) -> List[CheckResult]:
        """伝播モードのないトレースでは両辺とも0"""
        energy_surface, rellich_surface = spectral_service.surface_flux_integrals(medium, trace)
        decomposition = spectral_service.decompose_trace(medium, trace)
        energy_modes, rellich_modes = spectral_service.mode_flux_sums(medium, decomposition)
        mass = float(np.sum(np.abs(trace.values) ** 2)) * trace.spacing ** 2
        measured = max(abs(energy_surface), abs(energy_modes),
                       abs(rellich_surface) / medium.kappa_s, abs(rellich_modes) / medium.kappa_s)
        measured /= max(medium.omega ** 2 * medium.kappa_s * mass, np.finfo(float).tiny)
        return [CheckResult.evaluate("spectral.flux.evanescent", "spectral", measured, FLUX_TOLERANCE)]

    def check_dtn_positivity(
        self,
        medium: ElasticMedium,
        radii: Optional[Sequence[float]] = None,
        n_angles: int = 64,
    ) -> List[CheckResult]:
        """Re(−iM(ξ)) の最小固有値と回転不変性"""
        radii = list(radii) if radii is not None else [f * medium.kappa_s for f in (2.0, 4.0, 8.0)]
        angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
        directions = np.stack([np.cos(angles), np.sin(angles)], axis=-1)

        def eigenvalues(radius: float) -> np.ndarray:
            A = -1j * spectral_service.kernel_matrices(medium, radius * directions).M
            return np.linalg.eigvalsh(0.5 * (A + np.conj(np.swapaxes(A, -1, -2))))

        min_eig = np.inf
        isotropy = 0.0
        for radius in radii:
            eig = eigenvalues(radius)
            min_eig = min(min_eig, float(eig.min()))
            isotropy = max(isotropy, float(np.max(np.abs(eig - eig[0]))) / float(np.max(np.abs(eig))))
        near = float(eigenvalues(1.01 * medium.kappa_s).min())

        radii_text = ", ".join(f"{r:.4g}" for r in radii)
        return [
            CheckResult.evaluate("spectral.dtn_positivity", "spectral", -min_eig, 0.0,
                                 f"radii {radii_text}; min eigenvalue at 1.01 kappa_s (not claimed) = {near:.6e}"),
            CheckResult.evaluate("spectral.dtn_isotropy", "spectral", isotropy, ISOTROPY_TOLERANCE,
                                 f"{n_angles} angles per radius"),
        ]

    def check_evanescent_decay(self, medium: ElasticMedium, trace: TraceGrid, dz: Optional[float] = None) -> List[CheckResult]:
        """振幅ノルムの減衰率 ≤ e^{−q dz}（q は最遅減衰モードの虚部）"""
        dz = dz if dz is not None else 1.0 / medium.kappa_s
        before = spectral_service.decompose_trace(medium, trace)
        after = spectral_service.decompose_trace(medium, spectral_service.propagate(medium, trace, dz))

        active = np.hypot(before.xi[..., 0], before.xi[..., 1]) > medium.kappa_s
        active &= ~trace.nyquist_mask()
        q = float(np.min(np.minimum(before.beta.imag, before.gamma.imag)[active]))

        def amplitude(decomposition) -> float:
            return float(np.sqrt(np.sum(np.abs(decomposition.A_p[active]) ** 2)
                                 + np.sum(np.abs(decomposition.A_s[active]) ** 2)))

        ratio = amplitude(after) / amplitude(before)
        return [CheckResult.evaluate("spectral.evanescent_decay", "spectral", ratio * np.exp(q * dz) - 1.0,
                                     RAYLEIGH_TOLERANCE, f"q = {q:.6g}, dz = {dz:.6g}")]

    def check_helmholtz(self, medium: ElasticMedium, trace: TraceGrid) -> List[CheckResult]:
        decomposition = spectral_service.decompose_trace(medium, trace)
        potentials = spectral_service.helmholtz_potentials(medium, decomposition)
        xi = decomposition.xi + 0j
        k_p = np.concatenate([xi, decomposition.beta[..., None]], axis=-1)
        k_s = np.concatenate([xi, decomposition.gamma[..., None]], axis=-1)

        scale = max(float(np.max(np.abs(decomposition.A_p))), float(np.max(np.abs(decomposition.A_s))), 1e-300)
        p_gap = np.max(np.abs(1j * k_p * potentials.phi[..., None] - decomposition.p_vectors()))
        s_gap = np.max(np.abs(1j * np.cross(k_s, potentials.psi) - decomposition.A_s))
        k_scale = float(np.max(np.linalg.norm(k_s, axis=-1)))
        orthogonality = np.max(np.abs(np.sum(k_s * decomposition.A_s, axis=-1))) / (k_scale * scale)
        transversality = np.max(np.abs(np.sum(k_s * potentials.psi, axis=-1))) / (k_scale * scale)
        return [
            CheckResult.evaluate("spectral.helmholtz", "spectral", max(p_gap, s_gap) / (k_scale * scale),
                                 HELMHOLTZ_TOLERANCE),
            CheckResult.evaluate("spectral.orthogonality", "spectral", max(orthogonality, transversality),
                                 HELMHOLTZ_TOLERANCE),
        ]

    # ---- greens ----

    def check_greens_dirichlet(self, medium: ElasticMedium, config: QuadratureConfig, rng: np.random.Generator, n_points: int = 20) -> List[CheckResult]:
        x = np.array([0.2, -0.1, 1.0]) / medium.kappa_p
        ys = np.concatenate([rng.uniform(-2.0, 2.0, size=(n_points, 2)) / medium.kappa_p, np.zeros((n_points, 1))], axis=-1)
        result = greens_service.greens_halfspace_batch(medium, x, ys, config)
        return [CheckResult.evaluate("greens.dirichlet", "greens", float(np.max(_fro(result.value))), DIRICHLET_TOLERANCE,
                                     f"{n_points} boundary points")]

    def check_greens_symmetry(self, medium: ElasticMedium, config: QuadratureConfig, rng: np.random.Generator, n_pairs: int = 10) -> List[CheckResult]:
        def sample() -> np.ndarray:
            horizontal = rng.uniform(-1.0, 1.0, size=(n_pairs, 2))
            vertical = rng.uniform(0.5, 1.5, size=(n_pairs, 1))
            return np.concatenate([horizontal, vertical], axis=-1) / medium.kappa_p

        xs, ys = sample(), sample()
        forward = greens_service.greens_halfspace_batch(medium, xs, ys, config, with_parts=True)
        backward = greens_service.greens_halfspace_batch(medium, ys, xs, config)
        gap = float(np.max(_fro(forward.value - np.swapaxes(backward.value, -1, -2))))
        tolerance = 10.0 * (forward.error_estimate + backward.error_estimate)

        parts = forward.parts
        recombination = float(np.max(np.abs(forward.value - (parts.free - parts.image + parts.correction))))
        return [
            CheckResult.evaluate("greens.symmetry", "greens", gap, tolerance, f"{n_pairs} random pairs"),
            CheckResult.evaluate("greens.parts", "greens", recombination, 0.0),
        ]

    def check_greens_navier(self, medium: ElasticMedium, config: QuadratureConfig) -> List[CheckResult]:
        """G_H(x,·)p と G(x,·)p の y に関する Navier 残差次数"""
        x = np.array([0.1, -0.2, 1.0]) / medium.kappa_p
        y0 = np.array([0.4, 0.3, 1.6]) / medium.kappa_p
        polarization = np.array([1.0, 0.5, -0.25])

        def halfspace(points: np.ndarray) -> np.ndarray:
            return greens_service.greens_halfspace_batch(medium, x, points, config).value @ polarization

        def free(points: np.ndarray) -> np.ndarray:
            return greens_service.greens_free_batch(medium, x, points) @ polarization

        half_order, _ = wave_service.fd_convergence_order(medium, halfspace, y0)
        free_order, _ = wave_service.fd_convergence_order(medium, free, y0)
        return [
            CheckResult.evaluate("greens.halfspace_navier_order", "greens", _order_measure(half_order), ORDER_SLACK,
                                 f"observed order {half_order:.3f}"),
            CheckResult.evaluate("greens.free_navier_order", "greens", _order_measure(free_order), ORDER_SLACK,
                                 f"observed order {free_order:.3f}"),
        ]

    def check_hat_kernel_identity(self, medium: ElasticMedium, rng: np.random.Generator, n_samples: int = 1000) -> List[CheckResult]:
        xi = _random_xi(rng, 3.0 * medium.kappa_s, n_samples)
        x = np.concatenate([
            rng.uniform(-1.0, 1.0, size=(n_samples, 2)) / medium.kappa_p,
            rng.uniform(0.1, 2.0, size=(n_samples, 1)) / medium.kappa_p,
        ], axis=-1)
        hat = greens_service.hat_kernel(medium, x, xi)
        km = spectral_service.kernel_matrices(medium, xi)
        expected = spectral_service.asr_kernel(km, x[:, 2]) * np.exp(1j * np.sum(xi * x[:, :2], axis=-1))[:, None, None]
        gap = float(np.max(_fro(np.swapaxes(hat, -1, -2) - expected) / _fro(expected)))
        return [CheckResult.evaluate("greens.hat_kernel", "greens", gap, HAT_KERNEL_TOLERANCE,
                                     f"{n_samples} random (xi, x)")]

    def compact_trace(self, medium: ElasticMedium, n: int = 64) -> TraceGrid:
        """セル中央のガウス型パッチ"""
        cell_length = 8.0 * 2.0 * np.pi / medium.kappa_p
        template = TraceGrid(cell_length=cell_length, n=n, values=np.zeros((n, n, 3), dtype=complex))
        offset = template.coordinates() - 0.5 * cell_length
        width = cell_length / 16.0
        bump = np.exp(-0.5 * np.sum(offset ** 2, axis=-1) / width ** 2)
        return template.with_values(bump[..., None] * np.array([1.0, 0.5j, -0.3]))

    def check_layer_potential(self, medium: ElasticMedium, config: QuadratureConfig, rng: np.random.Generator, n_points: int = 20) -> List[CheckResult]:
        trace = self.compact_trace(medium)
        points = np.concatenate([
            rng.uniform(0.0, trace.cell_length, size=(n_points, 2)),
            rng.uniform(0.5, 2.0, size=(n_points, 1)) / medium.kappa_p,
        ], axis=-1)
        potential = greens_service.layer_potential(medium, trace, points, config)
        propagated = greens_service.layer_potential_by_propagation(medium, trace, points)
        gap = float(np.max(np.abs(potential.value - propagated))) / float(np.max(np.abs(trace.values)))
        return [CheckResult.evaluate("greens.layer_potential", "greens", gap, LAYER_POTENTIAL_TOLERANCE,
                                     f"truncation estimate {potential.truncation_estimate:.3e}")]

    def check_kupradze(self, medium: ElasticMedium, config: QuadratureConfig) -> List[CheckResult]:
        report = greens_service.kupradze_decay_diagnostic(medium, config)
        scale = max(1.0, max(report.norms_p), max(report.norms_s))
        return [
            CheckResult.evaluate("greens.kupradze_p", "greens", abs(report.slope_p + 1.0), SLOPE_TOLERANCE,
                                 f"slope {report.slope_p:.4f}"),
            CheckResult.evaluate("greens.kupradze_s", "greens", abs(report.slope_s + 1.0), SLOPE_TOLERANCE,
                                 f"slope {report.slope_s:.4f}"),
            CheckResult.evaluate("greens.kupradze_free", "greens", abs(report.slope_free + 1.0), FREE_SLOPE_TOLERANCE,
                                 f"slope {report.slope_free:.4f}"),
            CheckResult.evaluate("greens.axis_reduction", "greens", report.axis_gap / scale, AXIS_TOLERANCE),
        ]

    # ---- スイート ----

    def _registry(self) -> List[Tuple[str, str, CheckFunction]]:
        """(group, label, check) の登録順リスト"""

        def flux(medium, config, rng):
            return self.check_random_flux(medium, rng, settings.flux_trace_count)

        return [
            ("algebra", "kernel_identities", lambda m, c, r: self.check_kernel_identities(m, r)),
            ("waves", "rigid_boundary", lambda m, c, r: self.check_rigid_boundary(m, r)),
            ("waves", "normal_p", lambda m, c, r: self.check_scattering_consistency(
                m, PlaneWaveSpec(theta=0.0, c_p=1.0), label="normal_p")),
            ("waves", "postcritical_s", lambda m, c, r: self.check_scattering_consistency(
                m, PlaneWaveSpec(theta=np.pi / 3, phi=0.4, c_s1=1.0, c_s2=0.5j), label="postcritical_s")),
            ("waves", "incident_navier", lambda m, c, r: self.check_incident_navier(m)),
            ("waves", "beams", lambda m, c, r: self.check_beam_boundary(m, r)),
            ("spectral", "asr_rayleigh", lambda m, c, r: self.check_asr_rayleigh(m, self._random_cell(m, r))),
            ("spectral", "flux", flux),
            ("spectral", "dtn_positivity", lambda m, c, r: self.check_dtn_positivity(m)),
            ("spectral", "evanescent_decay", lambda m, c, r: self.check_evanescent_decay(
                m, self._random_cell(m, r, evanescent_only=True))),
            ("spectral", "helmholtz", lambda m, c, r: self.check_helmholtz(m, self._random_cell(m, r))),
            ("greens", "dirichlet", lambda m, c, r: self.check_greens_dirichlet(m, c.quadrature, r)),
            ("greens", "symmetry", lambda m, c, r: self.check_greens_symmetry(m, c.quadrature, r)),
            ("greens", "navier", lambda m, c, r: self.check_greens_navier(m, c.quadrature)),
            ("greens", "hat_kernel", lambda m, c, r: self.check_hat_kernel_identity(m, r)),
            ("greens", "layer_potential", lambda m, c, r: self.check_layer_potential(m, c.quadrature, r)),
            ("greens", "kupradze", lambda m, c, r: self.check_kupradze(m, c.quadrature)),
        ]

    def run_all(self, medium: ElasticMedium, config: Optional[SuiteConfig] = None) -> ValidationReport:
        """登録済みチェックをすべて実行（失敗は結果として記録）"""
        config = config or SuiteConfig()
        selected = [(index, group, label, check)
                    for index, (group, label, check) in enumerate(self._registry())
                    if group in config.groups]

        def run(entry) -> List[CheckResult]:
            index, group, label, check = entry
            rng = np.random.default_rng([config.seed, index])
            try:
                results = check(medium, config, rng)
            except Exception as e:
                logger.error(f"Check {group}.{label} raised: {e}", extra={"check": label, "group": group})
                return [CheckResult.evaluate(f"{group}.{label}", group, float("inf"), 0.0, f"{type(e).__name__}: {e}")]
            for result in results:
                log = logger.info if result.status != "fail" else logger.warning
                log(f"Check {result.name}: {result.status} (measured={result.measured:.3e}, tolerance={result.tolerance:.1e})",
                    extra={"check": result.name, "group": group})
            return results

        with ThreadPoolExecutor(max_workers=config.threads) as executor:
            batches = list(executor.map(run, selected))

        report = ValidationReport(checks=[result for batch in batches for result in batch])
        logger.info(f"Validation finished: {report.n_passed} passed, {report.n_failed} failed, {report.n_skipped} skipped")
        return report


# グローバルインスタンス
validation_service = ValidationService()

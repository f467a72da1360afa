import logging
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from elastoscatter.config.settings import settings
from elastoscatter.models.errors import ParameterDomainError, QuadratureError
from elastoscatter.models.medium import ElasticMedium
from elastoscatter.models.waves import BeamEvaluation, ModeSuperposition, PlaneWaveSpec, SpectralBeamSpec
from elastoscatter.services.spectral_service import spectral_service

logger = logging.getLogger(__name__)

FieldEvaluator = Callable[[np.ndarray], np.ndarray]
BeamPart = Literal["incident", "reflected", "source_density"]

# 台の半径の上限（分枝円に対する比）
SUPPORT_LIMIT = 0.99

# 4次中心差分の重み
_SECOND = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}
_FIRST = {-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}


def _as_points(x) -> Tuple[np.ndarray, Tuple[int, ...]]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] == 2:
        x = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
    if x.shape[-1] != 3:
        raise ParameterDomainError("Points must have a trailing dimension of 2 or 3")
    return x.reshape(-1, 3), x.shape[:-1]


class WaveService:
    """剛体面上の入射・反射場（平面波とスペクトルビーム）"""

    # ---- 平面波 ----

    def incident_plane_modes(self, medium: ElasticMedium, spec: PlaneWaveSpec) -> ModeSuperposition:
        d = spec.direction()
        d1, d2 = spec.s_polarizations()
        return ModeSuperposition(
            wavevectors=[medium.kappa_p * d, medium.kappa_s * d, medium.kappa_s * d],
            amplitudes=[spec.c_p * d, spec.c_s1 * d1, spec.c_s2 * d2],
        )

    def reflect_modes(self, medium: ElasticMedium, incident: ModeSuperposition) -> ModeSuperposition:
        """x₃=0 でのトレースを打ち消す上向き P・S モード"""
        alpha = incident.wavevectors[:, :2].real
        km = spectral_service.kernel_matrices(medium, alpha)
        trace = incident.amplitudes
        denom = km.denom[:, None]
        a_p = -np.einsum("nij,nj->ni", km.M_p, trace) / denom
        a_s = -np.einsum("nij,nj->ni", km.M_s, trace) / denom
        k_p = np.concatenate([alpha + 0j, km.beta[:, None]], axis=-1)
        k_s = np.concatenate([alpha + 0j, km.gamma[:, None]], axis=-1)
        return ModeSuperposition(
            wavevectors=np.concatenate([k_p, k_s]),
            amplitudes=np.concatenate([a_p, a_s]),
        )

    def reflected_plane_modes(self, medium: ElasticMedium, spec: PlaneWaveSpec) -> ModeSuperposition:
        return self.reflect_modes(medium, self.incident_plane_modes(medium, spec))

    def eval_incident_plane(self, medium: ElasticMedium, spec: PlaneWaveSpec, x) -> np.ndarray:
        return self.incident_plane_modes(medium, spec).evaluate(x, settings.evaluation_chunk_size)

    def eval_reflected_plane(self, medium: ElasticMedium, spec: PlaneWaveSpec, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x[..., 2] < 0.0):
            raise ParameterDomainError("Reflected field is defined for x3 >= 0")
        return self.reflected_plane_modes(medium, spec).evaluate(x, settings.evaluation_chunk_size)

    # ---- トラクション ----

    def traction_plane(self, medium: ElasticMedium, field: ModeSuperposition, x) -> np.ndarray:
        """Tu = 2μ∂₃u + λ(∇·u)e₃ + μe₃×(∇×u) をモードごとに厳密評価"""
        points, shape = _as_points(x)
        T = spectral_service.traction_symbol(medium, field.wavevectors)
        traction_amplitudes = np.einsum("nij,nj->ni", T, field.amplitudes)
        values = ModeSuperposition(wavevectors=field.wavevectors, amplitudes=traction_amplitudes)
        return values.evaluate(points, settings.evaluation_chunk_size).reshape(shape + (3,))

    # ---- スペクトルビーム ----

    def check_support(self, medium: ElasticMedium, spec: SpectralBeamSpec):
        """台が分枝円の内側に収まることを確認"""
        kappa = medium.kappa_p if spec.kind == "P" else medium.kappa_s
        reach = float(np.hypot(*spec.support_center)) + spec.support_radius
        if reach > SUPPORT_LIMIT * kappa:
            raise ParameterDomainError(
                f"Beam support reaches {reach:.6g}, beyond {SUPPORT_LIMIT} of the branch circle",
                details={"kind": spec.kind, "support_reach": reach, "kappa": kappa},
            )

    @staticmethod
    def _radial_edges(spec: SpectralBeamSpec, kappa: float, angles: np.ndarray) -> np.ndarray:
        """各方向の動径パネル端 [0, r₁, r₂, R]（|ξ|=κ と交わらない根は R に置く）"""
        c = np.asarray(spec.support_center, dtype=float)
        radius = spec.support_radius
        ce = c[0] * np.cos(angles) + c[1] * np.sin(angles)
        disc = ce * ce - c @ c + kappa * kappa
        root = np.sqrt(np.maximum(disc, 0.0))
        crossings = [np.where((disc > 0.0) & (r > 0.0) & (r < radius), r, radius) for r in (-ce - root, -ce + root)]
        edges = np.stack([np.zeros_like(ce), *crossings, np.full_like(ce, radius)], axis=-1)
        return np.sort(edges, axis=-1)

    def _disk_nodes(self, medium: ElasticMedium, spec: SpectralBeamSpec, n_radial: int, n_angular: int) -> Tuple[np.ndarray, np.ndarray]:
        """台の円板上の極座標求積点（動径 Gauss–Legendre、角度台形則）"""
        t, w = leggauss(n_radial)
        angles = 2.0 * np.pi * np.arange(n_angular) / n_angular
        center = np.asarray(spec.support_center, dtype=float)
        radius = spec.support_radius

        if abs(float(np.hypot(*center)) - medium.kappa_p) >= radius:
            r = np.broadcast_to(0.5 * radius * (t + 1.0), (n_angular, n_radial))
            wr = np.broadcast_to(0.5 * radius * w, (n_angular, n_radial))
        else:
            # 台が |ξ|=κ_p をまたぐ：交点でパネルを分け、r = a + (b−a)(3s²−2s³) で端点の平方根特異性を消す
            s = 0.5 * (t + 1.0)
            smooth = s * s * (3.0 - 2.0 * s)
            jacobian = 3.0 * s * (1.0 - s) * w
            edges = self._radial_edges(spec, medium.kappa_p, angles)
            start = edges[:, :-1, None]
            length = np.diff(edges, axis=-1)[..., None]
            r = (start + length * smooth).reshape(n_angular, -1)
            wr = (length * jacobian).reshape(n_angular, -1)

        aa = angles[:, None]
        xi = center + np.stack([r * np.cos(aa), r * np.sin(aa)], axis=-1)
        weights = (wr * r * (2.0 * np.pi / n_angular)).reshape(-1)
        # 長さ0のパネルは捨てる
        keep = weights > 0.0
        return xi.reshape(-1, 2)[keep], weights[keep]

    def beam_modes(
        self,
        medium: ElasticMedium,
        spec: SpectralBeamSpec,
        part: BeamPart,
        n_radial: int,
        n_angular: int,
    ) -> ModeSuperposition:
        """求積点ごとのモード（重み込み）"""
        xi, weights = self._disk_nodes(medium, spec, n_radial, n_angular)
        km = spectral_service.kernel_matrices(medium, xi)
        beta, gamma, denom = km.beta, km.gamma, km.denom
        b = spec.reference_height
        x1, x2 = xi[:, 0] + 0j, xi[:, 1] + 0j

        if spec.kind == "P":
            g = np.asarray(spec.density(xi), dtype=complex)
            k_in = np.stack([x1, x2, -beta], axis=-1)
            a_in = k_in * (g * np.exp(1j * beta * b))[:, None]
        else:
            q = np.asarray(spec.density(xi), dtype=complex)
            k_in = np.stack([x1, x2, -gamma], axis=-1)
            a_in = np.cross(k_in, q) * np.exp(1j * gamma * b)[:, None]

        if part == "incident":
            return ModeSuperposition(wavevectors=k_in, amplitudes=a_in * weights[:, None])
        if part == "reflected":
            incident = ModeSuperposition(wavevectors=k_in, amplitudes=a_in * weights[:, None])
            return self.reflect_modes(medium, incident)

        # p = Tu^in − 𝒯u^in の面上密度
        k_surface = np.stack([x1, x2, np.zeros_like(x1)], axis=-1)
        if spec.kind == "P":
            vec = np.stack([-x1, -x2, gamma], axis=-1)
            p_hat = 1j * (2.0 * medium.omega ** 2 * beta / denom * g * np.exp(1j * beta * b))[:, None] * vec
        else:
            w = a_in * np.exp(-1j * gamma * b)[:, None]
            horizontal = medium.mu * (denom[:, None] * w[:, :2] + ((beta - gamma) * w[:, 2])[:, None] * xi)
            vertical = medium.omega ** 2 * w[:, 2]
            p_hat = -(2j * gamma / denom * np.exp(1j * gamma * b))[:, None] * np.concatenate(
                [horizontal, vertical[:, None]], axis=-1
            )
        return ModeSuperposition(wavevectors=k_surface, amplitudes=p_hat * weights[:, None])

    def evaluate_beam(
        self,
        medium: ElasticMedium,
        spec: SpectralBeamSpec,
        part: BeamPart,
        x,
        tolerance: Optional[float] = None,
        max_doublings: Optional[int] = None,
    ) -> BeamEvaluation:
        """求積点数を倍増させながら収束するまでビームを評価"""
        self.check_support(medium, spec)
        tolerance = tolerance or settings.beam_tolerance
        max_doublings = settings.beam_max_doublings if max_doublings is None else max_doublings
        points, shape = _as_points(x)

        n_radial, n_angular = 16, 32
        previous = self.beam_modes(medium, spec, part, n_radial, n_angular).evaluate(points)
        estimate = np.inf
        for _ in range(max_doublings):
            n_radial, n_angular = 2 * n_radial, 2 * n_angular
            current = self.beam_modes(medium, spec, part, n_radial, n_angular).evaluate(points)
            scale = max(1.0, float(np.max(np.abs(current), initial=0.0)))
            estimate = float(np.max(np.abs(current - previous), initial=0.0))
            if estimate < tolerance * scale:
                logger.debug(
                    f"Beam quadrature converged: part={part}, n_radial={n_radial}, n_angular={n_angular}",
                    extra={"error_estimate": estimate, "n_points": len(points)},
                )
                return BeamEvaluation(
                    value=current.reshape(shape + (3,)),
                    error_estimate=estimate,
                    n_radial=n_radial,
                    n_angular=n_angular,
                )
            previous = current

        raise QuadratureError(
            f"Beam quadrature did not reach tolerance {tolerance:g}",
            details={"achieved": estimate, "n_radial": n_radial, "n_angular": n_angular, "part": part},
        )

    def eval_incident_beam(self, medium: ElasticMedium, spec: SpectralBeamSpec, x, tolerance: Optional[float] = None) -> np.ndarray:
        points, _ = _as_points(x)
        if np.any(points[:, 2] > spec.reference_height):
            logger.warning("Incident beam evaluated above its reference height")
        return self.evaluate_beam(medium, spec, "incident", x, tolerance).value

    def eval_reflected_beam(self, medium: ElasticMedium, spec: SpectralBeamSpec, x, tolerance: Optional[float] = None) -> np.ndarray:
        points, _ = _as_points(x)
        if np.any(points[:, 2] < 0.0):
            raise ParameterDomainError("Reflected field is defined for x3 >= 0")
        return self.evaluate_beam(medium, spec, "reflected", x, tolerance).value

    def source_density(self, medium: ElasticMedium, spec: SpectralBeamSpec, xprime, tolerance: Optional[float] = None) -> np.ndarray:
        """面上の密度 p(x') = Tu^in − 𝒯u^in"""
        xprime = np.asarray(xprime, dtype=float)
        if xprime.shape[-1] != 2:
            raise ParameterDomainError("Source density is evaluated at horizontal points (..., 2)")
        return self.evaluate_beam(medium, spec, "source_density", xprime, tolerance).value

    # ---- Navier 残差 ----

    @staticmethod
    def default_step(medium: ElasticMedium) -> float:
        """h = 2π/(N κ_s)"""
        return 2.0 * np.pi / (settings.fd_points_per_wavelength * medium.kappa_s)

    @staticmethod
    def _stencil(h: float) -> Tuple[np.ndarray, List[List[np.ndarray]]]:
        """全ステンシル点と ∂_a∂_b の重み"""
        offsets = [np.zeros(3)]
        index = {(0, 0, 0): 0}

        def slot(vec) -> int:
            key = tuple(int(v) for v in vec)
            if key not in index:
                index[key] = len(offsets)
                offsets.append(np.array(key, dtype=float))
            return index[key]

        entries: List[List[dict]] = [[{} for _ in range(3)] for _ in range(3)]
        for a in range(3):
            for s, w in _SECOND.items():
                e = np.zeros(3)
                e[a] = s
                i = slot(e)
                entries[a][a][i] = entries[a][a].get(i, 0.0) + w / (12.0 * h * h)
            for b in range(a + 1, 3):
                for s, ws in _FIRST.items():
                    for t, wt in _FIRST.items():
                        e = np.zeros(3)
                        e[a], e[b] = s, t
                        i = slot(e)
                        entries[a][b][i] = ws * wt / (144.0 * h * h)
                entries[b][a] = entries[a][b]

        weights = []
        for a in range(3):
            row = []
            for b in range(3):
                w = np.zeros(len(offsets))
                for i, v in entries[a][b].items():
                    w[i] = v
                row.append(w)
            weights.append(row)
        return np.array(offsets) * h, weights

    def navier_residual(self, medium: ElasticMedium, evaluator: FieldEvaluator, x, h: Optional[float] = None) -> np.ndarray:
        """μΔu + (λ+μ)∇∇·u + ω²u を4次中心差分で評価"""
        h = h or self.default_step(medium)
        points, shape = _as_points(x)
        offsets, weights = self._stencil(h)

        stencil = points[:, None, :] + offsets[None, :, :]
        values = np.asarray(evaluator(stencil.reshape(-1, 3)), dtype=complex).reshape(len(points), len(offsets), 3)

        hessian = [[np.einsum("p,npj->nj", weights[a][b], values) for b in range(3)] for a in range(3)]
        laplacian = hessian[0][0] + hessian[1][1] + hessian[2][2]
        grad_div = np.stack([sum(hessian[i][j][:, j] for j in range(3)) for i in range(3)], axis=-1)

        residual = (medium.mu * laplacian
                    + (medium.lam + medium.mu) * grad_div
                    + medium.omega ** 2 * values[:, 0, :])
        return residual.reshape(shape + (3,))

    def fd_convergence_order(
        self,
        medium: ElasticMedium,
        evaluator: FieldEvaluator,
        x,
        h: Optional[float] = None,
        levels: int = 3,
    ) -> Tuple[float, np.ndarray]:
        """h, h/2, h/4 の残差ノルムから観測収束次数を推定"""
        h = h or self.default_step(medium)
        steps = h / 2.0 ** np.arange(levels)
        norms = np.array([np.max(np.abs(self.navier_residual(medium, evaluator, x, s))) for s in steps])
        if np.any(norms == 0.0):
            return float("inf"), norms
        order = np.polyfit(np.log(steps), np.log(norms), 1)[0]
        return float(order), norms


# グローバルインスタンス
wave_service = WaveService()

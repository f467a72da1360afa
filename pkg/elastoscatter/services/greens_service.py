import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import jv

from elastoscatter.models.errors import (
    CoincidentPointsError,
    ErrorCode,
    ParameterDomainError,
    QuadratureError,
)
from elastoscatter.models.greens import (
    CorrectionResult,
    GreensParts,
    GreensResult,
    KupradzeReport,
    LayerPotentialResult,
    QuadratureConfig,
)
from elastoscatter.models.medium import ElasticMedium
from elastoscatter.models.spectral import TraceGrid
from elastoscatter.services.medium_service import medium_service
from elastoscatter.services.spectral_service import spectral_service

logger = logging.getLogger(__name__)

COINCIDENCE_DISTANCE = 1e-12
BRANCH_NUDGE = 1e-10
DEFAULT_KUPRADZE_RADII = (10.0, 15.0, 20.0, 30.0, 40.0, 55.0, 80.0)


def _pairs(x, y) -> Tuple[np.ndarray, np.ndarray]:
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    ys = np.atleast_2d(np.asarray(y, dtype=float))
    xs, ys = np.broadcast_arrays(xs, ys)
    if xs.shape[-1] != 3:
        raise ParameterDomainError("Points must be 3-vectors")
    return xs.reshape(-1, 3), ys.reshape(-1, 3)


def _stack3(xi: np.ndarray, third: np.ndarray) -> np.ndarray:
    return np.stack([xi[..., 0] + 0j, xi[..., 1] + 0j, third], axis=-1)


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., :, None] * b[..., None, :]


class GreensService:
    """自由空間・半空間グリーンテンソルと層ポテンシャル"""

    # ---- 自由空間 ----

    @staticmethod
    def _scalar_and_hessian(kappa: float, r: np.ndarray, rhat: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """g = e^{iκr}/(4πr) と ∂ᵢ∂ⱼg"""
        g = np.exp(1j * kappa * r) / (4.0 * np.pi * r)
        radial = 3.0 / r ** 2 - 3j * kappa / r - kappa ** 2
        isotropic = 1j * kappa / r - 1.0 / r ** 2
        hessian = g[:, None, None] * (radial[:, None, None] * _outer(rhat, rhat) + isotropic[:, None, None] * np.eye(3))
        return g, hessian

    def greens_free_batch(self, medium: ElasticMedium, xs, ys) -> np.ndarray:
        """G(x,y) = (1/μ)g_s I + (1/ω²)∇∇(g_s − g_p)  (N, 3, 3)"""
        xs, ys = _pairs(xs, ys)
        diff = xs - ys
        r = np.linalg.norm(diff, axis=-1)
        if np.any(r < COINCIDENCE_DISTANCE):
            raise CoincidentPointsError(
                "Observation and source points coincide",
                details={"min_distance": float(r.min())},
            )
        rhat = diff / r[:, None]
        g_s, h_s = self._scalar_and_hessian(medium.kappa_s, r, rhat)
        _, h_p = self._scalar_and_hessian(medium.kappa_p, r, rhat)
        return g_s[:, None, None] * np.eye(3) / medium.mu + (h_s - h_p) / medium.omega ** 2

    def greens_free(self, medium: ElasticMedium, x, y) -> np.ndarray:
        return self.greens_free_batch(medium, x, y)[0]

    # ---- 補正積分 U ----

    @staticmethod
    def _angular_moments(rho: float, R: np.ndarray, n_angular: int, method: str) -> Tuple[np.ndarray, np.ndarray]:
        """∫ {1, c, s, c², cs, s²} e^{iρ(R₁c+R₂s)} dt の (細, 粗) 評価"""
        if method == "bessel":
            z = rho * np.hypot(R[:, 0], R[:, 1])
            psi = np.arctan2(R[:, 1], R[:, 0])
            j0, j1, j2 = jv(0, z), jv(1, z), jv(2, z)
            moments = np.stack([
                2.0 * np.pi * j0,
                2j * np.pi * j1 * np.cos(psi),
                2j * np.pi * j1 * np.sin(psi),
                np.pi * (j0 - j2 * np.cos(2.0 * psi)),
                -np.pi * j2 * np.sin(2.0 * psi),
                np.pi * (j0 + j2 * np.cos(2.0 * psi)),
            ], axis=-1) + 0j
            return moments, moments

        t = np.pi * np.arange(2 * n_angular) / n_angular
        c, s = np.cos(t), np.sin(t)
        basis = np.stack([np.ones_like(t), c, s, c * c, c * s, s * s], axis=-1)
        E = np.exp(1j * rho * (R[:, 0:1] * c + R[:, 1:2] * s))
        fine = E @ basis * (np.pi / n_angular)
        coarse = E[:, ::2] @ basis[::2] * (2.0 * np.pi / n_angular)
        return fine, coarse

    @staticmethod
    def _assemble_pieces(moments: np.ndarray, rho: float, beta: complex, gamma: complex, denom: complex) -> Tuple[np.ndarray, np.ndarray]:
        """角度積分済みの M̃_p と M̃_s"""
        i0, ic, is_, icc, ics, iss = (moments[:, k] for k in range(6))
        n = moments.shape[0]
        mp = np.zeros((n, 3, 3), dtype=complex)
        mp[:, 0, 0] = gamma * rho ** 2 * icc
        mp[:, 0, 1] = mp[:, 1, 0] = gamma * rho ** 2 * ics
        mp[:, 1, 1] = gamma * rho ** 2 * iss
        mp[:, 0, 2] = rho ** 3 * ic
        mp[:, 1, 2] = rho ** 3 * is_
        mp[:, 2, 0] = beta * gamma * rho * ic
        mp[:, 2, 1] = beta * gamma * rho * is_
        mp[:, 2, 2] = beta * rho ** 2 * i0

        v = np.zeros((n, 3, 3), dtype=complex)
        v[:, 0, 2] = v[:, 2, 0] = rho * ic
        v[:, 1, 2] = v[:, 2, 1] = rho * is_
        return mp, denom * v - mp

    def _radial_segments(self, medium: ElasticMedium, xi_max: float):
        """分枝点を正則化する変数変換 (κ, 'sin' | 'cosh', τ₀, τ₁)"""
        kp, ks = medium.kappa_p, medium.kappa_s
        mid = 0.5 * (kp + ks)
        return [
            (kp, "sin", 0.0, 0.5 * np.pi),
            (kp, "cosh", 0.0, math.acosh(mid / kp)),
            (ks, "sin", math.asin(mid / ks), 0.5 * np.pi),
            (ks, "cosh", 0.0, math.acosh(xi_max / ks)),
        ]

    def _radial_quadrature(
        self,
        medium: ElasticMedium,
        xs: np.ndarray,
        ys: np.ndarray,
        xi_max: float,
        n_angular: int,
        config: QuadratureConfig,
        prefactor: complex,
    ):
        R = ys[:, :2] - xs[:, :2]
        x3, y3 = xs[:, 2], ys[:, 2]
        n = xs.shape[0]
        shape = (2, n, 3, 3)

        total = np.zeros(shape, dtype=complex)
        quad_error = 0.0
        angular_gap = 0.0
        for kappa, kind, t0, t1 in self._radial_segments(medium, xi_max):
            if t1 <= t0:
                continue
            gap = [0.0]

            def integrand(tau: float) -> np.ndarray:
                if kind == "sin":
                    rho, jac = kappa * math.sin(tau), kappa * math.cos(tau)
                else:
                    rho, jac = kappa * math.cosh(tau), kappa * math.sinh(tau)
                q = rho * rho
                beta = complex(medium_service.vertical_wavenumber(medium.kappa_p, q))
                gamma = complex(medium_service.vertical_wavenumber(medium.kappa_s, q))
                denom = beta * gamma + q
                common = rho * jac / denom * (np.exp(1j * beta * x3) - np.exp(1j * gamma * x3))
                p_phase = (common * np.exp(1j * beta * y3))[:, None, None]
                s_phase = (common * np.exp(1j * gamma * y3))[:, None, None]

                fine, coarse = self._angular_moments(rho, R, n_angular, config.angular_method)
                mp, ms = self._assemble_pieces(fine, rho, beta, gamma, denom)
                value = np.stack([mp * p_phase, ms * s_phase])
                if config.angular_method == "trapezoid":
                    cp, cs = self._assemble_pieces(coarse, rho, beta, gamma, denom)
                    gap[0] = max(gap[0], float(np.max(np.abs(value - np.stack([cp * p_phase, cs * s_phase])))))
                return np.concatenate([value.real.ravel(), value.imag.ravel()])

            result, error, info = quad_vec(
                integrand,
                t0,
                t1,
                epsabs=config.tolerance / (4.0 * abs(prefactor)),
                epsrel=1e-12,
                norm="max",
                limit=config.max_subintervals,
                full_output=True,
            )
            if info.status == 2:
                raise QuadratureError(
                    "Non-finite value in the correction integrand",
                    details={"segment": [kind, kappa, t0, t1]},
                )
            if info.status == 1:
                logger.warning(f"Correction quadrature hit the subinterval limit on a {kind} segment",
                               extra={"error_estimate": float(error)})

            half = result.size // 2
            total += (result[:half] + 1j * result[half:]).reshape(shape)
            quad_error += float(error)
            angular_gap += gap[0] * (t1 - t0)

        return total * prefactor, abs(prefactor) * quad_error, abs(prefactor) * angular_gap

    def correction_batch(self, medium: ElasticMedium, xs, ys, config: Optional[QuadratureConfig] = None) -> CorrectionResult:
        """U(x,y) の P・S 成分（全ペアで求積点を共有）"""
        config = config or QuadratureConfig()
        xs, ys = _pairs(xs, ys)
        if np.any(xs[:, 2] < 0.0) or np.any(ys[:, 2] < 0.0):
            raise ParameterDomainError("Half-space points need x3 >= 0 and y3 >= 0")

        height = float(np.min(xs[:, 2] + ys[:, 2]))
        h_min = config.h_min(medium)
        if height < h_min:
            raise QuadratureError(
                f"x3 + y3 = {height:.3g} is below h_min = {h_min:.3g}; evanescent decay cannot truncate the integral",
                code=ErrorCode.SLOW_CONVERGENCE,
                details={"height": height, "h_min": h_min},
            )

        distance = float(np.max(np.hypot(*(ys[:, :2] - xs[:, :2]).T)))
        xi_max = config.truncation_radius(medium, height)
        n_angular = config.n_angular(medium, distance, xi_max)
        prefactor = 1j / (4.0 * np.pi ** 2 * medium.omega ** 2)

        for doubling in range(config.max_angular_doublings + 1):
            pieces, quad_error, angular_gap = self._radial_quadrature(
                medium, xs, ys, xi_max, n_angular, config, prefactor
            )
            if config.angular_method == "bessel" or angular_gap <= config.tolerance:
                break
            if doubling == config.max_angular_doublings:
                logger.warning(f"Angular quadrature gap {angular_gap:.3g} above tolerance with {n_angular} nodes",
                               extra={"n_pairs": len(xs), "error_estimate": angular_gap})
                break
            n_angular *= 2

        estimate = max(quad_error + angular_gap, 1e-15 * float(np.max(np.abs(pieces), initial=0.0)))
        logger.debug(
            f"Correction integral: xi_max={xi_max:.4g}, n_angular={n_angular}",
            extra={"n_pairs": len(xs), "error_estimate": estimate},
        )
        return CorrectionResult(p=pieces[0], s=pieces[1], error_estimate=estimate, xi_max=xi_max, n_angular=n_angular)

    # ---- 半空間 ----

    def greens_halfspace_batch(
        self,
        medium: ElasticMedium,
        xs,
        ys,
        config: Optional[QuadratureConfig] = None,
        with_parts: bool = False,
    ) -> GreensResult:
        """G_H = G(x,y) − G(x̃,y) + U(x,y)  (N, 3, 3)"""
        xs, ys = _pairs(xs, ys)
        correction = self.correction_batch(medium, xs, ys, config)
        free = self.greens_free_batch(medium, xs, ys)
        image = self.greens_free_batch(medium, xs * np.array([1.0, 1.0, -1.0]), ys)
        value = free - image + correction.total
        parts = GreensParts(free=free, image=image, correction=correction.total) if with_parts else None
        return GreensResult(value=value, error_estimate=correction.error_estimate, parts=parts)

    def greens_halfspace(
        self,
        medium: ElasticMedium,
        x,
        y,
        config: Optional[QuadratureConfig] = None,
        with_parts: bool = False,
    ) -> GreensResult:
        batch = self.greens_halfspace_batch(medium, x, y, config, with_parts)
        parts = None
        if batch.parts is not None:
            parts = GreensParts(free=batch.parts.free[0], image=batch.parts.image[0], correction=batch.parts.correction[0])
        return GreensResult(value=batch.value[0], error_estimate=batch.error_estimate, parts=parts)

    # ---- 層ポテンシャル ----

    def hat_kernel(self, medium: ElasticMedium, x, xi) -> np.ndarray:
        """H(x,ξ) = ∫ T_y G_H(x,(y',0)) e^{iξ·y'} dy'（列ごとのトラクション）"""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        q = np.sum(xi ** 2, axis=-1)
        near_branch = (np.sqrt(np.abs(medium.kappa_p ** 2 - q)) < 1e-9 * medium.kappa_p) | \
                      (np.sqrt(np.abs(medium.kappa_s ** 2 - q)) < 1e-9 * medium.kappa_s)
        xi = np.where(near_branch[..., None], xi * (1.0 + BRANCH_NUDGE), xi)

        eta = -xi
        km = spectral_service.kernel_matrices(medium, eta)
        b, g, d = km.beta, km.gamma, km.denom
        x3 = x[..., 2]
        eb = np.exp(1j * b * x3)[..., None, None]
        eg = np.exp(1j * g * x3)[..., None, None]
        w2 = medium.omega ** 2
        eye = np.eye(3)

        def transformed_free(p_vec, s_vec):
            return (1j / (2.0 * b * w2))[..., None, None] * _outer(p_vec, p_vec) * eb \
                + (1j / (2.0 * g * w2))[..., None, None] * (medium.kappa_s ** 2 * eye - _outer(s_vec, s_vec)) * eg

        g_free = transformed_free(_stack3(eta, -b), _stack3(eta, -g))
        g_image = transformed_free(_stack3(eta, b), _stack3(eta, g))
        tu = (1j / w2) * (eb - eg) / d[..., None, None] * (km.T_p @ km.Mtilde_p + km.T_s @ km.Mtilde_s)

        hat = 1j * km.M_minus @ g_free - 1j * km.M @ g_image + tu
        phase = np.exp(1j * np.sum(xi * x[..., :2], axis=-1))
        return hat * phase[..., None, None]

    def _truncation_estimate(self, medium: ElasticMedium, trace: TraceGrid, spectrum: np.ndarray, lowest: float) -> float:
        values = np.abs(trace.values)
        peak = float(values.max(initial=0.0))
        if peak == 0.0:
            return 0.0
        edge = max(values[0].max(), values[-1].max(), values[:, 0].max(), values[:, -1].max()) / peak

        m = trace.mode_indices()
        ring = np.maximum(np.abs(m[..., 0]), np.abs(m[..., 1])) == trace.n // 2 - 1
        sym = medium_service.spectral_symbols(medium, trace.wavevectors())
        decay = np.maximum(np.abs(np.exp(1j * sym.beta * lowest)), np.abs(np.exp(1j * sym.gamma * lowest)))
        magnitude = np.linalg.norm(spectrum, axis=-1)
        spectral_peak = float(magnitude.max(initial=0.0)) or 1.0
        tail = float(np.max((magnitude * decay)[ring], initial=0.0)) / spectral_peak
        return float(max(edge, tail))

    def layer_potential(
        self,
        medium: ElasticMedium,
        trace: TraceGrid,
        x,
        config: Optional[QuadratureConfig] = None,
    ) -> LayerPotentialResult:
        """∫_{Γ₀} T_y G_H(x,y) v(y) ds(y) をスペクトル領域で評価"""
        config = config or QuadratureConfig()
        x = np.asarray(x, dtype=float)
        points = x.reshape(-1, 3)
        if np.any(points[:, 2] - trace.height <= 0.0):
            raise ParameterDomainError("Layer potential is evaluated strictly above the trace plane")

        spectrum = spectral_service.forward_transform(trace)
        spectrum[trace.nyquist_mask()] = 0.0
        estimate = self._truncation_estimate(medium, trace, spectrum, float(points[:, 2].min() - trace.height))
        if estimate > config.tolerance:
            logger.warning(f"Layer potential window truncation estimate {estimate:.3g}",
                           extra={"error_estimate": estimate})

        xi = trace.wavevectors().reshape(-1, 2)
        vhat = spectrum.reshape(-1, 3)
        active = np.any(vhat != 0.0, axis=-1)
        xi, vhat = xi[active], vhat[active]

        relative = points - np.array([0.0, 0.0, trace.height])
        out = np.zeros((points.shape[0], 3), dtype=complex)
        if len(xi):
            chunk = max(1, 2 ** 16 // len(xi))
            scale = trace.mode_spacing / (2.0 * np.pi)
            for start in range(0, len(points), chunk):
                block = relative[start:start + chunk]
                hat = self.hat_kernel(medium, block[:, None, :], xi[None, :, :])
                out[start:start + chunk] = np.einsum("bmji,mj->bi", hat, vhat) * scale
        return LayerPotentialResult(value=out.reshape(x.shape[:-1] + (3,)), truncation_estimate=estimate)

    def layer_potential_by_propagation(self, medium: ElasticMedium, trace: TraceGrid, x) -> np.ndarray:
        """上方伝播してから水平補間する別経路"""
        x = np.asarray(x, dtype=float)
        points = x.reshape(-1, 3)
        out = np.empty((points.shape[0], 3), dtype=complex)
        for height in np.unique(points[:, 2]):
            rows = points[:, 2] == height
            level = spectral_service.propagate(medium, trace, float(height - trace.height))
            out[rows] = spectral_service.interpolate(level, points[rows, :2])
        return out.reshape(x.shape[:-1] + (3,))

    # ---- 遠方減衰の診断 ----

    def kupradze_decay_diagnostic(
        self,
        medium: ElasticMedium,
        config: Optional[QuadratureConfig] = None,
        direction: Sequence[float] = (0.6, 0.0, 0.8),
        radii: Optional[Sequence[float]] = None,
        anchor: Optional[Sequence[float]] = None,
    ) -> KupradzeReport:
        """x = anchor + r·direction に沿った U_p, U_s の log-log 傾き（y は anchor に固定）"""
        config = config or QuadratureConfig()
        direction = np.asarray(direction, dtype=float)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-12 or direction[2] <= 0.0:
            raise ParameterDomainError("direction must be a unit vector with a positive third component")
        radii = np.asarray(radii if radii is not None else np.array(DEFAULT_KUPRADZE_RADII) / medium.kappa_p, dtype=float)
        if np.any(np.diff(radii) <= 0.0) or radii.min() < 5.0 / medium.kappa_p:
            raise ParameterDomainError("radii must be increasing and at least 5/kappa_p")
        anchor = np.asarray(anchor if anchor is not None else (0.0, 0.0, 1.0 / medium.kappa_p), dtype=float)

        xs = anchor + radii[:, None] * direction
        ys = np.broadcast_to(anchor, xs.shape)
        correction = self.correction_batch(medium, xs, ys, config)
        norms_p = np.linalg.norm(correction.p, axis=(1, 2))
        norms_s = np.linalg.norm(correction.s, axis=(1, 2))
        separation = ys - xs
        distance = np.linalg.norm(separation, axis=-1)
        g_p, _ = self._scalar_and_hessian(medium.kappa_p, distance, separation / distance[:, None])
        norms_free = np.abs(g_p)

        log_r = np.log(radii)
        slope_p = float(np.polyfit(log_r, np.log(norms_p), 1)[0])
        slope_s = float(np.polyfit(log_r, np.log(norms_s), 1)[0])
        slope_free = float(np.polyfit(log_r, np.log(np.abs(norms_free)), 1)[0])

        axis_gap = self.axis_reduction_gap(medium, config, anchor, radii[:3])
        return KupradzeReport(
            radii=radii.tolist(),
            norms_p=norms_p.tolist(),
            norms_s=norms_s.tolist(),
            norms_free=norms_free.tolist(),
            slope_p=slope_p,
            slope_s=slope_s,
            slope_free=slope_free,
            axis_gap=axis_gap,
        )

    def axis_reduction_gap(self, medium: ElasticMedium, config: QuadratureConfig, anchor, radii) -> float:
        """鉛直軸上で2次元求積と Bessel 1次元還元を比較"""
        anchor = np.asarray(anchor, dtype=float)
        xs = anchor + np.asarray(radii, dtype=float)[:, None] * np.array([0.0, 0.0, 1.0])
        ys = np.broadcast_to(anchor, xs.shape)
        full = self.correction_batch(medium, xs, ys, config.model_copy(update={"angular_method": "trapezoid"}))
        reduced = self.correction_batch(medium, xs, ys, config.model_copy(update={"angular_method": "bessel"}))
        return float(np.max(np.abs(full.total - reduced.total)))


# グローバルインスタンス
greens_service = GreensService()

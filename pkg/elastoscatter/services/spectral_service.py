import logging
from typing import Literal, Optional, Sequence, Tuple

import numpy as np

from elastoscatter.config.settings import settings
from elastoscatter.models.errors import ParameterDomainError
from elastoscatter.models.medium import ElasticMedium
from elastoscatter.models.spectral import (
    HelmholtzPotentials,
    KernelMatrices,
    RayleighCoefficients,
    SpectralDecomposition,
    SurfaceFields,
    TraceGrid,
)
from elastoscatter.services.cache_service import cache_service
from elastoscatter.services.medium_service import medium_service

logger = logging.getLogger(__name__)

Direction = Literal["up", "down"]


def _assemble(rows) -> np.ndarray:
    """エントリのリストから (..., r, c) 行列を組み立てる"""
    shape = np.broadcast_shapes(*[np.shape(e) for row in rows for e in row])
    return np.stack(
        [np.stack([np.broadcast_to(np.asarray(e, dtype=complex), shape) for e in row], axis=-1) for row in rows],
        axis=-2,
    )


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., :, None] * b[..., None, :]


def _stack3(xi: np.ndarray, third: np.ndarray) -> np.ndarray:
    """(ξ₁, ξ₂, third)"""
    return np.stack([xi[..., 0] + 0j, xi[..., 1] + 0j, third], axis=-1)


def _apply(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", matrix, vector)


class SpectralService:
    """スペクトル核行列、角スペクトル伝播、DtN 写像、Rayleigh 展開"""

    # ---- 核行列 ----

    @staticmethod
    def traction_symbol(medium: ElasticMedium, k: np.ndarray) -> np.ndarray:
        """モード v e^{ik·x} に対するトラクション行列 T(k)"""
        k = np.asarray(k, dtype=complex)
        T = medium.mu * k[..., 2, None, None] * np.eye(3)
        T[..., :, 2] += medium.mu * k
        T[..., 2, :] += medium.lam * k
        return 1j * T

    @staticmethod
    def _dtn_symbol(medium: ElasticMedium, x1, x2, b, g, d) -> np.ndarray:
        mu, w2, ks2 = medium.mu, medium.omega ** 2, medium.kappa_s ** 2
        c = 2.0 * mu * (x1 ** 2 + x2 ** 2) - w2 + 2.0 * mu * b * g
        M = _assemble([
            [mu * ((g - b) * x2 ** 2 + ks2 * b), -mu * x1 * x2 * (g - b), c * x1],
            [-mu * x1 * x2 * (g - b), mu * ((g - b) * x1 ** 2 + ks2 * b), c * x2],
            [-c * x1, -c * x2, g * w2],
        ])
        return M / d[..., None, None]

    @staticmethod
    def _downward_dtn_symbol(medium: ElasticMedium, x1, x2, b, g, d) -> np.ndarray:
        mu, w2, ks2 = medium.mu, medium.omega ** 2, medium.kappa_s ** 2
        c = 2.0 * mu * (x1 ** 2 + x2 ** 2) - w2 + 2.0 * mu * b * g
        M = _assemble([
            [-mu * ((g - b) * x2 ** 2 + ks2 * b), mu * x1 * x2 * (g - b), c * x1],
            [mu * x1 * x2 * (g - b), -mu * ((g - b) * x1 ** 2 + ks2 * b), c * x2],
            [-c * x1, -c * x2, -g * w2],
        ])
        return M / d[..., None, None]

    def kernel_matrices(self, medium: ElasticMedium, xi) -> KernelMatrices:
        """ξ ごとの全核行列を組み立てる"""
        sym = medium_service.spectral_symbols(medium, xi)
        b, g, d = sym.beta, sym.gamma, sym.denom
        x1 = sym.xi[..., 0] + 0j
        x2 = sym.xi[..., 1] + 0j
        zero = np.zeros_like(b)
        one = np.ones_like(b)
        eye = np.broadcast_to(np.eye(3), b.shape + (3, 3))

        Dtilde = _assemble([
            [x1, one, zero, zero],
            [x2, zero, one, zero],
            [b, zero, zero, one],
            [zero, x1, x2, g],
        ])
        w_p = _stack3(sym.xi, b)
        w_s = _stack3(sym.xi, g)
        p_row = w_s / d[..., None]
        D = np.concatenate([p_row[..., None, :], eye - _outer(w_p, p_row)], axis=-2)

        M_p = _outer(w_p, w_s)
        M_s = d[..., None, None] * eye - M_p
        M_p_down = _outer(_stack3(sym.xi, -b), _stack3(sym.xi, -g))
        M_s_down = d[..., None, None] * eye - M_p_down

        mu, lam = medium.mu, medium.lam
        G = _assemble([
            [2.0 * mu * b * x1, mu * g, zero, mu * x1],
            [2.0 * mu * b * x2, zero, mu * g, mu * x2],
            [2.0 * mu * b ** 2 + lam * medium.kappa_p ** 2, zero, zero, 2.0 * mu * g],
        ])

        V = _assemble([
            [zero, zero, x1],
            [zero, zero, x2],
            [x1, x2, zero],
        ])

        return KernelMatrices(
            xi=sym.xi,
            beta=b,
            gamma=g,
            denom=d,
            Dtilde=Dtilde,
            D=D,
            M_p=M_p,
            M_s=M_s,
            M_p_down=M_p_down,
            M_s_down=M_s_down,
            G=G,
            M=self._dtn_symbol(medium, x1, x2, b, g, d),
            M_minus=self._downward_dtn_symbol(medium, x1, x2, b, g, d),
            V=V,
            Mtilde_p=M_p @ V,
            Mtilde_s=M_s @ V,
            T_p=self.traction_symbol(medium, w_p),
            T_s=self.traction_symbol(medium, w_s),
        )

    def substituted_dtn_symbol(self, medium: ElasticMedium, xi) -> np.ndarray:
        """M(ξ) の β, γ を −β, −γ に置き換えた行列"""
        sym = medium_service.spectral_symbols(medium, xi)
        x1 = sym.xi[..., 0] + 0j
        x2 = sym.xi[..., 1] + 0j
        return self._dtn_symbol(medium, x1, x2, -sym.beta, -sym.gamma, sym.denom)

    @staticmethod
    def asr_kernel(km: KernelMatrices, dz: float, direction: Direction = "up") -> np.ndarray:
        """角スペクトル表現の伝播核"""
        eb = np.exp(1j * km.beta * dz)[..., None, None]
        eg = np.exp(1j * km.gamma * dz)[..., None, None]
        if direction == "up":
            K = km.M_p * eb + km.M_s * eg
        else:
            K = km.M_p_down * eb + km.M_s_down * eg
        return K / km.denom[..., None, None]

    def grid_kernels(self, medium: ElasticMedium, trace: TraceGrid) -> KernelMatrices:
        """グリッドのモードに対する核行列（キャッシュ付き）"""
        key = (medium.cache_key(), trace.cell_length, trace.n, trace.alpha)
        km = cache_service.get_grid_kernels(*key)
        if km is None:
            km = self.kernel_matrices(medium, trace.wavevectors())
            cache_service.set_grid_kernels(*key, data=km)
        return km

    # ---- 離散 Fourier 変換 ----

    @staticmethod
    def forward_transform(trace: TraceGrid) -> np.ndarray:
        """v̂(ξ_m) ≈ (1/2π)∫ v e^{-iξ_m·x'} dx'"""
        phase = np.exp(-1j * trace.coordinates() @ np.asarray(trace.alpha, dtype=float))
        scale = trace.cell_length ** 2 / (2.0 * np.pi * trace.n ** 2)
        return np.fft.fft2(trace.values * phase[..., None], axes=(0, 1)) * scale

    @staticmethod
    def inverse_transform(trace: TraceGrid, spectrum: np.ndarray, height: Optional[float] = None) -> TraceGrid:
        """v(x_j) = (2π/L²) Σ_m v̂_m e^{iξ_m·x_j}"""
        phase = np.exp(1j * trace.coordinates() @ np.asarray(trace.alpha, dtype=float))
        scale = trace.n ** 2 * 2.0 * np.pi / trace.cell_length ** 2
        values = np.fft.ifft2(spectrum, axes=(0, 1)) * scale * phase[..., None]
        return trace.with_values(values, height=height)

    def interpolate(self, trace: TraceGrid, xprime) -> np.ndarray:
        """三角多項式補間で任意の水平点の値を評価"""
        xprime = np.asarray(xprime, dtype=float)
        spectrum = self.forward_transform(trace).reshape(-1, 3)
        xi = trace.wavevectors().reshape(-1, 2)
        phase = np.exp(1j * xprime.reshape(-1, 2) @ xi.T)
        values = phase @ spectrum * (2.0 * np.pi / trace.cell_length ** 2)
        return values.reshape(xprime.shape[:-1] + (3,))

    # ---- 分解・伝播・DtN ----

    def decompose_trace(self, medium: ElasticMedium, trace: TraceGrid) -> SpectralDecomposition:
        """A(ξ) = D(ξ) v̂(ξ)"""
        km = self.grid_kernels(medium, trace)
        A = _apply(km.D, self.forward_transform(trace))
        return SpectralDecomposition(
            xi=km.xi,
            beta=km.beta,
            gamma=km.gamma,
            A_p=A[..., 0],
            A_s=A[..., 1:],
            mode_spacing=trace.mode_spacing,
        )

    def propagate(self, medium: ElasticMedium, trace: TraceGrid, dz: float, direction: Direction = "up") -> TraceGrid:
        """トレースを dz だけ上方（または下方）へ伝播"""
        if direction not in ("up", "down"):
            raise ParameterDomainError(f"Unknown propagation direction: {direction}")
        if not np.isfinite(dz) or dz < 0.0:
            raise ParameterDomainError("Propagation distance dz must be non-negative", details={"dz": dz})

        if dz == 0.0:
            logger.warning("Propagation with dz = 0 is the identity")
            return trace.with_values(trace.values.copy())

        km = self.grid_kernels(medium, trace)
        if np.any(np.abs(np.exp(1j * km.beta * dz)) > 1.0 + 1e-12):
            logger.warning("Evanescent amplification detected in propagation kernel")

        spectrum = self.forward_transform(trace)
        spectrum[trace.nyquist_mask()] = 0.0
        propagated = _apply(self.asr_kernel(km, dz, direction), spectrum)
        height = trace.height + dz if direction == "up" else trace.height - dz
        return self.inverse_transform(trace, propagated, height=height)

    def apply_dtn(self, medium: ElasticMedium, trace: TraceGrid, direction: Direction = "up") -> TraceGrid:
        """DtN 写像: トラクション = iM(ξ)v̂ (上向き) / iM⁻(ξ)v̂ (下向き)"""
        if direction not in ("up", "down"):
            raise ParameterDomainError(f"Unknown DtN direction: {direction}")
        km = self.grid_kernels(medium, trace)
        spectrum = self.forward_transform(trace)
        spectrum[trace.nyquist_mask()] = 0.0
        symbol = km.M if direction == "up" else km.M_minus
        return self.inverse_transform(trace, 1j * _apply(symbol, spectrum))

    # ---- Rayleigh 展開 ----

    def rayleigh_coefficients(self, medium: ElasticMedium, trace: TraceGrid) -> RayleighCoefficients:
        km = self.grid_kernels(medium, trace)
        u_n = self.forward_transform(trace) * (2.0 * np.pi / trace.cell_length ** 2)
        A = _apply(km.D, u_n)
        return RayleighCoefficients(
            alpha_n=km.xi,
            beta_n=km.beta,
            gamma_n=km.gamma,
            u_n=u_n,
            A_p=A[..., 0],
            A_s=A[..., 1:],
            height=trace.height,
        )

    def rayleigh_evaluate(self, medium: ElasticMedium, coefficients: RayleighCoefficients, x) -> np.ndarray:
        """P・S Rayleigh モードの直接和"""
        x = np.asarray(x, dtype=float)
        points = x.reshape(-1, 3)
        if np.any(points[:, 2] < coefficients.height - 1e-12):
            raise ParameterDomainError("Rayleigh expansion is evaluated only above its reference plane",
                                       details={"height": coefficients.height})

        alpha = coefficients.alpha_n.reshape(-1, 2)
        beta = coefficients.beta_n.reshape(-1)
        gamma = coefficients.gamma_n.reshape(-1)
        p_vectors = coefficients.A_p.reshape(-1)[:, None] * _stack3(alpha, beta)
        s_vectors = coefficients.A_s.reshape(-1, 3)

        out = np.empty((points.shape[0], 3), dtype=complex)
        chunk = max(1, settings.evaluation_chunk_size)
        for start in range(0, points.shape[0], chunk):
            block = points[start:start + chunk]
            horizontal = np.exp(1j * block[:, :2] @ alpha.T)
            dz = (block[:, 2] - coefficients.height)[:, None]
            out[start:start + chunk] = (horizontal * np.exp(1j * dz * beta)) @ p_vectors \
                + (horizontal * np.exp(1j * dz * gamma)) @ s_vectors
        return out.reshape(x.shape[:-1] + (3,))

    # ---- Helmholtz 分解 ----

    def helmholtz_potentials(self, medium: ElasticMedium, decomposition: SpectralDecomposition) -> HelmholtzPotentials:
        """φ̂ = −iA_p, ψ̂ = i(ξ,γ)×A_s/κ_s²"""
        k_s = _stack3(decomposition.xi, decomposition.gamma)
        psi = 1j * np.cross(k_s, decomposition.A_s) / medium.kappa_s ** 2
        return HelmholtzPotentials(phi=-1j * decomposition.A_p, psi=psi)

    # ---- 流束恒等式用の面上量 ----

    def surface_fields(self, medium: ElasticMedium, trace: TraceGrid) -> SurfaceFields:
        """上向き拡張の変位勾配とトラクションを面上で評価"""
        km = self.grid_kernels(medium, trace)
        spectrum = self.forward_transform(trace)
        A = _apply(km.D, spectrum)
        p_part = A[..., 0, None] * _stack3(km.xi, km.beta)
        s_part = A[..., 1:]

        spectral_grad = [
            1j * km.xi[..., 0, None] * spectrum,
            1j * km.xi[..., 1, None] * spectrum,
            1j * km.beta[..., None] * p_part + 1j * km.gamma[..., None] * s_part,
        ]
        grad = np.stack([self.inverse_transform(trace, s).values for s in spectral_grad])
        traction = self.inverse_transform(trace, 1j * _apply(km.M, spectrum)).values
        return SurfaceFields(u=trace.values, grad=grad, traction=traction, cell_area=trace.spacing ** 2)

    def surface_flux_integrals(self, medium: ElasticMedium, trace: TraceGrid) -> Tuple[float, float]:
        """セル上の Im∫Tu·ū と ∫[2Re(Tu·∂₃ū) − ℰ(u,ū) + ω²|u|²]"""
        f = self.surface_fields(medium, trace)
        u, grad, T = f.u, f.grad, f.traction

        energy = np.imag(np.sum(T * np.conj(u))) * f.cell_area

        div = grad[0][..., 0] + grad[1][..., 1] + grad[2][..., 2]
        curl = np.stack([
            grad[1][..., 2] - grad[2][..., 1],
            grad[2][..., 0] - grad[0][..., 2],
            grad[0][..., 1] - grad[1][..., 0],
        ], axis=-1)
        bilinear = (2.0 * medium.mu * np.sum(np.abs(grad) ** 2, axis=(0, -1))
                    + medium.lam * np.abs(div) ** 2
                    - medium.mu * np.sum(np.abs(curl) ** 2, axis=-1))
        integrand = (2.0 * np.real(np.sum(T * np.conj(grad[2]), axis=-1))
                     - bilinear
                     + medium.omega ** 2 * np.sum(np.abs(u) ** 2, axis=-1))
        rellich = float(np.sum(integrand) * f.cell_area)
        return float(energy), rellich

    @staticmethod
    def mode_flux_sums(medium: ElasticMedium, decomposition: SpectralDecomposition) -> Tuple[float, float]:
        """伝播モードの和: エネルギー流束と Rellich 流束"""
        propagating_p = decomposition.beta.imag == 0.0
        propagating_s = decomposition.gamma.imag == 0.0
        beta = decomposition.beta.real
        gamma = decomposition.gamma.real
        abs_p = np.abs(decomposition.A_p) ** 2
        abs_s = np.sum(np.abs(decomposition.A_s) ** 2, axis=-1)

        w2 = medium.omega ** 2
        energy = (w2 * np.sum((beta * abs_p)[propagating_p])
                  + medium.mu * np.sum((gamma * abs_s)[propagating_s]))
        rellich = (2.0 * w2 * np.sum((beta ** 2 * abs_p)[propagating_p])
                   + 2.0 * medium.mu * np.sum((gamma ** 2 * abs_s)[propagating_s]))
        return float(energy * decomposition.mode_spacing), float(rellich * decomposition.mode_spacing)

    # ---- 乱数トレース ----

    def random_trace(
        self,
        cell_length: float,
        n: int,
        alpha: Sequence[float] = (0.0, 0.0),
        height: float = 0.0,
        seed: int = 0,
        evanescent_only: bool = False,
        medium: Optional[ElasticMedium] = None,
    ) -> TraceGrid:
        """モード番号に対し (1+|m|)⁻² で減衰する乱数スペクトルのトレース"""
        template = TraceGrid(
            cell_length=cell_length,
            n=n,
            alpha=tuple(float(a) for a in alpha),
            height=height,
            values=np.zeros((n, n, 3), dtype=complex),
        )
        rng = np.random.default_rng(seed)
        m = template.mode_indices()
        weight = (1.0 + np.hypot(m[..., 0], m[..., 1])) ** -2
        spectrum = (rng.standard_normal((n, n, 3)) + 1j * rng.standard_normal((n, n, 3))) * weight[..., None]
        spectrum[template.nyquist_mask()] = 0.0

        if evanescent_only:
            if medium is None:
                raise ParameterDomainError("An evanescent-only trace needs the medium")
            xi = template.wavevectors()
            spectrum[np.hypot(xi[..., 0], xi[..., 1]) <= medium.kappa_s] = 0.0

        return self.inverse_transform(template, spectrum)


# グローバルインスタンス
spectral_service = SpectralService()

import logging
from typing import Union

import numpy as np

from elastoscatter.models.errors import ParameterDomainError
from elastoscatter.models.medium import ElasticMedium, SpectralSymbols

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, list, tuple]


class MediumService:
    """媒質パラメータとスペクトル記号"""

    def make_medium(self, lam: float, mu: float, omega: float) -> ElasticMedium:
        """ラメ定数と角周波数から媒質を生成"""
        lam, mu, omega = float(lam), float(mu), float(omega)
        details = {"lambda": lam, "mu": mu, "omega": omega}

        if not all(np.isfinite([lam, mu, omega])):
            raise ParameterDomainError("Medium parameters must be finite", details=details)
        if mu <= 0.0:
            raise ParameterDomainError("Shear modulus mu must be positive", details=details)
        if lam + 2.0 * mu / 3.0 <= 0.0:
            raise ParameterDomainError("lambda + 2*mu/3 must be positive", details=details)
        if omega <= 0.0:
            raise ParameterDomainError("Angular frequency omega must be positive", details=details)

        kappa_p = omega / np.sqrt(lam + 2.0 * mu)
        kappa_s = omega / np.sqrt(mu)
        logger.debug(f"Medium created: kappa_p={kappa_p:.6g}, kappa_s={kappa_s:.6g}")
        return ElasticMedium(lam=lam, mu=mu, omega=omega, kappa_p=float(kappa_p), kappa_s=float(kappa_s))

    @staticmethod
    def vertical_wavenumber(kappa: float, xi_norm2: ArrayLike) -> np.ndarray:
        """sqrt(κ²−|ξ|²) を Im ≥ 0 の分枝で評価（円周上は厳密に0）"""
        diff = kappa * kappa - np.asarray(xi_norm2, dtype=float)
        root = np.sqrt(np.abs(diff))
        return np.where(diff >= 0.0, root + 0j, 1j * root)

    def spectral_symbols(self, medium: ElasticMedium, xi: ArrayLike) -> SpectralSymbols:
        """β(ξ), γ(ξ), βγ+|ξ|² を計算"""
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != 2:
            raise ParameterDomainError("xi must have a trailing dimension of 2", details={"shape": list(xi.shape)})
        if not np.all(np.isfinite(xi)):
            raise ParameterDomainError("xi must be finite")

        q = xi[..., 0] ** 2 + xi[..., 1] ** 2
        beta = self.vertical_wavenumber(medium.kappa_p, q)
        gamma = self.vertical_wavenumber(medium.kappa_s, q)
        return SpectralSymbols(xi=xi, beta=beta, gamma=gamma, denom=beta * gamma + q)


# グローバルインスタンス
medium_service = MediumService()

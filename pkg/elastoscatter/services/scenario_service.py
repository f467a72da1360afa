import logging
import re
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import ValidationError

from elastoscatter.models.errors import (
    CoincidentPointsError,
    ErrorCode,
    InvariantViolationError,
    ScenarioParseError,
)
from elastoscatter.models.greens import QuadratureConfig
from elastoscatter.models.medium import ElasticMedium
from elastoscatter.models.scenario import REQUIRED_INCIDENCE, SUPPORTED_OUTPUTS, Scenario
from elastoscatter.models.waves import GaussianDensity, PlaneWaveSpec, SpectralBeamSpec
from elastoscatter.services.grid_service import grid_service
from elastoscatter.services.medium_service import medium_service
from elastoscatter.services.wave_service import wave_service

logger = logging.getLogger(__name__)

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")

# ビーム台の既定半径（σ の倍数）
DEFAULT_SUPPORT_SIGMAS = 4.0


def _validation_errors(e: ValidationError) -> list:
    return [{"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]} for err in e.errors()]


class ScenarioService:
    """シナリオファイルの解析とドメインオブジェクトの構築"""

    # ---- 解析 ----

    def parse_text(self, text: str) -> Dict[str, Any]:
        """`a.b = value` 形式の行をネストした辞書へ変換"""
        tree: Dict[str, Any] = {}
        seen: Dict[str, int] = {}

        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ScenarioParseError(f"Line {lineno}: expected 'key = value'", details={"line": lineno, "text": raw})

            key, value = (part.strip() for part in line.split("=", 1))
            if not _KEY.match(key):
                raise ScenarioParseError(f"Line {lineno}: invalid key '{key}'", details={"line": lineno, "key": key})
            if key in seen:
                raise ScenarioParseError(
                    f"Line {lineno}: duplicate key '{key}' (first set on line {seen[key]})",
                    details={"line": lineno, "key": key},
                )
            if not value:
                raise ScenarioParseError(f"Line {lineno}: empty value for '{key}'", details={"line": lineno, "key": key})
            seen[key] = lineno

            if "," in value:
                items = [item.strip() for item in value.split(",")]
                if any(not item for item in items):
                    raise ScenarioParseError(f"Line {lineno}: empty list item for '{key}'", details={"line": lineno, "key": key})
                parsed: Any = items
            else:
                parsed = value

            *sections, leaf = key.split(".")
            node = tree
            for section in sections:
                child = node.setdefault(section, {})
                if not isinstance(child, dict):
                    raise ScenarioParseError(f"Line {lineno}: '{section}' is both a value and a section",
                                             details={"line": lineno, "key": key})
                node = child
            if isinstance(node.get(leaf), dict):
                raise ScenarioParseError(f"Line {lineno}: '{key}' is already a section", details={"line": lineno, "key": key})
            node[leaf] = parsed

        return tree

    def parse(self, text: str) -> Scenario:
        tree = self.parse_text(text)
        try:
            return Scenario.model_validate(tree)
        except ValidationError as e:
            raise ScenarioParseError("Scenario does not match the schema", details={"errors": _validation_errors(e)})

    def load(self, path: Union[str, Path]) -> Scenario:
        """シナリオファイルを読み込み"""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ScenarioParseError(f"Cannot read scenario file: {e}", details={"path": str(path)})
        scenario = self.parse(text)
        logger.info(f"Scenario loaded: {path}")
        return scenario

    def apply_overrides(self, scenario: Scenario, seed: Optional[int] = None, tolerance: Optional[float] = None) -> Scenario:
        """コマンドライン引数による上書き"""
        update: Dict[str, Any] = {}
        if seed is not None:
            update["seed"] = int(seed)
        if tolerance is not None:
            if not np.isfinite(tolerance) or tolerance <= 0.0:
                raise ScenarioParseError("--tolerance must be a positive number", details={"tolerance": tolerance})
            update["quadrature"] = scenario.quadrature.model_copy(
                update={"tolerance": float(tolerance), "beam_tolerance": float(tolerance)}
            )
        return scenario.model_copy(update=update) if update else scenario

    # ---- ドメインオブジェクト ----

    def build_medium(self, scenario: Scenario) -> ElasticMedium:
        m = scenario.medium
        return medium_service.make_medium(m.lam, m.mu, m.omega)

    def quadrature_config(self, scenario: Scenario) -> QuadratureConfig:
        try:
            return scenario.quadrature.to_config()
        except ValidationError as e:
            raise InvariantViolationError("Invalid quadrature overrides", details={"errors": _validation_errors(e)})

    def plane_spec(self, scenario: Scenario) -> PlaneWaveSpec:
        inc = scenario.incidence
        try:
            return PlaneWaveSpec(
                theta=inc.theta,
                phi=inc.phi,
                c_p=inc.c_p,
                c_s1=inc.c_s1,
                c_s2=inc.c_s2,
                d1=tuple(inc.d1) if inc.d1 is not None else None,
                d2=tuple(inc.d2) if inc.d2 is not None else None,
            )
        except ValidationError as e:
            raise InvariantViolationError("Invalid plane-wave incidence", details={"errors": _validation_errors(e)})

    def beam_spec(self, scenario: Scenario) -> SpectralBeamSpec:
        inc = scenario.incidence
        if inc.sigma is None:
            raise ScenarioParseError("Beam incidence needs incidence.sigma", details={"key": "incidence.sigma"})
        if len(inc.center) != 2:
            raise ScenarioParseError("incidence.center needs two components", details={"center": inc.center})
        try:
            if inc.kind == "P":
                density = GaussianDensity(center=tuple(inc.center), sigma=inc.sigma, amplitude=inc.amplitude)
            else:
                polarization = inc.polarization or ["0", "1", "0"]
                density = GaussianDensity(center=tuple(inc.center), sigma=inc.sigma, polarization=polarization)
            return SpectralBeamSpec(
                kind=inc.kind,
                density=density,
                support_center=tuple(inc.center),
                support_radius=inc.support_radius or DEFAULT_SUPPORT_SIGMAS * inc.sigma,
                reference_height=inc.reference_height,
            )
        except (ValidationError, ValueError) as e:
            details = {"errors": _validation_errors(e)} if isinstance(e, ValidationError) else {"error": str(e)}
            raise InvariantViolationError("Invalid beam incidence", details=details)

    def point_source(self, scenario: Scenario) -> tuple:
        """(ソース点 y, 偏光 p)"""
        inc = scenario.incidence
        if inc.position is None:
            raise ScenarioParseError("Point-source incidence needs incidence.position", details={"key": "incidence.position"})
        if len(inc.position) != 3 or len(inc.direction) != 3:
            raise ScenarioParseError("incidence.position and incidence.direction need three components")
        y = np.asarray(inc.position, dtype=float)
        p = np.asarray(inc.direction, dtype=float)
        if not np.all(np.isfinite(y)) or y[2] <= 0.0:
            raise InvariantViolationError("Point source must lie strictly above the surface", details={"position": inc.position})
        if not np.any(p != 0.0):
            raise InvariantViolationError("Point-source direction must be non-zero", details={"direction": inc.direction})
        return y, p

    # ---- 不変条件 ----

    def check_outputs(self, subcommand: str, scenario: Scenario):
        supported = SUPPORTED_OUTPUTS[subcommand]
        # validate はフィールドを書かないので outputs を無視する
        quantities = scenario.outputs.quantities if supported else []
        for quantity in quantities:
            if quantity not in supported:
                raise ScenarioParseError(
                    f"Output '{quantity}' is not available for {subcommand}",
                    code=ErrorCode.UNSUPPORTED_OUTPUT,
                    details={"subcommand": subcommand, "supported": list(supported)},
                )
        required = REQUIRED_INCIDENCE.get(subcommand)
        if required is not None and scenario.incidence.type != required:
            raise ScenarioParseError(
                f"{subcommand} needs incidence.type = {required}",
                details={"incidence.type": scenario.incidence.type},
            )

    def check_invariants(self, subcommand: str, scenario: Scenario, medium: ElasticMedium):
        """出力ディレクトリを作る前に行う検査"""
        self.check_outputs(subcommand, scenario)
        self.quadrature_config(scenario)
        if subcommand in ("validate", "propagate"):
            if subcommand == "propagate":
                heights = np.asarray(scenario.trace.heights, dtype=float)
                if heights.size == 0 or not np.all(np.isfinite(heights)) or np.any(heights < 0.0):
                    raise InvariantViolationError("trace.heights must be non-negative distances",
                                                  details={"heights": scenario.trace.heights})
            return

        points = grid_service.points(scenario.grid)
        lowest = float(points[:, 2].min())

        if subcommand in ("reflect", "beam") and lowest < 0.0:
            raise InvariantViolationError("Grid must lie on or above the surface", details={"min_x3": lowest})

        if subcommand == "beam":
            wave_service.check_support(medium, self.beam_spec(scenario))

        if subcommand == "greens":
            y, _ = self.point_source(scenario)
            if lowest <= 0.0:
                raise InvariantViolationError("Green tensor grid must lie strictly above the surface",
                                              details={"min_x3": lowest})
            if "residual" in scenario.outputs.quantities:
                h = scenario.outputs.fd_step or wave_service.default_step(medium)
                if lowest <= 2.0 * h:
                    raise InvariantViolationError("Residual stencil would cross the surface",
                                                  details={"min_x3": lowest, "fd_step": h})
            if np.any(np.linalg.norm(points - y, axis=-1) < 1e-12):
                raise CoincidentPointsError("Grid contains the source point", details={"position": y.tolist()})


# グローバルインスタンス
scenario_service = ScenarioService()

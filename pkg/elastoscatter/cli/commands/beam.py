import logging
import threading

import numpy as np

from elastoscatter.config.settings import settings
from elastoscatter.models.run import CommandOutput, PreparedRun, RunContext
from elastoscatter.models.scenario import Scenario
from elastoscatter.services.field_io_service import field_io_service
from elastoscatter.services.grid_service import grid_service
from elastoscatter.services.scenario_service import scenario_service
from elastoscatter.services.wave_service import wave_service

logger = logging.getLogger(__name__)


def prepare(scenario: Scenario) -> PreparedRun:
    medium = scenario_service.build_medium(scenario)
    scenario_service.check_invariants("beam", scenario, medium)
    return PreparedRun(
        scenario=scenario,
        medium=medium,
        points=grid_service.points(scenario.grid),
        payload={"spec": scenario_service.beam_spec(scenario)},
    )


def run(prepared: PreparedRun, context: RunContext) -> CommandOutput:
    """入射ビームと反射ビームの和を評価"""
    medium, scenario, points = prepared.medium, prepared.scenario, prepared.points
    spec = prepared.payload["spec"]
    tolerance = scenario.quadrature.beam_tolerance or settings.beam_tolerance
    h = scenario.outputs.fd_step or wave_service.default_step(medium)

    lock = threading.Lock()
    estimates = []

    def total(chunk: np.ndarray):
        incident = wave_service.evaluate_beam(medium, spec, "incident", chunk, tolerance)
        reflected = wave_service.evaluate_beam(medium, spec, "reflected", chunk, tolerance)
        with lock:
            estimates.append(incident.error_estimate + reflected.error_estimate)
        return incident, reflected

    def displacement(chunk: np.ndarray) -> np.ndarray:
        incident, reflected = total(chunk)
        return incident.value + reflected.value

    def traction(chunk: np.ndarray) -> np.ndarray:
        # 収束した細かい方の求積点でモードを作り直す
        incident, reflected = total(chunk)
        n_radial = max(incident.n_radial, reflected.n_radial)
        n_angular = max(incident.n_angular, reflected.n_angular)
        modes = (wave_service.beam_modes(medium, spec, "incident", n_radial, n_angular)
                 + wave_service.beam_modes(medium, spec, "reflected", n_radial, n_angular))
        return wave_service.traction_plane(medium, modes, chunk)

    def residual(chunk: np.ndarray) -> np.ndarray:
        return wave_service.navier_residual(medium, displacement, chunk, h)

    evaluators = {"displacement": displacement, "traction": traction, "residual": residual}

    files = []
    for quantity in scenario.outputs.quantities:
        values = grid_service.map_chunks(evaluators[quantity], points, context.threads)
        files.append(field_io_service.write_field(context.out_dir, quantity, points, values, context.format))

    logger.info(f"{spec.kind} beam evaluated", extra={"run_id": context.run_id, "n_points": len(points)})
    return CommandOutput(
        files=files,
        metadata={
            "grid": grid_service.geometry(scenario.grid),
            "beam_tolerance": tolerance,
            "max_error_estimate": max(estimates, default=0.0),
            "support": {"center": list(spec.support_center), "radius": spec.support_radius},
            "fd_step": h if "residual" in scenario.outputs.quantities else None,
            "field": "total displacement u_in + u_re",
        },
    )

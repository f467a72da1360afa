import logging
import threading

import numpy as np

from elastoscatter.config.settings import settings
from elastoscatter.models.run import CommandOutput, PreparedRun, RunContext
from elastoscatter.models.scenario import Scenario
from elastoscatter.services.field_io_service import field_io_service
from elastoscatter.services.greens_service import greens_service
from elastoscatter.services.grid_service import grid_service
from elastoscatter.services.scenario_service import scenario_service
from elastoscatter.services.wave_service import wave_service

logger = logging.getLogger(__name__)

# 残差はステンシル点ごとに U を求積するのでチャンクを小さくする
RESIDUAL_CHUNK_DIVISOR = 16


def prepare(scenario: Scenario) -> PreparedRun:
    medium = scenario_service.build_medium(scenario)
    scenario_service.check_invariants("greens", scenario, medium)
    y, p = scenario_service.point_source(scenario)
    return PreparedRun(
        scenario=scenario,
        medium=medium,
        points=grid_service.points(scenario.grid),
        payload={"source": y, "direction": p, "quadrature": scenario_service.quadrature_config(scenario)},
    )


def run(prepared: PreparedRun, context: RunContext) -> CommandOutput:
    """点源入射の全場 u = G_H(·, y)·p"""
    medium, scenario, points = prepared.medium, prepared.scenario, prepared.points
    y, p = prepared.payload["source"], prepared.payload["direction"]
    config = prepared.payload["quadrature"]
    h = scenario.outputs.fd_step or wave_service.default_step(medium)

    lock = threading.Lock()
    estimates = []

    def displacement(chunk: np.ndarray) -> np.ndarray:
        result = greens_service.greens_halfspace_batch(medium, chunk, np.broadcast_to(y, chunk.shape), config)
        with lock:
            estimates.append(result.error_estimate)
        return result.value @ p

    def residual(chunk: np.ndarray) -> np.ndarray:
        return wave_service.navier_residual(medium, displacement, chunk, h)

    files = []
    for quantity in scenario.outputs.quantities:
        if quantity == "displacement":
            values = grid_service.map_chunks(displacement, points, context.threads)
        else:
            chunk_size = max(1, settings.evaluation_chunk_size // RESIDUAL_CHUNK_DIVISOR)
            values = grid_service.map_chunks(residual, points, context.threads, chunk_size)
        files.append(field_io_service.write_field(context.out_dir, quantity, points, values, context.format))

    logger.info("Half-space Green tensor evaluated",
                extra={"run_id": context.run_id, "n_points": len(points), "error_estimate": max(estimates, default=0.0)})
    return CommandOutput(
        files=files,
        metadata={
            "grid": grid_service.geometry(scenario.grid),
            "source": y.tolist(),
            "direction": p.tolist(),
            "quadrature": config.model_dump(),
            "max_error_estimate": max(estimates, default=0.0),
            "fd_step": h if "residual" in scenario.outputs.quantities else None,
            "field": "G_H(x, y) p",
        },
    )

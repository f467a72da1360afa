import logging

import numpy as np
from pydantic import ValidationError

from elastoscatter.models.errors import InvariantViolationError
from elastoscatter.models.run import CommandOutput, PreparedRun, RunContext
from elastoscatter.models.scenario import Scenario
from elastoscatter.services.field_io_service import field_io_service
from elastoscatter.services.scenario_service import scenario_service
from elastoscatter.services.spectral_service import spectral_service

logger = logging.getLogger(__name__)


def prepare(scenario: Scenario) -> PreparedRun:
    """乱数トレースを生成"""
    medium = scenario_service.build_medium(scenario)
    scenario_service.check_invariants("propagate", scenario, medium)
    t = scenario.trace
    try:
        trace = spectral_service.random_trace(
            cell_length=t.cell_length,
            n=t.n,
            alpha=t.alpha,
            height=t.height,
            seed=scenario.seed,
            evanescent_only=t.evanescent_only,
            medium=medium,
        )
    except ValidationError as e:
        raise InvariantViolationError("Invalid trace grid", details={"error": str(e)})
    return PreparedRun(scenario=scenario, medium=medium, payload={"trace": trace})


def _flatten(level) -> tuple:
    """x₁ が最も速く変化する順に並べ替え"""
    xy = level.coordinates().transpose(1, 0, 2).reshape(-1, 2)
    points = np.concatenate([xy, np.full((len(xy), 1), level.height)], axis=-1)
    return points, level.values.transpose(1, 0, 2).reshape(-1, 3)


def run(prepared: PreparedRun, context: RunContext) -> CommandOutput:
    """各伝播距離の面上で変位と DtN トラクションを出力"""
    medium, scenario = prepared.medium, prepared.scenario
    trace = prepared.payload["trace"]
    direction = scenario.trace.direction

    levels = [spectral_service.propagate(medium, trace, float(dz), direction) for dz in scenario.trace.heights]
    outputs = {
        "displacement": levels,
        "traction": [spectral_service.apply_dtn(medium, level, direction) for level in levels]
        if "traction" in scenario.outputs.quantities else [],
    }

    files = []
    for quantity in scenario.outputs.quantities:
        flattened = [_flatten(level) for level in outputs[quantity]]
        points = np.concatenate([f[0] for f in flattened])
        values = np.concatenate([f[1] for f in flattened])
        files.append(field_io_service.write_field(context.out_dir, quantity, points, values, context.format))

    logger.info(f"Trace propagated to {len(levels)} levels",
                extra={"run_id": context.run_id, "n_points": trace.n * trace.n * len(levels)})
    return CommandOutput(
        files=files,
        metadata={
            "trace": {
                "cell_length": trace.cell_length,
                "n": trace.n,
                "alpha": list(trace.alpha),
                "height": trace.height,
                "direction": direction,
                "levels": [level.height for level in levels],
                "ordering": "level, then x1 fastest, then x2",
            },
        },
    )

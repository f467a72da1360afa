import logging

from elastoscatter.models.run import CommandOutput, PreparedRun, RunContext
from elastoscatter.models.scenario import Scenario
from elastoscatter.services.field_io_service import field_io_service
from elastoscatter.services.grid_service import grid_service
from elastoscatter.services.scenario_service import scenario_service
from elastoscatter.services.wave_service import wave_service

logger = logging.getLogger(__name__)


def prepare(scenario: Scenario) -> PreparedRun:
    """平面波入射の検査と構築"""
    medium = scenario_service.build_medium(scenario)
    scenario_service.check_invariants("reflect", scenario, medium)
    spec = scenario_service.plane_spec(scenario)
    return PreparedRun(
        scenario=scenario,
        medium=medium,
        points=grid_service.points(scenario.grid),
        payload={"spec": spec},
    )


def run(prepared: PreparedRun, context: RunContext) -> CommandOutput:
    """全場 u^in + u^re を格子上で評価"""
    medium, scenario, points = prepared.medium, prepared.scenario, prepared.points
    incident = wave_service.incident_plane_modes(medium, prepared.payload["spec"])
    total = incident + wave_service.reflect_modes(medium, incident)
    h = scenario.outputs.fd_step or wave_service.default_step(medium)

    evaluators = {
        "displacement": total.evaluate,
        "traction": lambda chunk: wave_service.traction_plane(medium, total, chunk),
        "residual": lambda chunk: wave_service.navier_residual(medium, total.evaluate, chunk, h),
    }

    files = []
    for quantity in scenario.outputs.quantities:
        values = grid_service.map_chunks(evaluators[quantity], points, context.threads)
        files.append(field_io_service.write_field(context.out_dir, quantity, points, values, context.format))

    logger.info(f"Reflected field evaluated with {len(total.wavevectors)} modes",
                extra={"run_id": context.run_id, "n_points": len(points)})
    return CommandOutput(
        files=files,
        metadata={
            "grid": grid_service.geometry(scenario.grid),
            "fd_step": h if "residual" in scenario.outputs.quantities else None,
            "field": "total displacement u_in + u_re",
        },
    )

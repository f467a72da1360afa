import logging

from elastoscatter.models.run import CommandOutput, PreparedRun, RunContext
from elastoscatter.models.scenario import Scenario
from elastoscatter.models.validation import SuiteConfig
from elastoscatter.services.error_handler import EXIT_SUCCESS, error_handler
from elastoscatter.services.field_io_service import field_io_service
from elastoscatter.services.scenario_service import scenario_service
from elastoscatter.services.validation_service import validation_service

logger = logging.getLogger(__name__)


def prepare(scenario: Scenario) -> PreparedRun:
    medium = scenario_service.build_medium(scenario)
    scenario_service.check_invariants("validate", scenario, medium)
    return PreparedRun(
        scenario=scenario,
        medium=medium,
        payload={"quadrature": scenario_service.quadrature_config(scenario)},
    )


def run(prepared: PreparedRun, context: RunContext) -> CommandOutput:
    """検証スイートを実行して report.json を書く"""
    scenario = prepared.scenario
    config = SuiteConfig(
        groups=scenario.validate_.groups,
        seed=scenario.seed,
        threads=context.threads,
        quadrature=prepared.payload["quadrature"],
    )
    report = validation_service.run_all(prepared.medium, config)

    payload = {
        "summary": {"passed": report.n_passed, "failed": report.n_failed, "skipped": report.n_skipped},
        "checks": [check.model_dump() for check in report.checks],
    }
    filename = field_io_service.write_json(context.out_dir, "report.json", payload)

    exit_code = EXIT_SUCCESS
    metadata = {"groups": list(config.groups), "summary": payload["summary"]}
    if not report.all_passed:
        failed = [c.name for c in report.checks if c.status == "fail"]
        run_error = error_handler.handle_check_failures(report.n_failed, failed)
        exit_code = run_error.exit_code
        metadata["error"] = run_error.error.model_dump(mode="json")
        logger.warning(f"Validation has {report.n_failed} failing checks", extra={"run_id": context.run_id})
    return CommandOutput(files=[filename], metadata=metadata, exit_code=exit_code)

import argparse
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

from elastoscatter import __version__
from elastoscatter.cli.commands import COMMANDS
from elastoscatter.config.logging_config import setup_logging
from elastoscatter.config.settings import settings
from elastoscatter.middleware.logging_middleware import LoggingMiddleware
from elastoscatter.models.errors import ScenarioParseError
from elastoscatter.models.run import RunContext
from elastoscatter.models.scenario import Scenario
from elastoscatter.services.error_handler import error_handler
from elastoscatter.services.field_io_service import field_io_service
from elastoscatter.services.scenario_service import scenario_service

# ログ設定を初期化
setup_logging()
logger = logging.getLogger("elastoscatter.main")

_HELP = {
    "reflect": "平面波の入射・反射全場を格子上で評価",
    "propagate": "乱数の準周期トレースを角スペクトル法で伝播",
    "greens": "半空間グリーンテンソル G_H(·, y)·p を格子上で評価",
    "beam": "スペクトルビームの入射・反射全場を格子上で評価",
    "validate": "検証スイートを実行",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=settings.app_name, description=settings.app_description)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=_HELP[name])
        sub.add_argument("--scenario", type=Path, required=name != "validate", help="シナリオファイル")
        sub.add_argument("--out", type=Path, required=True, help="出力ディレクトリ")
        sub.add_argument("--format", choices=["binary", "text"], default=settings.default_output_format)
        sub.add_argument("--threads", type=int, default=settings.default_threads)
        sub.add_argument("--tolerance", type=float, default=None, help="求積許容誤差の上書き")
        sub.add_argument("--seed", type=int, default=None)
    return parser


def execute(args: argparse.Namespace, run_id: str) -> int:
    """シナリオを読み込み、検査してからサブコマンドを実行"""
    start_time = time.time()
    try:
        scenario = scenario_service.load(args.scenario) if args.scenario is not None else Scenario()
        scenario = scenario_service.apply_overrides(scenario, args.seed, args.tolerance)
        if args.threads < 1:
            raise ScenarioParseError("--threads must be at least 1", details={"threads": args.threads})

        command = COMMANDS[args.subcommand]
        # 不変条件の検査は出力ディレクトリ作成より前
        prepared = command.prepare(scenario)

        args.out.mkdir(parents=True, exist_ok=True)
        context = RunContext(run_id=run_id, out_dir=args.out, format=args.format, threads=args.threads)
        output = command.run(prepared, context)

        metadata = {
            "run_id": run_id,
            "subcommand": args.subcommand,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "scenario": scenario.echo(),
            "versions": field_io_service.versions(),
            "seed": scenario.seed,
            "tolerances": {
                "quadrature": scenario_service.quadrature_config(scenario).tolerance,
                "beam": scenario.quadrature.beam_tolerance or settings.beam_tolerance,
            },
            "threads": args.threads,
            "files": output.files,
            **output.metadata,
            "wall_time_s": round(time.time() - start_time, 3),
            "memory_rss_mb": field_io_service.process_memory_mb(),
            "exit_code": output.exit_code,
        }
        if args.subcommand != "validate":
            metadata["record_layout"] = field_io_service.record_layout(args.format)
        field_io_service.write_json(args.out, "metadata.json", metadata)

        print(json.dumps({"run_id": run_id, "exit_code": output.exit_code, "files": output.files + ["metadata.json"]}))
        return output.exit_code

    except Exception as e:
        run_error = error_handler.handle_custom_exception(e)
        print(json.dumps(run_error.model_dump(mode="json"), ensure_ascii=False), file=sys.stderr)
        return run_error.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    middleware = LoggingMiddleware(args.subcommand)
    return middleware.dispatch(lambda run_id: execute(args, run_id))


if __name__ == "__main__":
    sys.exit(main())

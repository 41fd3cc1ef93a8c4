#!/usr/bin/env python3
"""
SAV-GL 命令行工具

run：运行一条轨道并输出能量、质量、极值 CSV 和快照；
converge：时间步长收敛性研究；
verify：校验格式系数表的相容性、稳定性和阶条件。
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

from .config import ExperimentConfig, enable_residual_checks, load_config
from .errors import EXIT_FAILURE, EXIT_OK, ConfigurationError, SavGlError, VerificationError, exit_code_for
from .experiment import ExperimentRunner, resolve_tableau
from .tableau import CertificationReport, certify_tableau
from .utils import jsonify
from .utils.run_key import format_run_key


def setup_logging(verbose: bool = False):
    """命令行只配置一次 loguru：stderr，INFO 或 DEBUG"""
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO")


def parse_steps(text: str) -> List[int]:
    """解析 ``80,120,160``"""
    try:
        steps = [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigurationError(f"invalid --steps {text!r}: {e}") from e
    if not steps or any(k <= 0 for k in steps):
        raise ConfigurationError(f"--steps needs positive integers, got {text!r}")
    return steps


def apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """命令行参数覆盖配置文件"""
    if getattr(args, "seed", None) is not None:
        config = config.model_copy(update={"init": config.init.model_copy(update={"seed": args.seed})})
    if getattr(args, "out_dir", None):
        config = config.model_copy(
            update={"outputs": config.outputs.model_copy(update={"out_dir": args.out_dir})}
        )
    if getattr(args, "threads", None) is not None:
        if args.threads <= 0:
            raise ConfigurationError(f"--threads must be positive, got {args.threads}")
        config = config.model_copy(
            update={"solver": config.solver.model_copy(update={"threads": args.threads})}
        )
    return config


def verify_tableau(name: str) -> CertificationReport:
    """
    校验内置格式或系数表文件

    :raises VerificationError: 任一校验未通过，failed 中列出失败条件
    """
    tableau = resolve_tableau(name)
    report = certify_tableau(tableau)
    if not report.passed:
        failed = {}
        if not report.consistency.passed:
            failed["consistency"] = report.consistency.failed_conditions
        if report.algebraic is not None and not report.algebraic.passed:
            failed["algebraic"] = report.algebraic.min_eig_m
        if report.diagonal is not None and not report.diagonal.passed:
            failed["diagonal"] = report.diagonal.min_eig_m
        if report.order is not None and not report.order.passed:
            failed["order"] = report.order.failed_conditions
        raise VerificationError(f"tableau {tableau.name!r} failed: {failed}", failed, report)
    return report


def format_certificate(report: CertificationReport) -> str:
    """可读的证书报告"""
    lines = [
        f"tableau {report.name}: s={report.s} r={report.r} p={report.p} q={report.q} "
        f"q_hat={report.q_hat} nu={report.nu}",
        f"provable order min(q_hat, nu) = {min(report.q_hat, report.nu)}",
        "consistency:",
    ]
    for key, value in report.consistency.residuals.items():
        mark = "✅" if value <= report.consistency.tol else "❌"
        lines.append(f"  {mark} {key}: {value:.3e}")
    for label, cert in (("algebraic stability", report.algebraic), ("diagonal stability", report.diagonal)):
        if cert is None:
            lines.append(f"  - {label}: no certificate")
            continue
        mark = "✅" if cert.passed else "❌"
        lines.append(f"{mark} {label}: min eig {cert.min_eig_m:.3e}")
    if report.order is not None:
        mark = "✅" if report.order.passed else "❌"
        lines.append(f"{mark} order conditions B({report.order.p}) / C({report.order.q})")
        for l, value in report.order.b_residuals.items():
            lines.append(f"    B({l}): {value:.3e}")
        for l, value in report.order.c_residuals.items():
            lines.append(f"    C({l}): {value:.3e}")
    return "\n".join(lines)


def _emit(payload, as_json: bool, text: str):
    if as_json:
        print(json.dumps(jsonify(payload), ensure_ascii=False, indent=2))
    else:
        print(text)


def command_run(args: argparse.Namespace) -> int:
    config = apply_overrides(load_config(args.config), args)
    report = ExperimentRunner(config).run_simulation()
    text = "\n".join([
        f"✅ {report.run_id}: {report.steps} steps to t={report.t_final:g} in {report.wall_time:.2f}s",
        f"   energy {report.energy_initial:.10e} -> {report.energy_final:.10e}",
        f"   max stage iterations {report.max_stage_iterations}",
        *(f"   wrote {path}" for path in report.files),
    ])
    _emit(report, args.json, text)
    return EXIT_OK


def command_converge(args: argparse.Namespace) -> int:
    config = apply_overrides(load_config(args.config), args)
    steps = parse_steps(args.steps)
    stem = format_run_key(resolve_tableau(config.scheme).name, config.model.kind.value)
    csv_path = Path(config.outputs.out_dir) / f"{stem}_convergence.csv"
    table = ExperimentRunner(config).run_convergence(steps, csv_path=str(csv_path))
    rows = [f"{'K':>8} {'tau':>12} {'error':>14} {'order':>8}"]
    for row in table.rows:
        order = "" if row.order is None else f"{row.order:.4f}"
        rows.append(f"{row.steps:>8} {row.tau:>12.4e} {row.error:>14.4e} {order:>8}")
    text = "\n".join([f"✅ {table.scheme} vs {table.reference}", *rows, f"   wrote {table.csv_path}"])
    _emit(table, args.json, text)
    return EXIT_OK


def command_verify(args: argparse.Namespace) -> int:
    try:
        report = verify_tableau(args.tableau)
    except VerificationError as e:
        if e.report is not None:
            _emit(e.report, args.json, format_certificate(e.report))
        raise
    _emit(report, args.json, format_certificate(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sav_gl",
        description="SAV-GL 能量稳定时间积分器命令行工具",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:
  sav_gl run experiment.cfg --out-dir out
  sav_gl run preset:ac_coarsening --seed 7
  sav_gl converge preset:ac_accuracy --steps 80,120,160,200,240 --threads 4
  sav_gl verify savgl5
  sav_gl verify my_scheme.tableau --json
        """
    )
    subparsers = parser.add_subparsers(dest="command", help="可用命令")

    def common(sub):
        sub.add_argument("config", help="配置文件路径或 preset:<name>")
        sub.add_argument("--out-dir", help="输出目录（覆盖配置）")
        sub.add_argument("--seed", type=int, help="随机初值种子（覆盖配置）")
        sub.add_argument("--threads", type=int, help="FFT 线程数 / 并发运行数")
        sub.add_argument("--oracle", action="store_true", help="每步检查级方程残差，小网格上对比稠密直接解")
        sub.add_argument("--json", action="store_true", help="以JSON格式输出")
        sub.add_argument("--verbose", action="store_true", help="输出 DEBUG 日志")

    common(subparsers.add_parser("run", help="运行一条轨道"))
    converge_parser = subparsers.add_parser("converge", help="收敛性研究")
    common(converge_parser)
    converge_parser.add_argument("--steps", required=True, help="步数列表，例如 80,120,160")

    verify_parser = subparsers.add_parser("verify", help="校验格式系数表")
    verify_parser.add_argument("tableau", help="内置格式名（savgl1..savgl6）或系数表文件")
    verify_parser.add_argument("--json", action="store_true", help="以JSON格式输出")
    verify_parser.add_argument("--verbose", action="store_true", help="输出 DEBUG 日志")
    return parser


def main(argv: Optional[List[str]] = None):
    """主函数，以退出码结束进程"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        sys.exit(EXIT_FAILURE)

    setup_logging(args.verbose)
    if getattr(args, "oracle", False):
        enable_residual_checks()

    commands = {"run": command_run, "converge": command_converge, "verify": command_verify}
    try:
        code = commands[args.command](args)
    except KeyboardInterrupt:
        print("\n操作已取消")
        code = EXIT_FAILURE
    except SavGlError as e:
        print(f"❌ {e}")
        code = exit_code_for(e)
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}")
        print(f"❌ 执行命令时出现错误: {e}")
        code = EXIT_FAILURE
    sys.exit(code)


if __name__ == "__main__":
    main()

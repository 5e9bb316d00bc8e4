"""命令行工具

退出码：0 成功，1 用法/读写/格式错误，2 约束或可行性不满足，3 优化未收敛。
"""
import argparse
import csv
import io
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from ..core.behavior import ConstraintReport, chsh_delta, chsh_variants, correlations, u_sum, validate
from ..core.boxes import box_by_name, is_local
from ..core.config import settings
from ..core.exceptions import (
    BehaviorFormatError,
    EPRBError,
    NormalizationDefectError,
    OptimizationError,
    PreconditionError,
)
from ..core.hardy import analyze, analyze_all, hardy_set
from ..core.linsys import behavior_from_free_set, build_matrix, check_feasible, rank, solve_dependent
from ..services.optimizer import (
    SCAN_HEADER,
    THETA_MAX,
    OptimizationConfig,
    OptimizationResult,
    ghz_impossibility,
    maximize_chsh,
    maximize_hardy,
    maximize_hardy_maxent,
    scan_theta,
)
from ..services.quantum import behavior_from_model
from ..services.schemas import (
    QuantumModelPayload,
    behavior_to_json,
    dumps,
    load_behavior,
    load_free_set,
    load_model,
    read_json,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2
EXIT_NOT_CONVERGED = 3


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        print(f"✓ 已写入 {out}", file=sys.stderr)
    else:
        print(text)


def _format_report(report: ConstraintReport, title: str) -> str:
    lines = [f"=== {title} ===", f"{'检查项':<28}{'状态':<8}{'残差':>14}{'取值':>22}"]
    for check in report:
        value = "" if check.value is None else f"{check.value:.17g}"
        lines.append(f"{check.name:<28}{check.status:<8}{check.residual:>14.3g}{value:>22}")
    verdict = "✓ 全部通过" if report.passed else f"✗ {len(report.failures)} 项未通过"
    lines.append(f"{verdict}（最大残差 {report.max_residual:.3g}）")
    return "\n".join(lines)


def _report_csv(report: ConstraintReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("name", "status", "residual", "tolerance", "value"))
    for check in report:
        writer.writerow((check.name, check.status, repr(check.residual), repr(check.tolerance), "" if check.value is None else repr(check.value)))
    return buffer.getvalue().rstrip("\n")


def _optimization_config(args: argparse.Namespace) -> OptimizationConfig:
    overrides = {
        "restarts": getattr(args, "restarts", None),
        "max_iters": getattr(args, "max_iters", None),
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
    }
    if getattr(args, "config", None):
        return OptimizationConfig.from_file(args.config, **overrides)
    return OptimizationConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_check(args: argparse.Namespace) -> int:
    """校验行为，并在校验通过时给出局域性判定和 8 个 Hardy 集的分析"""
    b = load_behavior(read_json(args.path))
    report = validate(b, args.tol)
    locality = is_local(b, args.tol) if report.passed else None
    hardy = analyze_all(b, args.tol, validation_tol=args.tol) if report.passed else ()

    if args.json:
        _emit(dumps({
            "validation": report.to_dict(),
            "locality": locality.to_dict() if locality else None,
            "hardy": [r.to_dict() for r in hardy],
        }), args.out)
    elif args.csv:
        _emit(_report_csv(report), args.out)
    else:
        lines = [_format_report(report, f"校验 {args.path}")]
        if locality is not None:
            if locality.local:
                lines.append(f"✓ 局域（距离 {locality.distance:.3g}）")
            else:
                lines.append(
                    f"非局域：{locality.witness.label} = {locality.witness.value:.17g}"
                    f"（到局域多面体的距离 {locality.distance:.3g}）"
                )
            for r in hardy:
                if r.premises_satisfied:
                    lines.append(f"Hardy {r.set.label}: {r.set.witness} = {r.witness:.17g} → {r.classification.value}")
        _emit("\n".join(lines), args.out)
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_solve(args: argparse.Namespace) -> int:
    """由 𝒰 解出 𝒱 并检查可行性"""
    u = load_free_set(read_json(args.path))
    v = solve_dependent(u)
    report = check_feasible(u, args.tol, exhaustive=args.exhaustive)

    if args.json:
        data = {"dependent": v.as_dict(), "feasibility": report.to_dict()}
        if args.behavior:
            data["behavior"] = behavior_to_json(behavior_from_free_set(u))
        _emit(dumps(data), args.out)
    elif args.csv:
        _emit(_report_csv(report), args.out)
    else:
        lines = ["=== 依赖变量 𝒱 ==="]
        lines += [f"{name:<6}{value:.17g}" for name, value in v.as_dict().items()]
        lines.append(_format_report(report, "可行性"))
        _emit("\n".join(lines), args.out)
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_scan(args: argparse.Namespace) -> int:
    """固定 Schmidt 角逐点最大化 p13，输出 CSV"""
    lo, hi = args.range
    rows = scan_theta(lo, hi, args.steps, _optimization_config(args))

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SCAN_HEADER)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row.as_row()])
    _emit(buffer.getvalue().rstrip("\n"), args.out)

    return EXIT_OK if all(row.status == "converged" for row in rows) else EXIT_NOT_CONVERGED


def cmd_box(args: argparse.Namespace) -> int:
    b = box_by_name(args.name)
    _emit(dumps(behavior_to_json(b)), args.out)
    return EXIT_OK


def cmd_chsh(args: argparse.Namespace) -> int:
    """Δ 和四个关联函数"""
    b = load_behavior(read_json(args.path))
    delta = chsh_delta(b)
    corr = correlations(b)
    names = ("c11", "c12", "c21", "c22")

    if args.json:
        _emit(dumps({
            "delta": delta,
            "delta_abs": abs(delta),
            "correlations": dict(zip(names, corr.as_tuple())),
            "u_sum": u_sum(b),
            "variants": {v.label: v.value for v in chsh_variants(b)},
        }), args.out)
    else:
        lines = [f"{name} = {value:.17g}" for name, value in zip(names, corr.as_tuple())]
        lines.append(f"Δ = {delta:.17g}")
        lines.append("✓ 满足 CHSH 不等式 |Δ| <= 2" if abs(delta) <= 2.0 + 1e-12 else "✗ 违反 CHSH 不等式 |Δ| <= 2")
        _emit("\n".join(lines), args.out)
    return EXIT_OK


def _format_result(result: OptimizationResult) -> str:
    lines = [f"=== 优化 {result.kind} ===", f"目标值: {result.objective:.17g}", f"|Δ|: {result.delta_abs:.17g}"]
    if result.witness is not None:
        lines.append(f"p13: {result.witness:.17g}")
        lines.append(f"Σ: {result.sigma:.17g}")
    lines.append("参数: " + ", ".join(f"{k}={v:.12g}" for k, v in result.parameters.items()))
    if result.residuals:
        lines.append(f"最大约束残差: {result.max_residual:.3g}")
    lines.append(f"重启 {result.restarts} 次，函数求值 {result.evaluations} 次")
    lines.append(("✓ " if result.converged else "✗ ") + result.status)
    return "\n".join(lines)


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = _optimization_config(args)
    if args.problem == "chsh":
        result = maximize_chsh(args.state_class, cfg)
    elif args.problem == "hardy":
        result = maximize_hardy_maxent(cfg) if args.maxent else maximize_hardy(cfg, theta=args.theta)
    else:
        result = ghz_impossibility(cfg, target=args.target)

    _emit(dumps(result.to_dict()) if args.json else _format_result(result), args.out)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_hardy(args: argparse.Namespace) -> int:
    """8 个 Hardy 集（或 --set 指定的一个）的分析报告"""
    b = load_behavior(read_json(args.path))
    if args.set:
        reports = (analyze(b, hardy_set(args.set), args.tol, validation_tol=args.tol),)
    else:
        reports = analyze_all(b, args.tol, validation_tol=args.tol)

    if args.json:
        _emit(dumps([r.to_dict() for r in reports]), args.out)
    else:
        lines = []
        for r in reports:
            lines.append(f"=== {r.set.label} ===")
            lines.append(f"状态: {r.status}")
            lines.append(f"零目标最大值: {r.zero_residual:.3g}")
            label = r.classification.value if r.classification else "n/a"
            lines.append(f"{r.set.witness} = {r.witness:.17g}（{label}，witness_window {r.causality.status}）")
            lines.append(f"|Δ| = {r.delta_abs:.17g}，恒等式残差 {r.delta_identity_residual:.3g}")
            lines.append(f"Σ = {r.sigma:.17g}，恒等式残差 {r.sigma_identity_residual:.3g}")
        _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_model(args: argparse.Namespace) -> int:
    """由量子模型 JSON 按 Born 规则生成行为；默认只输出行为 JSON，可直接交给 check"""
    model = load_model(read_json(args.path))
    b = behavior_from_model(model)
    report = validate(b, args.tol)

    if args.json:
        _emit(dumps({
            "model": QuantumModelPayload.from_model(model).model_dump(),
            "behavior": behavior_to_json(b),
            "validation": report.to_dict(),
        }), args.out)
    else:
        _emit(dumps(behavior_to_json(b)), args.out)
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_rank(args: argparse.Namespace) -> int:
    m = build_matrix()
    value = rank(m)
    if args.json:
        _emit(dumps({"rank": value, "rows": m.shape[0], "columns": m.shape[1]}), args.out)
    else:
        _emit(str(value), args.out)
    return EXIT_OK


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"必须为正数: {text}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=None, help=f"校验容差（默认 {settings.tolerance}）")
    common.add_argument("--json", action="store_true", help="输出 JSON")
    common.add_argument("--csv", action="store_true", help="输出 CSV（scan 始终输出 CSV）")
    common.add_argument("--out", default=None, help="写入文件而不是标准输出")
    common.add_argument("--verbose", "-v", action="store_true", help="显示 INFO 日志")

    tuning = argparse.ArgumentParser(add_help=False)
    tuning.add_argument("--seed", type=int, default=None, help=f"随机种子（默认 {settings.seed}）")
    tuning.add_argument("--restarts", type=int, default=None, help=f"重启次数（默认 {settings.restarts}）")
    tuning.add_argument("--max-iters", type=int, default=None, help="每轮局部搜索的最大迭代数")
    tuning.add_argument("--workers", type=int, default=None, help="并行重启的进程数")
    tuning.add_argument("--config", default=None, help="优化配置 JSON 文件")

    parser = argparse.ArgumentParser(description="EPRB 实验的约束、CHSH 与 Hardy 分析工具")
    subparsers = parser.add_subparsers(dest="command", help="可用命令")

    p = subparsers.add_parser("check", parents=[common], help="校验行为 JSON")
    p.add_argument("path", help="行为 JSON 文件（- 表示标准输入）")
    p.set_defaults(handler=cmd_check)

    p = subparsers.add_parser("solve", parents=[common], help="由自由变量集解出依赖变量集")
    p.add_argument("path", help="自由变量集 JSON 文件")
    p.add_argument("--exhaustive", action="store_true", help="检查 𝒱 所有非空子集之和")
    p.add_argument("--behavior", action="store_true", help="JSON 输出中附带完整行为")
    p.set_defaults(handler=cmd_solve)

    p = subparsers.add_parser("scan", parents=[common, tuning], help="扫描 Schmidt 角")
    p.add_argument("parameter", nargs="?", default="theta", choices=["theta"])
    p.add_argument("--range", nargs=2, type=float, default=[0.0, THETA_MAX], metavar=("LO", "HI"))
    p.add_argument("--steps", type=int, default=9)
    p.set_defaults(handler=cmd_scan)

    p = subparsers.add_parser("box", parents=[common], help="生成典型行为")
    p.add_argument("name", help="pr, pr2, uniform, det:++--, qextremal, qextremal2")
    p.set_defaults(handler=cmd_box)

    p = subparsers.add_parser("chsh", parents=[common], help="计算 Δ 和关联函数")
    p.add_argument("path")
    p.set_defaults(handler=cmd_chsh)

    p = subparsers.add_parser("optimize", parents=[common, tuning], help="量子模型上的数值最大化")
    p.add_argument("problem", choices=["chsh", "hardy", "ghz"])
    p.add_argument("--state-class", default="any", choices=["any", "product", "maximally_entangled"])
    p.add_argument("--maxent", action="store_true", help="hardy：固定为最大纠缠态")
    p.add_argument("--theta", type=float, default=None, help="hardy：固定 Schmidt 角")
    p.add_argument("--target", type=float, default=0.5, help="ghz：六个等式约束的目标值")
    p.set_defaults(handler=cmd_optimize)

    p = subparsers.add_parser("hardy", parents=[common], help="Hardy 集分析")
    p.add_argument("path")
    p.add_argument("--set", default=None, help="只分析一个集，如 8g 或 p13")
    p.set_defaults(handler=cmd_hardy)

    p = subparsers.add_parser("model", parents=[common], help="由量子模型生成行为")
    p.add_argument("path", help="量子模型 JSON 文件")
    p.set_defaults(handler=cmd_model)

    p = subparsers.add_parser("rank", parents=[common], help="系数矩阵的秩")
    p.set_defaults(handler=cmd_rank)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    level = logging.INFO if args.verbose else getattr(logging, settings.log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        return args.handler(args)
    except (BehaviorFormatError, ValidationError, OSError) as e:
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, NormalizationDefectError) as e:
        print(f"约束不满足: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    except OptimizationError as e:
        print(f"优化失败: {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except EPRBError as e:
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

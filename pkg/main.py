#!/usr/bin/env python3
"""
vlaplace-lab 命令行入口

Usage:
    python main.py run config/experiments/euclidean_baseline.ini
    python main.py list --module diffusion
    python main.py audit config/experiments/example1_m0.ini
    python main.py simulate --config config/experiments/euclidean_baseline.ini --paths 1000 --dt 1e-3 --seed 7 --out paths.csv
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from common.errors import ConfigValidationError, LabError  # noqa: E402
from common.stats import VerdictStatus  # noqa: E402
from experiments import list_checks, run_audit, run_suite, simulate_to_csv  # noqa: E402

console = Console()

STATUS_STYLE = {
    VerdictStatus.PASS: "green",
    VerdictStatus.FAIL: "red",
    VerdictStatus.BOUNDARY: "yellow",
    VerdictStatus.INCONCLUSIVE: "magenta",
    VerdictStatus.LOW_POWER: "cyan",
}


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6g}"


def cmd_run(args: argparse.Namespace) -> int:
    result = run_suite(args.config, out_dir=args.out, only=args.only)
    table = Table(title=f"{result.experiment_id} (seed {result.seed})")
    for col in ("check", "status", "lhs", "rhs", "margin", "stderr", "note"):
        table.add_column(col)
    for v in result.verdicts:
        style = STATUS_STYLE.get(v.status, "")
        table.add_row(
            v.check_id,
            f"[{style}]{v.status.value}[/{style}]",
            _fmt(v.lhs),
            _fmt(v.rhs),
            _fmt(v.margin),
            _fmt(v.stderr),
            v.note[:80],
        )
    console.print(table)
    counts = ", ".join(f"{k}: {n}" for k, n in result.counts().items())
    border = "red" if result.exit_code else "green"
    console.print(Panel.fit(f"{counts}\nexit code {result.exit_code}", title="[ Summary ]", border_style=border))
    return result.exit_code


def cmd_list(args: argparse.Namespace) -> int:
    entries = list_checks(args.module)
    table = Table(title=f"Registered checks{f' in {args.module}' if args.module else ''}")
    for col in ("check_id", "module", "anchor"):
        table.add_column(col)
    for e in entries:
        table.add_row(e.check_id, e.module, e.anchor)
    console.print(table)
    console.print(f"[dim]{len(entries)} checks[/dim]")
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    reports = run_audit(args.config, out_dir=args.out)
    table = Table(title="Condition audit")
    for col in ("condition", "holds", "D", "slope", "implied by", "consistent"):
        table.add_column(col)
    for r in reports:
        table.add_row(
            r.condition_id.value,
            "[green]yes[/green]" if r.holds else "[yellow]no[/yellow]",
            f"{r.witness_constant:.4g}",
            f"{r.growth_slope:.3g}",
            "; ".join(r.implied_by),
            "yes" if r.implication_consistent else "[red]NO[/red]",
        )
    console.print(table)
    return 0 if all(r.implication_consistent for r in reports) else 1


def cmd_simulate(args: argparse.Namespace) -> int:
    out = simulate_to_csv(
        args.config,
        n_paths=args.paths,
        dt=args.dt,
        seed=args.seed,
        out=args.out,
        t_end=args.t_end,
        n_observe=args.observe,
        x0=args.x0,
        stop_radius=args.stop_radius,
    )
    console.print(f"[green]✅ wrote {out}[/green]")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="加权 Laplacian 比较定理与 Liouville 性质的数值实验室",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
使用示例:
  # 运行随包的欧氏基线实验
  %(prog)s run config/experiments/euclidean_baseline.ini --out results

  # 列出扩散模块的检验
  %(prog)s list --module diffusion

  # 只审计条件 (A1)-(B3)
  %(prog)s audit example1_m0

  # 直接模拟扩散并导出轨道
  %(prog)s simulate --config config/experiments/hyperbolic_baseline.ini --paths 1000 --dt 1e-3 --seed 7 --out paths.csv
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="运行实验文件中的全部检验")
    run.add_argument("config", help="实验文件 (INI), 或随包实验的名字")
    run.add_argument("--out", default=None, help="产物目录, 默认 LAB_OUTPUT_DIR")
    run.add_argument("--only", nargs="+", default=None, help="只运行这些 check_id")
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list", help="列出已注册的检验")
    lst.add_argument("--module", default=None, help="只列出该模块")
    lst.set_defaults(func=cmd_list)

    audit = sub.add_parser("audit", help="只运行条件审计")
    audit.add_argument("config", help="实验文件 (INI)")
    audit.add_argument("--out", default=None, help="产物目录, 默认 LAB_OUTPUT_DIR")
    audit.set_defaults(func=cmd_audit)

    sim = sub.add_parser("simulate", aliases=["diffuse"], help="模拟 Δ_V-扩散并写出 CSV")
    sim.add_argument("--config", required=True, help="模型文件或实验文件")
    sim.add_argument("--paths", type=int, required=True, help="路径数")
    sim.add_argument("--dt", type=float, required=True, help="步长")
    sim.add_argument("--seed", type=int, required=True, help="主种子")
    sim.add_argument("--out", required=True, help="输出 CSV")
    sim.add_argument("--t-end", type=float, default=1.0, help="终止时刻")
    sim.add_argument("--observe", type=int, default=10, help="观测时刻数")
    sim.add_argument("--x0", type=float, nargs="+", default=None, help="起点坐标")
    sim.add_argument("--stop-radius", type=float, default=None, help="停止球半径")
    sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigValidationError as e:
        console.print(f"[red]❌ {e.message}[/red]")
        return 2
    except LabError as e:
        console.print(f"[red]❌ {e.error_type}: {e.message}[/red]")
        return 2


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nInterrupted")
        sys.exit(130)

"""
观点动力学拟合命令行工具
主入口文件
"""
import argparse
import sys
from typing import List, Optional

from config import BUNDLED_SOURCE, EXIT_ERROR
from cli_handlers import cmd_aggregate, cmd_diagnose, cmd_eval, cmd_fit, cmd_predict, cmd_simulate

PANEL_HELP = f"面板 CSV 路径，或 '{BUNDLED_SOURCE}' 表示内置数据集"


class _Parser(argparse.ArgumentParser):
    """用法错误退出码为 1（2 保留给数据不完整）"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"❌ {self.prog}: {message}\n")


def create_parser() -> argparse.ArgumentParser:
    """创建命令行解析器"""
    parser = _Parser(prog='opinion-fit', description='观点动力学模型拟合、预测与诊断')
    subparsers = parser.add_subparsers(dest='command', required=True)

    # 聚合
    p = subparsers.add_parser('aggregate', help='评论记录 → 情感面板')
    p.add_argument('records_csv')
    p.add_argument('out_panel_csv')

    # 拟合
    p = subparsers.add_parser('fit', help='拟合模型')
    p.add_argument('panel', help=PANEL_HELP)
    p.add_argument('model', help='fdg / fj / fdgm / epo / repo')
    p.add_argument('--lag', type=int, default=0)
    p.add_argument('--t-est', type=int, default=None, help='训练期数（默认 T−2）')
    p.add_argument('--starts', type=int, default=None, help='起点数')
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--rel-tol', type=float, default=None)
    p.add_argument('--max-iter', type=int, default=None)
    p.add_argument('--config', default=None, help='求解器 YAML 配置')
    p.add_argument('--out', default=None, help='模型 JSON 输出路径（默认 <模型>.json）')

    # 预测
    p = subparsers.add_parser('predict', help='从训练期末出发预测')
    p.add_argument('model_json')
    p.add_argument('panel', help=PANEL_HELP)
    p.add_argument('--horizon', type=int, default=2)
    p.add_argument('--out', default='forecast.csv')
    p.add_argument('--fitted-out', default=None, help='另写出训练期一步拟合值 CSV')

    # 诊断
    p = subparsers.add_parser('diagnose', help='区间违背指数')
    p.add_argument('panel', help=PANEL_HELP)
    p.add_argument('--tau-max', type=int, default=3)
    p.add_argument('--out', default='range_violation.csv')

    # 模拟
    p = subparsers.add_parser('simulate', help='按拟合参数模拟轨迹')
    p.add_argument('model_json')
    p.add_argument('panel', help=PANEL_HELP)
    p.add_argument('--start', type=int, default=None, help='起始期（默认 T_est）')
    p.add_argument('--horizon', type=int, default=10)
    p.add_argument('--out', default='trajectory.csv')

    # 评估
    p = subparsers.add_parser('eval', help='评估目录中的全部模型')
    p.add_argument('panel', help=PANEL_HELP)
    p.add_argument('models_dir')
    p.add_argument('--out', default='evaluation.csv')

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.command == 'aggregate':
        return cmd_aggregate(args.records_csv, args.out_panel_csv)
    if args.command == 'fit':
        return cmd_fit(
            args.panel, args.model, lag=args.lag, t_est=args.t_est, starts=args.starts,
            seed=args.seed, out_json=args.out, rel_tol=args.rel_tol, max_iter=args.max_iter,
            config_path=args.config
        )
    if args.command == 'predict':
        return cmd_predict(args.model_json, args.panel, args.horizon, args.out, fitted_csv=args.fitted_out)
    if args.command == 'diagnose':
        return cmd_diagnose(args.panel, args.tau_max, args.out)
    if args.command == 'simulate':
        return cmd_simulate(args.model_json, args.panel, args.start, args.horizon, args.out)
    return cmd_eval(args.panel, args.models_dir, args.out)


if __name__ == "__main__":
    sys.exit(main())

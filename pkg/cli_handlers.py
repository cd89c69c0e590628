"""
命令处理模块
处理面板聚合、模型拟合、预测、诊断、模拟与评估命令

每个 cmd_* 返回进程退出码；结果打印到标准输出，错误以 ❌ 开头打印到标准错误。
"""
import os
import sys
from typing import Optional

from config import (
    EXIT_ERROR, EXIT_INCOMPLETE, EXIT_OK, MODEL_FAMILIES, VIOLATION_SLACK, fmt, load_solver_config
)
from opinion_fit.exceptions import MissingCell, ModelSpecError, OpinionFitError
from opinion_fit.panel import ModelSpec
from state_manager import create_fit_manager, list_fit_results, load_fit_result, save_fit_result


def _fail(message: str, code: int = EXIT_ERROR) -> int:
    print(f"❌ {message}", file=sys.stderr)
    return code


def _parse_model(model: str, lag: int) -> ModelSpec:
    family = MODEL_FAMILIES.get(str(model).strip().lower())
    if family is None:
        raise ModelSpecError(f"未知模型: {model}（可选 {', '.join(MODEL_FAMILIES)}）")
    return ModelSpec.parse(family, lag)


def cmd_aggregate(records_csv: str, out_panel_csv: str) -> int:
    """评论记录 CSV → 面板 CSV"""
    try:
        manager = create_fit_manager()
        panel, counts = manager.aggregate(records_csv)
        manager.write_panel(panel, out_panel_csv)

        print(f"B={panel.n_blogs} T={panel.n_periods}")
        print("blog_id,period,records")
        for blog_id in panel.blog_ids:
            for period in range(1, panel.n_periods + 1):
                print(f"{blog_id},{period},{counts[(blog_id, period)]}")
        print(f"✅ 面板已写出: {out_panel_csv}")
        return EXIT_OK

    except MissingCell as e:
        return _fail(f"数据不完整: blog={e.blog_id}, period={e.period}", EXIT_INCOMPLETE)
    except OpinionFitError as e:
        return _fail(f"聚合失败: {str(e)}")


def cmd_fit(
    panel_source: str,
    model: str,
    lag: int = 0,
    t_est: Optional[int] = None,
    starts: Optional[int] = None,
    seed: Optional[int] = None,
    out_json: Optional[str] = None,
    rel_tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    config_path: Optional[str] = None
) -> int:
    """拟合模型并写出 JSON；t_est 默认 T − 2"""
    try:
        spec = _parse_model(model, lag)
        config = load_solver_config(config_path).with_overrides(
            n_starts=starts, seed=seed, rel_tol=rel_tol, max_iterations=max_iter
        )
        manager = create_fit_manager()
        panel = manager.load_panel(panel_source)
        result = manager.fit(spec, panel, t_est, config)

        path = out_json or f"{spec.label.lower()}.json"
        save_fit_result(manager, result, path)

        print(f"model={spec.label} t_est={result.n_train_periods}")
        print(f"objective={fmt(result.objective)}")
        print(f"iterations={result.iterations} converged={result.converged}")
        print(f"✅ 模型已写出: {path}")
        return EXIT_OK

    except OpinionFitError as e:
        return _fail(f"拟合失败: {str(e)}")


def cmd_predict(model_json: str, panel_source: str, horizon: int, out_csv: str,
                fitted_csv: Optional[str] = None) -> int:
    """
    从 T_est 期出发预测 horizon 期，打印与面板重叠期的 RMSE

    fitted_csv 给定时另写出训练期一步拟合值（t, blog_id, fitted, observed）。
    """
    try:
        manager = create_fit_manager()
        result = load_fit_result(manager, model_json)
        panel = manager.load_panel(panel_source)
        manager.check_panel_match(result, panel)

        forecast = manager.forecast_frame(result, panel, horizon)
        manager.write_frame(forecast, out_csv)
        if fitted_csv:
            manager.write_frame(manager.fitted_frame(result, panel), fitted_csv)
            print(f"✅ 拟合值已写出: {fitted_csv}")

        for period, rmse in manager.forecast_rmse(forecast, panel).items():
            print(f"t={period} rmse={fmt(rmse)}")
        print(f"✅ 预测已写出: {out_csv}（{len(forecast)} 行）")
        return EXIT_OK

    except OpinionFitError as e:
        return _fail(f"预测失败: {str(e)}")


def cmd_diagnose(panel_source: str, tau_max: int, out_csv: str) -> int:
    """区间违背指数长表（τ = 0..tau_max）"""
    try:
        manager = create_fit_manager()
        panel = manager.load_panel(panel_source)
        table = manager.diagnose(panel, tau_max)
        manager.write_frame(table, out_csv)

        for tau, counts in manager.violation_counts(panel, tau_max, VIOLATION_SLACK).items():
            summary = ' '.join(f"{blog_id}={count}" for blog_id, count in counts.items())
            print(f"tau={tau} slack={fmt(VIOLATION_SLACK)} violations: {summary}")
        print(f"✅ 诊断已写出: {out_csv}（{len(table)} 行）")
        return EXIT_OK

    except OpinionFitError as e:
        return _fail(f"诊断失败: {str(e)}")


def cmd_simulate(model_json: str, panel_source: str, start: Optional[int], horizon: int, out_csv: str) -> int:
    """从面板第 start 期（默认 T_est）出发模拟 horizon 步"""
    try:
        manager = create_fit_manager()
        result = load_fit_result(manager, model_json)
        panel = manager.load_panel(panel_source)
        manager.check_panel_match(result, panel)

        begin = result.n_train_periods if start is None else start
        trajectory = manager.trajectory_frame(result, panel, begin, horizon)
        manager.write_frame(trajectory, out_csv)
        print(f"model={result.spec.label} start={begin} horizon={horizon}")
        print(f"✅ 轨迹已写出: {out_csv}（{len(trajectory)} 行）")
        return EXIT_OK

    except OpinionFitError as e:
        return _fail(f"模拟失败: {str(e)}")


def cmd_eval(panel_source: str, models_dir: str, out_csv: str) -> int:
    """
    评估目录中的全部模型

    写出评估表，并在评估表旁写出每个模型的热力图数据
    <评估表名>_<模型文件名>_W.csv / _A.csv。
    """
    try:
        manager = create_fit_manager()
        panel = manager.load_panel(panel_source)
        paths = list_fit_results(manager, models_dir)
        table, loaded = manager.evaluate_models(panel, paths)
        manager.write_frame(table, out_csv)

        out_stem = os.path.splitext(out_csv)[0]
        for path, result in loaded:
            model_stem = os.path.splitext(os.path.basename(path))[0]
            for name, frame in manager.heatmap_frames(result).items():
                manager.write_frame(frame, f"{out_stem}_{model_stem}_{name}.csv")

        for row in table.to_dict(orient='records'):
            metrics = ' '.join(
                f"{key}={fmt(val)}" for key, val in row.items() if key not in ('model', 'lag')
            )
            print(f"{row['model']} lag={row['lag']} {metrics}")
        print(f"✅ 评估表已写出: {out_csv}（{len(table)} 个模型）")
        return EXIT_OK

    except OpinionFitError as e:
        return _fail(f"评估失败: {str(e)}")

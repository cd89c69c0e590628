"""
参数估计模块
多起点 + 投影块坐标下降的约束最小二乘求解器
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .exceptions import ConfigError, DimensionMismatch, InvalidParameter, InvalidSplit
from .objective import PanelSlices, gradient, objective, residuals, slice_panel, value
from .panel import FitResult, ModelFamily, ModelSpec, ParamSet, SentimentPanel, coupled_influence
from .projections import project_box, project_offdiagonal_rows, project_simplex, project_simplex_rows

# 配置日志
logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)
if not logger.handlers:
    handler = logging.StreamHandler()
    handler.setLevel(os.getenv('OPINIONFIT_LOG_LEVEL', 'INFO').upper())
    formatter = logging.Formatter('%(asctime)s - [Estimator] - %(levelname)s - %(message)s')
    handler.setFormatter(formatter)
    logger.addHandler(handler)

STEP_RULES = ('fixed', 'backtracking')
# 连续多少轮相对变化低于 rel_tol 视为收敛
STALL_SWEEPS = 10
ARMIJO_C = 1e-4
MAX_HALVINGS = 60
INIT_NOISE = 0.25
SUPPORT_TOL = 1e-12
LM_INITIAL_DAMPING = 100.0
LM_MIN_DAMPING = 1e-12
LM_MAX_DAMPING = 1e12
LM_INNER_TRIES = 10


@dataclass(frozen=True)
class SolverConfig:
    """
    求解器配置

    Attributes:
        n_starts: 起点数
        seed: 随机种子
        max_iterations: 每个起点的最大轮数
        rel_tol: 相对目标变化阈值
        step_rule: fixed（1/L）或 backtracking（Armijo 回溯）
        abs_tol: 目标值低于该值立即停止
    """
    n_starts: int = 16
    seed: int = 0
    max_iterations: int = 100000
    rel_tol: float = 1e-9
    step_rule: str = 'backtracking'
    abs_tol: float = 1e-16

    def __post_init__(self):
        if int(self.n_starts) != self.n_starts or self.n_starts < 1:
            raise ConfigError(f"n_starts 必须是正整数: {self.n_starts}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ConfigError(f"max_iterations 必须是正整数: {self.max_iterations}")
        if int(self.seed) != self.seed:
            raise ConfigError(f"seed 必须是整数: {self.seed}")
        if not self.rel_tol > 0:
            raise ConfigError(f"rel_tol 必须为正: {self.rel_tol}")
        if not self.abs_tol >= 0:
            raise ConfigError(f"abs_tol 必须非负: {self.abs_tol}")
        if self.step_rule not in STEP_RULES:
            raise ConfigError(f"未知步长规则: {self.step_rule}（可选 {', '.join(STEP_RULES)}）")
        object.__setattr__(self, 'n_starts', int(self.n_starts))
        object.__setattr__(self, 'max_iterations', int(self.max_iterations))
        object.__setattr__(self, 'seed', int(self.seed))
        object.__setattr__(self, 'rel_tol', float(self.rel_tol))
        object.__setattr__(self, 'abs_tol', float(self.abs_tol))

    @classmethod
    def from_mapping(cls, mapping: Optional[Mapping]) -> 'SolverConfig':
        """由 YAML 读出的字典构造，未知键报错"""
        mapping = dict(mapping or {})
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ConfigError(f"未知的求解器配置项: {sorted(unknown)}")
        return cls(**mapping)

    def with_overrides(self, **overrides) -> 'SolverConfig':
        """命令行覆盖（值为 None 的项忽略）"""
        return replace(self, **{key: val for key, val in overrides.items() if val is not None})


def default_thread_count() -> int:
    try:
        return max(1, int(os.getenv('OPINIONFIT_THREADS', '1')))
    except ValueError:
        logger.warning(f"OPINIONFIT_THREADS 不是整数，使用单线程: {os.getenv('OPINIONFIT_THREADS')}")
        return 1


def _row_quadratic(G: np.ndarray, c: np.ndarray, w: np.ndarray) -> float:
    return float(w @ G @ w - 2.0 * c @ w)


def _support_solve(G: np.ndarray, c: np.ndarray, support: np.ndarray) -> Optional[np.ndarray]:
    """在支撑集上求等式约束最小二乘（KKT 方程组），支撑集外为0；解可能含负元素，无解时返回 None"""
    idx = np.flatnonzero(support)
    k = idx.size
    if k == 0:
        return None
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2.0 * G[np.ix_(idx, idx)]
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.concatenate([2.0 * c[idx], [1.0]])
    solution = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
    if not np.all(np.isfinite(solution)) or abs(solution.sum() - 1.0) > SUPPORT_TOL:
        return None
    w = np.zeros_like(c)
    w[idx] = solution
    return w


def _active_set_polish(G: np.ndarray, c: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    从可行点 w 出发的原始积极集精化

    在当前支撑集上精确求解；解含负元素时沿 w → 解 的连线走到第一个触界点，
    将该元素移出支撑集后重复。行目标沿途不增加。
    """
    x = w.copy()
    support = x > 0.0
    for _ in range(int(support.sum())):
        target = _support_solve(G, c, support)
        if target is None:
            return x
        blocking = support & (target < -SUPPORT_TOL)
        if not np.any(blocking):
            # 舍入产生的微小负值截断为0
            target = np.maximum(target, 0.0)
            return target / target.sum()
        candidates = np.flatnonzero(blocking)
        ratios = x[candidates] / (x[candidates] - target[candidates])
        first = int(np.argmin(ratios))
        x = np.maximum(x + ratios[first] * (target - x), 0.0)
        x[candidates[first]] = 0.0
        x /= x.sum()
        support = x > 0.0
    return x


class SimplexRowStepper:
    """
    单纯形约束行块：min w·G·w − 2c·w，s.t. w ≥ 0，Σw = 1

    一步投影梯度（固定步长或 Armijo 回溯）后从候选点出发做积极集精化，
    只接受不增加行目标的候选。
    """

    def __init__(self, step_rule: str):
        self.step_rule = step_rule
        self._last_step: Dict[Tuple[str, int], float] = {}

    def step(self, key: Tuple[str, int], G: np.ndarray, c: np.ndarray, w: np.ndarray) -> np.ndarray:
        current = _row_quadratic(G, c, w)
        grad = 2.0 * (G @ w - c)
        if not np.any(grad):
            return w

        if self.step_rule == 'fixed':
            lipschitz = 2.0 * float(np.linalg.eigvalsh(G)[-1])
            if lipschitz <= 0.0:
                return w
            candidate = project_simplex(w - grad / lipschitz)
        else:
            last = self._last_step.get(key)
            t = 1.0 if last is None else 2.0 * last
            candidate = w
            for _ in range(MAX_HALVINGS):
                trial = project_simplex(w - t * grad)
                if _row_quadratic(G, c, trial) <= current + ARMIJO_C * float(grad @ (trial - w)):
                    candidate = trial
                    self._last_step[key] = t
                    break
                t *= 0.5
            else:
                self._last_step.pop(key, None)

        polished = _active_set_polish(G, c, candidate)
        if _row_quadratic(G, c, polished) < _row_quadratic(G, c, candidate):
            candidate = polished
        if _row_quadratic(G, c, candidate) <= current:
            return candidate
        return w


class LatentJointStepper:
    """
    EPO 族的联合 Levenberg–Marquardt 步

    在 (A, D, Φ, S, z, X) 的内点坐标上同时求阻尼高斯-牛顿步：A 的每行沿支撑集内和为0的
    正交方向移动，盒约束参数只取严格位于 (0,1) 的元素。步后截断回可行域，仅在目标下降时接受。
    阻尼系数跨轮保留：成功减半，失败乘 √10。
    """

    def __init__(self, solver: 'BlockCoordinateSolver'):
        self.solver = solver
        self.lamb = LM_INITIAL_DAMPING

    def _box_names(self) -> List[str]:
        names = ['D', 'Phi'] + (['S', 'z'] if self.solver.family is ModelFamily.EPO else [])
        return [name for name in names if name not in self.solver.fixed]

    def jacobian(self, theta: Dict[str, np.ndarray]) -> Tuple[np.ndarray, np.ndarray, List[tuple]]:
        """
        残差 (R1, R2) 展平后对内点坐标的雅可比

        Returns:
            (J, r, moves)，moves[q] 说明第 q 个坐标如何作用到 theta
        """
        solver = self.solver
        sl = solver.sl
        n = solver.n_blogs
        lag, T_est = sl.lag, sl.t_est
        m = T_est - 1 - lag
        X = theta['X']
        A = theta['A']
        d = theta['D']
        phi = theta['Phi']
        S = theta['S']
        X_now = X[:, lag:T_est - 1]
        X_next = X[:, lag + 1:T_est]
        U = A @ sl.now
        V = A @ sl.lagged

        R1, R2 = residuals(solver.family, theta, sl)
        columns: List[np.ndarray] = []
        moves: List[tuple] = []

        for b in range(n):
            support = np.flatnonzero(A[b] > 0.0)
            if support.size < 2:
                continue
            basis = np.linalg.svd(np.ones((1, support.size)))[2][1:]
            for direction in basis:
                col = np.zeros((2, n, m))
                col[0, b] = -S[b] * (1.0 - d[b]) * (direction @ sl.now[support])
                col[1, b] = -(1.0 - phi[b]) * (direction @ sl.lagged[support])
                columns.append(col)
                moves.append(('A', b, support, direction))

        partials = {
            'D': lambda b: (0, -S[b] * (X_now[b] - U[b])),
            'Phi': lambda b: (1, -(X_next[b] - V[b])),
            'S': lambda b: (0, -(d[b] * X_now[b] + (1.0 - d[b]) * U[b] - theta['z'][b])),
            'z': lambda b: (0, np.full(m, -(1.0 - S[b]))),
        }
        for name in self._box_names():
            for b in np.flatnonzero((theta[name] > 0.0) & (theta[name] < 1.0)):
                layer, values = partials[name](b)
                col = np.zeros((2, n, m))
                col[layer, b] = values
                columns.append(col)
                moves.append((name, b))

        for b, k in zip(*np.nonzero((X > 0.0) & (X < 1.0))):
            if k < lag:
                continue
            col = np.zeros((2, n, m))
            if k >= lag + 1:
                col[0, b, k - lag - 1] += 1.0
                col[1, b, k - lag - 1] -= phi[b]
            if k <= T_est - 2:
                col[0, b, k - lag] -= S[b] * d[b]
            columns.append(col)
            moves.append(('X', b, k))

        r = np.concatenate([R1.ravel(), R2.ravel()])
        if not columns:
            return np.zeros((r.size, 0)), r, moves
        return np.stack([col.ravel() for col in columns], axis=1), r, moves

    def _apply(self, theta: Dict[str, np.ndarray], moves: List[tuple], delta: np.ndarray) -> Dict[str, np.ndarray]:
        candidate = dict(theta)
        moved = {move[0] for move in moves}
        for name in moved:
            candidate[name] = theta[name].copy()
        for move, step in zip(moves, delta):
            if move[0] == 'A':
                _, b, support, direction = move
                candidate['A'][b, support] += step * direction
            elif move[0] == 'X':
                candidate['X'][move[1], move[2]] += step
            else:
                candidate[move[0]][move[1]] += step
        for name in moved:
            if name == 'A':
                # 步长保持行和，负元素由投影截回
                candidate['A'] = project_offdiagonal_rows(candidate['A'])
            else:
                candidate[name] = project_box(candidate[name], 0.0, 1.0)
        self.solver._rebuild(candidate)
        return candidate

    def step(self, theta: Dict[str, np.ndarray], current: float) -> Tuple[Dict[str, np.ndarray], float]:
        J, r, moves = self.jacobian(theta)
        if not moves:
            return theta, current
        norms = np.linalg.norm(J, axis=0)
        scaling = np.where(norms > 0.0, norms, 1.0)
        U, s, Vt = np.linalg.svd(J / scaling, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return theta, current
        rank = int(np.sum(s > max(J.shape) * np.spacing(s[0])))
        projected = r @ U[:, :rank]
        s = s[:rank]

        for _ in range(LM_INNER_TRIES):
            delta = -((projected * s / (s * s + self.lamb ** 2)) @ Vt[:rank]) / scaling
            candidate = self._apply(theta, moves, delta)
            new_value = self.solver._value(candidate)
            if new_value < current:
                self.lamb = max(self.lamb / 2.0, LM_MIN_DAMPING)
                return candidate, new_value
            self.lamb = min(self.lamb * np.sqrt(10.0), LM_MAX_DAMPING)
        return theta, current


@dataclass
class _RunOutcome:
    start: int
    theta: Dict[str, np.ndarray]
    objective: float
    trace: List[Tuple[int, float]]
    converged: bool
    iterations: int


class BlockCoordinateSolver:
    """
    单个模型规格上的块坐标下降求解器

    块顺序：FDG {W 行}；FJ {W 行, S, z}；FDGM {W 行, S}；
    EPO {A 行, D, Φ, S, z, X 偶数列, X 奇数列}；REPO 同 EPO 但无 S、z。
    盒约束块逐元素可分，使用精确曲率的截断牛顿步（即块内精确最小化）。
    EPO 族的参数与潜状态双线性耦合，每轮末尾追加一次 LatentJointStepper 联合步。
    """

    def __init__(self, spec: ModelSpec, slices: PanelSlices, config: SolverConfig,
                 fixed: Optional[Mapping[str, np.ndarray]] = None):
        self.spec = spec
        self.family = spec.family
        self.sl = slices
        self.config = config
        self.fixed = {name: np.array(val, dtype=float) for name, val in (fixed or {}).items()}
        self.n_blogs = slices.observed.shape[0]

    # === 初始化 ===
    def initial_theta(self, start: int) -> Dict[str, np.ndarray]:
        """起点 0 为默认初值，其余起点加入 U(−0.25, 0.25) 噪声后投影"""
        n = self.n_blogs
        family = self.family
        theta: Dict[str, np.ndarray] = {}
        if family.has_latent_states:
            A = np.full((n, n), 1.0 / (n - 1))
            np.fill_diagonal(A, 0.0)
            theta['A'] = A
            theta['D'] = np.full(n, 0.5)
            theta['Phi'] = np.full(n, 0.5)
            theta['X'] = self.sl.observed.copy()
            if family is ModelFamily.EPO:
                theta['S'] = np.full(n, 0.5)
                theta['z'] = self.sl.observed.mean(axis=1)
            else:
                theta['S'] = np.ones(n)
        else:
            theta['W'] = np.full((n, n), 1.0 / n)
            if family in (ModelFamily.FJ, ModelFamily.FDGM):
                theta['S'] = np.full(n, 0.5)
            if family is ModelFamily.FJ:
                theta['z'] = self.sl.observed.mean(axis=1)

        if start > 0:
            rng = np.random.default_rng([self.config.seed, start])
            for name in sorted(theta):
                if family is ModelFamily.REPO and name == 'S':
                    continue
                noisy = theta[name] + rng.uniform(-INIT_NOISE, INIT_NOISE, size=theta[name].shape)
                if name == 'W':
                    theta[name] = project_simplex_rows(noisy)
                elif name == 'A':
                    theta[name] = project_offdiagonal_rows(noisy)
                else:
                    theta[name] = project_box(noisy, 0.0, 1.0)

        for name, val in self.fixed.items():
            theta[name] = val.copy()
        self._rebuild(theta)
        return theta

    def _rebuild(self, theta: Dict[str, np.ndarray]) -> None:
        if self.family.has_latent_states:
            theta['W'] = coupled_influence(theta['D'], theta['A'])

    def _value(self, theta: Dict[str, np.ndarray]) -> float:
        return value(self.family, theta, self.sl)

    # === 行块 ===
    def _row_blocks(self, theta: Dict[str, np.ndarray], stepper: SimplexRowStepper) -> None:
        sl = self.sl
        n = self.n_blogs
        if not self.family.has_latent_states:
            G_base = sl.now @ sl.now.T
            W = theta['W'].copy()
            for b in range(n):
                if self.family is ModelFamily.FDG:
                    s_b, target = 1.0, sl.next[b]
                elif self.family is ModelFamily.FJ:
                    s_b = theta['S'][b]
                    target = sl.next[b] - (1.0 - s_b) * theta['z'][b]
                else:
                    s_b = theta['S'][b]
                    target = sl.next[b] - (1.0 - s_b) * sl.lagged[b]
                if s_b == 0.0:
                    continue
                W[b] = stepper.step(('W', b), s_b * s_b * G_base, s_b * (sl.now @ target), W[b])
            theta['W'] = W
            return

        lag, T_est = sl.lag, sl.t_est
        X = theta['X']
        A = theta['A'].copy()
        S = theta['S']
        d = theta['D']
        phi = theta['Phi']
        z = theta.get('z')
        for b in range(n):
            others = np.arange(n) != b
            alpha = S[b] * (1.0 - d[b])
            beta = 1.0 - phi[b]
            if alpha == 0.0 and beta == 0.0:
                continue
            Y_now = sl.now[others]
            Y_lag = sl.lagged[others]
            r1 = X[b, lag + 1:T_est] - S[b] * d[b] * X[b, lag:T_est - 1]
            if z is not None:
                r1 = r1 - (1.0 - S[b]) * z[b]
            r2 = sl.next[b] - phi[b] * X[b, lag + 1:T_est]
            G = alpha * alpha * (Y_now @ Y_now.T) + beta * beta * (Y_lag @ Y_lag.T)
            c = alpha * (Y_now @ r1) + beta * (Y_lag @ r2)
            A[b, others] = stepper.step(('A', b), G, c, A[b, others])
        theta['A'] = A
        self._rebuild(theta)

    # === 盒约束块 ===
    def _curvatures(self, name: str, theta: Dict[str, np.ndarray]) -> np.ndarray:
        sl = self.sl
        family = self.family
        if family in (ModelFamily.FJ, ModelFamily.FDGM):
            if name == 'z':
                return 2.0 * sl.now.shape[1] * (1.0 - theta['S']) ** 2
            anchor = theta['z'][:, None] if family is ModelFamily.FJ else sl.lagged
            return 2.0 * np.sum((theta['W'] @ sl.now - anchor) ** 2, axis=1)

        lag, T_est = sl.lag, sl.t_est
        X = theta['X']
        d = theta['D']
        S = theta['S']
        X_now = X[:, lag:T_est - 1]
        U = theta['A'] @ sl.now
        if name == 'D':
            return 2.0 * np.sum((S[:, None] * (X_now - U)) ** 2, axis=1)
        if name == 'S':
            private = d[:, None] * X_now + (1.0 - d)[:, None] * U
            return 2.0 * np.sum((private - theta['z'][:, None]) ** 2, axis=1)
        if name == 'z':
            return 2.0 * sl.now.shape[1] * (1.0 - S) ** 2
        if name == 'Phi':
            V = theta['A'] @ sl.lagged
            return 2.0 * np.sum((X[:, lag + 1:T_est] - V) ** 2, axis=1)
        raise KeyError(name)

    def _newton_box(self, name: str, theta: Dict[str, np.ndarray]) -> None:
        h = self._curvatures(name, theta)
        g = gradient(self.family, theta, self.sl)[name]
        active = h > 0.0
        if not np.any(active):
            return
        updated = theta[name].copy()
        updated[active] = project_box(updated[active] - g[active] / h[active], 0.0, 1.0)
        theta[name] = updated
        if name == 'D':
            self._rebuild(theta)

    def _latent_columns(self, theta: Dict[str, np.ndarray], parity: int) -> None:
        sl = self.sl
        lag, T_est = sl.lag, sl.t_est
        S = theta['S']
        d = theta['D']
        phi = theta['Phi']
        g = gradient(self.family, theta, sl)['X']
        X = theta['X'].copy()
        for k in range(parity, T_est, 2):
            h = np.zeros(self.n_blogs)
            if k >= lag + 1:
                h += 2.0 * (1.0 + phi * phi)
            if lag <= k <= T_est - 2:
                h += 2.0 * (S * d) ** 2
            active = h > 0.0
            X[active, k] = project_box(X[active, k] - g[active, k] / h[active], 0.0, 1.0)
        theta['X'] = X

    def _blocks(self) -> List[str]:
        family = self.family
        names = {
            ModelFamily.FDG: ['rows'],
            ModelFamily.FJ: ['rows', 'S', 'z'],
            ModelFamily.FDGM: ['rows', 'S'],
            ModelFamily.EPO: ['rows', 'D', 'Phi', 'S', 'z', 'X0', 'X1'],
            ModelFamily.REPO: ['rows', 'D', 'Phi', 'X0', 'X1'],
        }[family]
        return [name for name in names if name not in self.fixed]

    def sweep(self, theta: Dict[str, np.ndarray], current: float,
              stepper: SimplexRowStepper,
              joint: Optional[LatentJointStepper] = None) -> Tuple[Dict[str, np.ndarray], float]:
        """依次更新所有块（每块仅在目标不增加时接受），EPO 族最后再做一次联合步"""
        for block in self._blocks():
            candidate = dict(theta)
            if block == 'rows':
                self._row_blocks(candidate, stepper)
            elif block in ('X0', 'X1'):
                self._latent_columns(candidate, int(block[1]))
            else:
                self._newton_box(block, candidate)
            new_value = self._value(candidate)
            if new_value <= current:
                theta, current = candidate, new_value
        if joint is not None:
            theta, current = joint.step(theta, current)
        return theta, current

    def run(self, start: int) -> _RunOutcome:
        config = self.config
        theta = self.initial_theta(start)
        current = self._value(theta)
        trace = [(0, current)]
        stepper = SimplexRowStepper(config.step_rule)
        joint = LatentJointStepper(self) if self.family.has_latent_states else None
        stall = 0
        converged = current <= config.abs_tol
        iterations = 0
        logger.info(f"{self.spec.label} 起点 {start} 开始，初始目标 {current:.6g}")

        while not converged and iterations < config.max_iterations:
            iterations += 1
            previous = current
            theta, current = self.sweep(theta, current, stepper, joint)
            if current < previous:
                trace.append((iterations, current))
            if current <= config.abs_tol:
                converged = True
                break
            if (previous - current) <= config.rel_tol * max(previous, np.finfo(float).tiny):
                stall += 1
                if stall >= STALL_SWEEPS:
                    converged = True
            else:
                stall = 0
            if iterations % 1000 == 0:
                logger.debug(f"{self.spec.label} 起点 {start} 第 {iterations} 轮，目标 {current:.10g}")

        if trace[-1][0] != iterations:
            trace.append((iterations, current))
        status = '收敛' if converged else '达到最大轮数'
        logger.info(f"{self.spec.label} 起点 {start} 结束（{status}），{iterations} 轮，目标 {current:.6g}")
        return _RunOutcome(start, theta, current, trace, converged, iterations)


def _check_fit_inputs(spec: ModelSpec, panel: SentimentPanel, T_est: int,
                      fixed: Mapping[str, np.ndarray]) -> None:
    if isinstance(T_est, bool) or int(T_est) != T_est:
        raise InvalidSplit(f"T_est 必须是整数: {T_est}")
    if not spec.lag + 3 <= T_est <= panel.n_periods:
        raise InvalidSplit(
            f"T_est={T_est} 不合法: 需要 {spec.lag + 3} ≤ T_est ≤ {panel.n_periods}（至少两个残差项）"
        )
    if spec.family.has_latent_states and panel.n_blogs < 2:
        raise DimensionMismatch("EPO 族要求至少2个博客")
    allowed = _freezable_for(spec)
    for name, val in fixed.items():
        if name not in allowed:
            raise InvalidParameter(f"{spec.label} 不能冻结参数 {name}（可冻结: {sorted(allowed)}）")
        arr = np.asarray(val, dtype=float)
        if arr.shape != (panel.n_blogs,):
            raise DimensionMismatch(f"冻结参数 {name} 形状应为 ({panel.n_blogs},)，实际 {arr.shape}")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise InvalidParameter(f"冻结参数 {name} 必须位于 [0,1]")


def _freezable_for(spec: ModelSpec) -> frozenset:
    return {
        ModelFamily.FDG: frozenset(),
        ModelFamily.FJ: frozenset({'S', 'z'}),
        ModelFamily.FDGM: frozenset({'S'}),
        ModelFamily.EPO: frozenset({'D', 'S', 'Phi', 'z'}),
        ModelFamily.REPO: frozenset({'D', 'Phi'}),
    }[spec.family]


def _to_params(spec: ModelSpec, theta: Dict[str, np.ndarray]) -> ParamSet:
    family = spec.family
    if family is ModelFamily.FDG:
        kwargs = {'W': theta['W']}
    elif family is ModelFamily.FJ:
        kwargs = {'W': theta['W'], 'S': theta['S'], 'z': theta['z']}
    elif family is ModelFamily.FDGM:
        kwargs = {'W': theta['W'], 'S': theta['S']}
    else:
        kwargs = {name: theta[name] for name in ('A', 'D', 'Phi', 'X')}
        if family is ModelFamily.EPO:
            kwargs.update(S=theta['S'], z=theta['z'])
    return ParamSet.create(spec, renormalize=False, **kwargs)


def fit(spec: ModelSpec, panel: SentimentPanel, T_est: int, config: Optional[SolverConfig] = None,
        fixed: Optional[Mapping[str, np.ndarray]] = None, max_workers: Optional[int] = None) -> FitResult:
    """
    在训练期 1..T_est 上拟合模型

    Args:
        spec: 模型规格
        panel: 观测面板
        T_est: 训练期数（≥ lag+3）
        config: 求解器配置
        fixed: 冻结的盒约束参数（例如 FJ 的 S = 1）
        max_workers: 多起点并行线程数，默认取 OPINIONFIT_THREADS

    Returns:
        全部起点中目标最小的结果（并列取起点序号最小者）
    """
    config = config or SolverConfig()
    fixed = dict(fixed or {})
    _check_fit_inputs(spec, panel, T_est, fixed)
    solver = BlockCoordinateSolver(spec, slice_panel(panel.values, T_est, spec.lag), config, fixed)
    workers = min(max_workers or default_thread_count(), config.n_starts)
    logger.info(f"开始拟合 {spec.label}: T_est={T_est}, 起点数={config.n_starts}, 线程数={workers}")

    starts = range(config.n_starts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(solver.run, starts))
    else:
        outcomes = [solver.run(start) for start in starts]

    best = min(outcomes, key=lambda outcome: (outcome.objective, outcome.start))
    params = _to_params(spec, best.theta)
    final = objective(spec, params, panel, T_est)
    trace = list(best.trace)
    if final < trace[-1][1]:
        trace.append((best.iterations, final))
    logger.info(f"拟合完成 {spec.label}: 最优起点 {best.start}，目标 {final:.6g}")
    return FitResult(
        spec=spec,
        params=params,
        objective=final,
        n_train_periods=T_est,
        solver_trace=tuple(trace),
        seed=config.seed,
        n_starts=config.n_starts,
        converged=best.converged,
        iterations=best.iterations,
        blog_ids=panel.blog_ids,
        period_labels=panel.period_labels[:T_est],
    )

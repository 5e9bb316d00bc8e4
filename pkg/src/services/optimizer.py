"""量子模型参数上的无导数约束最大化

参数化：Schmidt 角 θ ∈ [0, π/4]（可固定）加四个 x-z 平面测量角 a1 a2 b1 b2。
每次重启做一轮 Nelder-Mead 局部搜索；等式约束用二次罚函数，
权重从 penalty_start 开始逐轮翻倍，残差进入限度即停止加压，最后总在 penalty_cap 上收尾。
内循环直接在展平的概率表上求目标和罚项。
"""
from __future__ import annotations

import enum
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import minimize

from ..core.behavior import Behavior, chsh_delta, correlations, index_of_name
from ..core.config import settings
from ..core.exceptions import BehaviorFormatError, OptimizationError, PreconditionError
from ..core.hardy import hardy_set, sigma
from .quantum import SETTING_NAMES, QuantumModel, behavior_from_model, planar_model, planar_table

logger = logging.getLogger(__name__)

THETA_MAX = math.pi / 4
TWO_PI = 2.0 * math.pi

HARDY_RESIDUAL_LIMIT = 1e-8
GHZ_RESIDUAL_LIMIT = 1e-6


class StateClass(str, enum.Enum):
    ANY = "any"
    PRODUCT = "product"
    MAXIMALLY_ENTANGLED = "maximally_entangled"

    @property
    def theta(self) -> Optional[float]:
        return {StateClass.ANY: None, StateClass.PRODUCT: 0.0, StateClass.MAXIMALLY_ENTANGLED: THETA_MAX}[self]


class OptimizationConfig(BaseModel):
    """优化配置；默认值来自全局 settings"""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    restarts: int = Field(default_factory=lambda: settings.restarts, ge=1)
    max_iters: int = Field(default_factory=lambda: settings.max_iters, ge=1)
    tol: float = Field(default_factory=lambda: settings.opt_tol, gt=0)
    seed: int = Field(default_factory=lambda: settings.seed, ge=0)
    penalty_start: float = Field(default_factory=lambda: settings.penalty_start, gt=0)
    penalty_cap: float = Field(default_factory=lambda: settings.penalty_cap, gt=0)
    workers: int = Field(default_factory=lambda: settings.workers, ge=1)

    @model_validator(mode="after")
    def _check_schedule(self) -> "OptimizationConfig":
        if not self.penalty_start < self.penalty_cap:
            raise ValueError("penalty_start 必须小于 penalty_cap")
        return self

    def penalty_schedule(self) -> List[float]:
        """严格递增的罚权重序列：逐轮翻倍，最后一项为 cap"""
        weights = []
        w = self.penalty_start
        while w < self.penalty_cap:
            weights.append(w)
            w *= 2.0
        weights.append(self.penalty_cap)
        return weights

    @classmethod
    def from_file(cls, path: Union[str, Path], **overrides) -> "OptimizationConfig":
        """读取 {"restarts":n,"max_iters":n,"tol":x,"seed":n}"""
        with open(path, "r", encoding="utf-8") as file:
            data = json.load(file)
        if not isinstance(data, dict):
            raise BehaviorFormatError(f"配置文件必须是 JSON 对象: {path}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


@dataclass(frozen=True)
class _Problem:
    """一个待最大化的问题；只含普通数据，便于多进程分发"""

    kind: str
    objective: Tuple[str, ...]
    constraints: Tuple[Tuple[str, float], ...] = ()
    theta: Optional[float] = None
    residual_limit: float = HARDY_RESIDUAL_LIMIT
    initial: Optional[Tuple[float, ...]] = None

    @property
    def dimension(self) -> int:
        return 4 if self.theta is not None else 5


def _split(problem: _Problem, x: Sequence[float]) -> Tuple[float, np.ndarray]:
    if problem.theta is not None:
        return problem.theta, np.asarray(x, dtype=float)
    return float(x[0]), np.asarray(x[1:], dtype=float)


def _objective_value(problem: _Problem, b: Behavior) -> float:
    if problem.objective == ("chsh",):
        return chsh_delta(b)
    return math.fsum(b[name] for name in problem.objective)


def _constraint_residuals(problem: _Problem, b: Behavior) -> Dict[str, float]:
    return {name: abs(b[name] - target) for name, target in problem.constraints}


# Δ 在展平概率表上的系数：块符号 (+, +, +, -) 乘以 (pp, pm, mp, mm) 的 (1, -1, -1, 1)
CHSH_WEIGHTS = np.array([s * e for s in (1, 1, 1, -1) for e in (1, -1, -1, 1)], dtype=float)


@dataclass(frozen=True)
class _Terms:
    """问题在展平概率表上的下标形式，内循环直接在数组上求值"""

    objective: np.ndarray
    zero_index: np.ndarray
    value_index: np.ndarray
    value_target: np.ndarray
    constraint_index: np.ndarray
    constraint_target: np.ndarray

    @classmethod
    def of(cls, problem: _Problem) -> "_Terms":
        if problem.objective == ("chsh",):
            weights = CHSH_WEIGHTS
        else:
            weights = np.zeros(16)
            for name in problem.objective:
                weights[index_of_name(name)] += 1.0
        zeros = [index_of_name(name) for name, target in problem.constraints if target == 0.0]
        values = [(index_of_name(name), target) for name, target in problem.constraints if target != 0.0]
        return cls(
            objective=weights,
            zero_index=np.array(zeros, dtype=int),
            value_index=np.array([i for i, _ in values], dtype=int),
            value_target=np.array([t for _, t in values], dtype=float),
            constraint_index=np.array([index_of_name(name) for name, _ in problem.constraints], dtype=int),
            constraint_target=np.array([t for _, t in problem.constraints], dtype=float),
        )

    def value(self, table: np.ndarray) -> float:
        return float(self.objective @ table)

    def penalty(self, table: np.ndarray) -> float:
        # p = 0 的约束按振幅 √p 计残差，平方后即 p 本身
        zero = table[self.zero_index].sum()
        value = np.square(table[self.value_index] - self.value_target).sum()
        return float(zero + value)

    def residual(self, table: np.ndarray) -> float:
        if self.constraint_index.size == 0:
            return 0.0
        return float(np.abs(table[self.constraint_index] - self.constraint_target).max())


def _table(problem: _Problem, x: Sequence[float]) -> np.ndarray:
    theta, angles = _split(problem, x)
    return planar_table(min(max(theta, 0.0), THETA_MAX), angles).reshape(16)


def _random_start(problem: _Problem, rng: np.random.Generator) -> np.ndarray:
    angles = rng.uniform(0.0, TWO_PI, size=4)
    if problem.theta is not None:
        return angles
    return np.concatenate([[rng.uniform(0.0, THETA_MAX)], angles])


def _local_simplex(problem: _Problem, x: np.ndarray, step: float) -> np.ndarray:
    """以 x 为顶点、边长 step 的初始单纯形；θ 贴近上界时向内取步"""
    simplex = np.tile(x, (x.size + 1, 1))
    for i in range(x.size):
        h = step
        if problem.theta is None and i == 0 and x[0] + h > THETA_MAX:
            h = -h
        simplex[i + 1, i] += h
    return simplex


@dataclass(frozen=True)
class _RestartOutcome:
    index: int
    value: float
    x: Tuple[float, ...]
    success: bool
    nfev: int
    nit: int
    residual: float


# 第一阶段之后，初始单纯形以上一阶段的解为顶点，边长取此值
CONTINUATION_STEP = 1e-3


def _run_restart(problem: _Problem, cfg: OptimizationConfig, index: int) -> _RestartOutcome:
    rng = np.random.default_rng([cfg.seed, index])
    if index == 0 and problem.initial is not None:
        x = np.asarray(problem.initial, dtype=float)
        if x.shape != (problem.dimension,):
            raise PreconditionError(f"初始点维度应为 {problem.dimension}，收到 {x.shape}")
    else:
        x = _random_start(problem, rng)

    terms = _Terms.of(problem)
    bounds = None if problem.theta is not None else [(0.0, THETA_MAX)] + [(None, None)] * 4
    nfev = nit = 0
    success = False

    def stage(x: np.ndarray, w: float, local: bool) -> np.ndarray:
        nonlocal nfev, nit, success

        def loss(z: np.ndarray) -> float:
            t = _table(problem, z)
            return -terms.value(t) + w * terms.penalty(t)

        options = {"maxiter": cfg.max_iters, "xatol": 1e-10, "fatol": cfg.tol, "adaptive": True}
        if local:
            options["initial_simplex"] = _local_simplex(problem, x, CONTINUATION_STEP)
        result = minimize(loss, x, method="Nelder-Mead", bounds=bounds, options=options)
        nfev += int(result.nfev)
        nit += int(result.nit)
        success = bool(result.success)
        return result.x

    if not problem.constraints:
        x = stage(x, 0.0, local=False)
    else:
        # 逐轮加压，残差一旦进入限度就提前结束，最后总在 cap 上收尾
        for step, w in enumerate(cfg.penalty_schedule()[:-1]):
            x = stage(x, w, local=step > 0)
            if terms.residual(_table(problem, x)) <= problem.residual_limit:
                break
        x = stage(x, cfg.penalty_cap, local=True)

    table = _table(problem, x)
    value = terms.value(table)
    residual = terms.residual(table)
    logger.info(
        "%s restart %d: value=%.10f residual=%.3g nfev=%d success=%s",
        problem.kind, index, value, residual, nfev, success,
    )
    return _RestartOutcome(index, value, tuple(float(v) for v in x), success, nfev, nit, residual)


@dataclass(frozen=True)
class OptimizationResult:
    """优化结果；最优点处的行为由 behavior_from_model 重新计算"""

    kind: str
    objective: float
    parameters: Dict[str, float]
    model: QuantumModel
    behavior: Behavior
    residuals: Dict[str, float]
    converged: bool
    status: str
    restarts: int
    evaluations: int
    iterations: int
    restart_values: Tuple[float, ...]
    delta: float
    sigma: Optional[float] = None
    witness: Optional[float] = None

    @property
    def delta_abs(self) -> float:
        return abs(self.delta)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_dict(self) -> Dict[str, object]:
        return {
            "kind": self.kind,
            "objective": self.objective,
            "converged": self.converged,
            "status": self.status,
            "parameters": self.parameters,
            "residuals": self.residuals,
            "max_residual": self.max_residual,
            "delta": self.delta,
            "delta_abs": self.delta_abs,
            "sigma": self.sigma,
            "witness": self.witness,
            "restarts": self.restarts,
            "evaluations": self.evaluations,
            "iterations": self.iterations,
            "restart_values": list(self.restart_values),
            "behavior": self.behavior.as_dict(),
            "model": self.model.to_dict(),
        }


def _wrap(angle: float) -> float:
    return angle % TWO_PI


def _solve(problem: _Problem, cfg: Optional[OptimizationConfig]) -> OptimizationResult:
    cfg = cfg or OptimizationConfig()
    indices = range(cfg.restarts)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_run_restart, [problem] * cfg.restarts, [cfg] * cfg.restarts, indices))
    else:
        outcomes = [_run_restart(problem, cfg, i) for i in indices]

    finite = [o for o in outcomes if math.isfinite(o.value)]
    if not finite:
        raise OptimizationError(f"{problem.kind}: 所有重启都没有得到有限的目标值")

    def rank(o: _RestartOutcome) -> Tuple[bool, float, int]:
        return o.residual <= problem.residual_limit, o.value, -o.index

    # 可行者优先，其次目标最大，平局取最小重启下标
    best = max(finite, key=rank)

    theta, angles = _split(problem, best.x)
    theta = min(max(theta, 0.0), THETA_MAX)
    angles = [_wrap(a) for a in angles]
    model = planar_model(theta, angles)
    behavior = behavior_from_model(model)
    objective = _objective_value(problem, behavior)
    residuals = _constraint_residuals(problem, behavior)

    within = max(residuals.values(), default=0.0) <= problem.residual_limit
    converged = any(o.success for o in outcomes) and within
    if not within:
        status = "constraint residual above limit"
    elif not converged:
        status = "not converged"
    else:
        status = "converged"
    if status != "converged":
        logger.warning("%s: %s (objective=%.10f)", problem.kind, status, objective)

    parameters = {"theta": theta, **dict(zip(SETTING_NAMES, angles))}
    return OptimizationResult(
        kind=problem.kind,
        objective=objective,
        parameters=parameters,
        model=model,
        behavior=behavior,
        residuals=residuals,
        converged=converged,
        status=status,
        restarts=cfg.restarts,
        evaluations=sum(o.nfev for o in outcomes),
        iterations=sum(o.nit for o in outcomes),
        restart_values=tuple(o.value for o in outcomes),
        delta=correlations(behavior).delta,
    )


def maximize_chsh(
    state_class: Union[StateClass, str] = StateClass.ANY,
    cfg: Optional[OptimizationConfig] = None,
) -> OptimizationResult:
    """最大化 Δ；product 固定 θ=0，maximally_entangled 固定 θ=π/4"""
    state_class = StateClass(state_class)
    problem = _Problem(kind=f"chsh:{state_class.value}", objective=("chsh",), theta=state_class.theta)
    return _solve(problem, cfg)


def _with_hardy_fields(result: OptimizationResult) -> OptimizationResult:
    hs = hardy_set("8g")
    return replace(result, sigma=sigma(result.behavior, hs), witness=result.behavior[hs.witness])


def maximize_hardy(
    cfg: Optional[OptimizationConfig] = None,
    theta: Optional[float] = None,
    initial: Optional[Sequence[float]] = None,
) -> OptimizationResult:
    """在 p4 = p5 = p9 = 0 的约束下最大化 p13

    theta 不为 None 时固定 Schmidt 角；initial 作为第 0 次重启的起点
    （长度 5：θ a1 a2 b1 b2；固定 θ 时长度 4）。
    """
    if theta is not None and not 0.0 <= theta <= THETA_MAX:
        raise PreconditionError(f"θ 必须在 [0, π/4] 内，收到 {theta}")
    problem = _Problem(
        kind="hardy" if theta is None else f"hardy:theta={theta:.6f}",
        objective=("p13",),
        constraints=(("p4", 0.0), ("p5", 0.0), ("p9", 0.0)),
        theta=theta,
        residual_limit=HARDY_RESIDUAL_LIMIT,
        initial=tuple(initial) if initial is not None else None,
    )
    return _with_hardy_fields(_solve(problem, cfg))


def maximize_hardy_maxent(cfg: Optional[OptimizationConfig] = None) -> OptimizationResult:
    """最大纠缠态（θ = π/4）下的 Hardy 最大值，预期约为 0"""
    return maximize_hardy(cfg, theta=THETA_MAX)


def ghz_impossibility(cfg: Optional[OptimizationConfig] = None, target: float = 0.5) -> OptimizationResult:
    """在 p1=p4=p5=p8=p9=p12=target 的约束下最大化 p14 + p15

    target = 1/2 时预期最优值约为 0。第 0 次重启从最大纠缠态、四个方向对齐处出发，
    该点满足全部约束。
    """
    if not 0.0 < target <= 0.5:
        raise PreconditionError(f"target 必须在 (0, 1/2] 内，收到 {target}")
    problem = _Problem(
        kind=f"ghz:target={target:g}",
        objective=("p14", "p15"),
        constraints=tuple((name, target) for name in ("p1", "p4", "p5", "p8", "p9", "p12")),
        residual_limit=GHZ_RESIDUAL_LIMIT,
        initial=(THETA_MAX, 0.0, 0.0, 0.0, 0.0),
    )
    return _solve(problem, cfg)


@dataclass(frozen=True)
class ScanRow:
    theta: float
    p13: float
    delta: float
    sigma: float
    status: str

    def as_row(self) -> List[object]:
        return [self.theta, self.p13, self.delta, self.sigma, self.status]


SCAN_HEADER = ("theta", "p13", "delta", "sigma", "status")


def scan_theta(lo: float, hi: float, steps: int, cfg: Optional[OptimizationConfig] = None) -> List[ScanRow]:
    """在 [lo, hi] 的等距 θ 网格上逐点运行固定 θ 的 maximize_hardy"""
    if steps < 2:
        raise PreconditionError(f"steps 至少为 2，收到 {steps}")
    if not 0.0 <= lo <= hi <= THETA_MAX + 1e-12:
        raise PreconditionError(f"扫描区间必须落在 [0, π/4] 内: [{lo}, {hi}]")

    rows = []
    for theta in np.linspace(lo, hi, steps):
        theta = float(min(theta, THETA_MAX))
        result = maximize_hardy(cfg, theta=theta)
        rows.append(ScanRow(theta, result.witness, result.delta_abs, result.sigma, result.status))
        logger.info("scan θ=%.6f p13=%.10f", theta, result.witness)
    return rows

"""典型行为的构造器（PR 盒、确定性局域盒、均匀盒、量子极值盒）与局域性判定"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from .behavior import (
    DEPENDENT_NAMES,
    FREE_NAMES,
    OUTCOMES,
    PROBABILITY_NAMES,
    Behavior,
    ChshVariant,
    chsh_variants,
    ensure_valid,
    flat_index,
    resolve_tolerance,
)
from .exceptions import BehaviorFormatError, PreconditionError

logger = logging.getLogger(__name__)

# 量子极值集中 𝒰 的取值 (2 + √2) / 8
QUANTUM_EXTREMAL_VALUE = (2.0 + math.sqrt(2.0)) / 8.0

_SIGN_CHARS = {"+": 1, "-": -1, "−": -1}


@dataclass(frozen=True)
class DeterministicAssignment:
    """局域确定性策略：每个测量的结果都事先确定"""

    a1: int
    a2: int
    b1: int
    b2: int

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2"):
            if getattr(self, name) not in OUTCOMES:
                raise BehaviorFormatError(f"{name} 必须是 +1 或 -1")

    @classmethod
    def parse(cls, text: str) -> "DeterministicAssignment":
        """解析 "+-+-" 这样的四字符写法，顺序为 a1 a2 b1 b2"""
        try:
            signs = [_SIGN_CHARS[ch] for ch in text.strip()]
        except KeyError:
            raise BehaviorFormatError(f"无法解析确定性策略: {text!r}") from None
        if len(signs) != 4:
            raise BehaviorFormatError(f"确定性策略需要 4 个符号，收到 {text!r}")
        return cls(*signs)

    @classmethod
    def all(cls) -> Tuple["DeterministicAssignment", ...]:
        return tuple(cls(*signs) for signs in itertools.product(OUTCOMES, repeat=4))

    def outcome(self, side: str, setting: int) -> int:
        return getattr(self, f"{side.lower()}{setting}")

    @property
    def label(self) -> str:
        return "".join("+" if s > 0 else "-" for s in (self.a1, self.a2, self.b1, self.b2))


def _from_sets(free_value: float, dependent_value: float) -> Behavior:
    values = {name: free_value for name in FREE_NAMES}
    values.update({name: dependent_value for name in DEPENDENT_NAMES})
    return Behavior.from_flat([values[name] for name in PROBABILITY_NAMES])


def _check_variant(variant: int) -> None:
    if variant not in (1, 2):
        raise PreconditionError(f"variant 必须是 1 或 2，收到 {variant!r}")


def pr_box(variant: int = 1) -> Behavior:
    """variant 1：𝒰 全为 1/2、𝒱 全为 0（Δ = 4）；variant 2 反之（Δ = -4）"""
    _check_variant(variant)
    return _from_sets(0.5, 0.0) if variant == 1 else _from_sets(0.0, 0.5)


def quantum_extremal_box(variant: int = 1) -> Behavior:
    """𝒰 全为 (2+√2)/8、𝒱 全为 1/2 - (2+√2)/8（Δ = 2√2）；variant 2 反之"""
    _check_variant(variant)
    high, low = QUANTUM_EXTREMAL_VALUE, 0.5 - QUANTUM_EXTREMAL_VALUE
    return _from_sets(high, low) if variant == 1 else _from_sets(low, high)


def uniform_box() -> Behavior:
    return Behavior.from_flat([0.25] * 16)


def deterministic_box(d: DeterministicAssignment) -> Behavior:
    values = np.zeros(16)
    for j, k in itertools.product((1, 2), repeat=2):
        values[flat_index(j, k, d.outcome("A", j), d.outcome("B", k))] = 1.0
    return Behavior.from_flat(values)


def box_by_name(name: str) -> Behavior:
    """命令行/接口使用的名字：pr, pr2, uniform, det:<±±±±>, qextremal, qextremal2"""
    key = name.strip().lower()
    if key.startswith("det:"):
        return deterministic_box(DeterministicAssignment.parse(name.strip()[4:]))
    builders = {
        "pr": lambda: pr_box(1),
        "pr1": lambda: pr_box(1),
        "pr2": lambda: pr_box(2),
        "uniform": uniform_box,
        "qextremal": lambda: quantum_extremal_box(1),
        "qextremal1": lambda: quantum_extremal_box(1),
        "qextremal2": lambda: quantum_extremal_box(2),
    }
    builder = builders.get(key)
    if builder is None:
        raise BehaviorFormatError(f"未知的盒子名: {name!r}。可用: pr, pr2, uniform, det:++++, qextremal, qextremal2")
    return builder()


@dataclass(frozen=True)
class LocalityResult:
    """局域性判定结果

    distance 是到 16 个确定性盒凸包的最小最大范数距离；witness 是取值最大的
    对称化 CHSH 表达式，非局域时它超过 2。
    """

    local: bool
    distance: float
    tolerance: float
    witness: ChshVariant
    weights: Optional[Tuple[float, ...]] = None

    def __bool__(self) -> bool:
        return self.local

    def to_dict(self) -> dict:
        return {
            "local": self.local,
            "distance": self.distance,
            "tolerance": self.tolerance,
            "witness": {"expression": self.witness.label, "value": self.witness.value},
            "weights": list(self.weights) if self.weights is not None else None,
        }


def _deterministic_matrix() -> np.ndarray:
    """列为 16 个确定性盒的展平向量"""
    return np.column_stack([deterministic_box(d).flat for d in DeterministicAssignment.all()])


def is_local(b: Behavior, tol: Optional[float] = None) -> LocalityResult:
    """线性规划判定 b 是否在确定性盒凸包的 tol 邻域内（最大范数）"""
    tol = resolve_tolerance(tol)
    ensure_valid(b, tol)

    vertices = _deterministic_matrix()
    n = vertices.shape[1]
    target = b.flat
    # 变量 (w_1..w_16, t)：min t，s.t. |V w - p| <= t，Σ w = 1，w >= 0
    ones = np.ones((16, 1))
    a_ub = np.block([[vertices, -ones], [-vertices, -ones]])
    b_ub = np.concatenate([target, -target])
    a_eq = np.concatenate([np.ones(n), [0.0]]).reshape(1, -1)
    cost = np.concatenate([np.zeros(n), [1.0]])

    result = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=(0, None), method="highs")
    if not result.success:
        raise PreconditionError(f"局域性线性规划失败: {result.message}")

    distance = float(result.fun)
    local = distance <= tol
    witness = max(chsh_variants(b), key=lambda v: v.value)
    weights = tuple(float(w) for w in result.x[:n]) if local else None
    logger.debug("is_local: distance=%.3g witness=%s=%.6f", distance, witness.label, witness.value)
    return LocalityResult(local, distance, tol, witness, weights)

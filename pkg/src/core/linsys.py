"""归一化与无信号条件构成的 12x16 线性方程组

自由变量集 𝒰 = {p1,p4,p5,p8,p9,p12,p14,p15}，
依赖变量集 𝒱 = {p2,p3,p6,p7,p10,p11,p13,p16} 由闭式解 (8a)-(8h) 给出。
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, fields
from math import gcd
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .behavior import (
    DEPENDENT_NAMES,
    FREE_NAMES,
    PROBABILITY_NAMES,
    Behavior,
    ConstraintCheck,
    ConstraintReport,
    resolve_tolerance,
)
from .exceptions import BehaviorFormatError, InternalConsistencyError, PreconditionError

logger = logging.getLogger(__name__)

# 4 行归一化加 8 行无信号：(正号项, 负号项, 右端)
EQUATION_ROWS: Tuple[Tuple[Tuple[str, ...], Tuple[str, ...], int], ...] = (
    (("p1", "p2", "p3", "p4"), (), 1),
    (("p5", "p6", "p7", "p8"), (), 1),
    (("p9", "p10", "p11", "p12"), (), 1),
    (("p13", "p14", "p15", "p16"), (), 1),
    (("p1", "p2"), ("p5", "p6"), 0),
    (("p3", "p4"), ("p7", "p8"), 0),
    (("p9", "p10"), ("p13", "p14"), 0),
    (("p11", "p12"), ("p15", "p16"), 0),
    (("p1", "p3"), ("p9", "p11"), 0),
    (("p2", "p4"), ("p10", "p12"), 0),
    (("p5", "p7"), ("p13", "p15"), 0),
    (("p6", "p8"), ("p14", "p16"), 0),
)

# (8a)-(8h)：pV = (1 + Σ coeff * pU) / 2，系数按 FREE_NAMES 的顺序
CLOSED_FORMS: Dict[str, Tuple[int, ...]] = {
    "p2": (-1, -1, +1, -1, -1, +1, +1, -1),
    "p3": (-1, -1, -1, +1, +1, -1, -1, +1),
    "p6": (+1, -1, -1, -1, -1, +1, +1, -1),
    "p7": (-1, +1, -1, -1, +1, -1, -1, +1),
    "p10": (-1, +1, +1, -1, -1, -1, +1, -1),
    "p11": (+1, -1, -1, +1, -1, -1, -1, +1),
    "p13": (-1, +1, +1, -1, +1, -1, -1, -1),
    "p16": (+1, -1, -1, +1, -1, +1, -1, -1),
}

# 每个闭式解对应的关系编号
RELATION_LABELS: Dict[str, str] = dict(zip(DEPENDENT_NAMES, ("8a", "8b", "8c", "8d", "8e", "8f", "8g", "8h")))

SUBSTITUTION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ConstraintMatrix:
    """系数矩阵（元素取自 {-1, 0, +1}）与右端向量"""

    coefficients: Tuple[Tuple[int, ...], ...]
    rhs: Tuple[int, ...]

    def __post_init__(self):
        if len(self.coefficients) != len(self.rhs):
            raise BehaviorFormatError("系数矩阵行数与右端长度不一致")
        for row in self.coefficients:
            if len(row) != 16:
                raise BehaviorFormatError(f"每行必须有 16 个系数，收到 {len(row)} 个")
            if any(c not in (-1, 0, 1) for c in row):
                raise BehaviorFormatError(f"系数只能是 -1, 0, +1: {row}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.coefficients), 16)

    def as_array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=float)

    def take_rows(self, rows: Sequence[int]) -> "ConstraintMatrix":
        return ConstraintMatrix(
            tuple(self.coefficients[r] for r in rows),
            tuple(self.rhs[r] for r in rows),
        )


@dataclass(frozen=True)
class FreeSet:
    """自由变量集 𝒰"""

    p1: float
    p4: float
    p5: float
    p8: float
    p9: float
    p12: float
    p14: float
    p15: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise BehaviorFormatError(f"{f.name} 必须是有限实数，收到 {value!r}")
            object.__setattr__(self, f.name, float(value))

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "FreeSet":
        missing = [name for name in FREE_NAMES if name not in values]
        if missing:
            raise BehaviorFormatError(f"自由变量集缺少: {', '.join(missing)}")
        return cls(**{name: values[name] for name in FREE_NAMES})

    @classmethod
    def constant(cls, value: float) -> "FreeSet":
        return cls(*([value] * len(FREE_NAMES)))

    @classmethod
    def from_behavior(cls, b: Behavior) -> "FreeSet":
        return cls(*(b[name] for name in FREE_NAMES))

    def values(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in FREE_NAMES)

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(FREE_NAMES, self.values()))


@dataclass(frozen=True)
class DependentSet:
    """依赖变量集 𝒱；取值可能落在 [0, 1] 之外，这本身就是诊断信息"""

    p2: float
    p3: float
    p6: float
    p7: float
    p10: float
    p11: float
    p13: float
    p16: float

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "DependentSet":
        missing = [name for name in DEPENDENT_NAMES if name not in values]
        if missing:
            raise BehaviorFormatError(f"依赖变量集缺少: {', '.join(missing)}")
        return cls(**{name: float(values[name]) for name in DEPENDENT_NAMES})

    @classmethod
    def from_behavior(cls, b: Behavior) -> "DependentSet":
        return cls(*(b[name] for name in DEPENDENT_NAMES))

    def values(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in DEPENDENT_NAMES)

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(DEPENDENT_NAMES, self.values()))


def build_matrix() -> ConstraintMatrix:
    """按 EQUATION_ROWS 的顺序逐行写出系数矩阵"""
    rows: List[Tuple[int, ...]] = []
    rhs: List[int] = []
    for plus, minus, value in EQUATION_ROWS:
        row = [0] * 16
        for name in plus:
            row[PROBABILITY_NAMES.index(name)] = 1
        for name in minus:
            row[PROBABILITY_NAMES.index(name)] = -1
        rows.append(tuple(row))
        rhs.append(value)
    return ConstraintMatrix(tuple(rows), tuple(rhs))


MatrixLike = Union[ConstraintMatrix, Sequence[Sequence[int]]]


def rank(m: MatrixLike) -> int:
    """整数无分式高斯消元求精确秩"""
    source = m.coefficients if isinstance(m, ConstraintMatrix) else m
    rows: List[List[int]] = []
    for row in source:
        converted = []
        for value in row:
            if int(value) != value:
                raise PreconditionError(f"精确秩只接受整数矩阵，收到 {value!r}")
            converted.append(int(value))
        rows.append(converted)
    if not rows:
        return 0

    n_rows, n_cols = len(rows), len(rows[0])
    r = 0
    for col in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        head = rows[r][col]
        for i in range(r + 1, n_rows):
            current = rows[i][col]
            if current == 0:
                continue
            g = gcd(head, current)
            alpha, beta = current // g, head // g
            rows[i] = [beta * x - alpha * y for x, y in zip(rows[i], rows[r])]
        r += 1
        if r == n_rows:
            break
    return r


def residuals(m: ConstraintMatrix, p: Sequence[float]) -> np.ndarray:
    """每一行的 A p - rhs"""
    vector = np.asarray(p, dtype=float).reshape(16)
    return m.as_array() @ vector - np.array(m.rhs, dtype=float)


def _assemble(u: FreeSet, v: DependentSet) -> np.ndarray:
    values = {**u.as_dict(), **v.as_dict()}
    return np.array([values[name] for name in PROBABILITY_NAMES])


def solve_dependent(u: FreeSet) -> DependentSet:
    """𝒱 的闭式解，并代回方程组核对"""
    free = u.values()
    solved = {
        name: 0.5 * math.fsum([1.0, *(c * x for c, x in zip(coeffs, free))])
        for name, coeffs in CLOSED_FORMS.items()
    }
    v = DependentSet(**solved)

    scale = max(1.0, max(abs(x) for x in free))
    worst = float(np.max(np.abs(residuals(build_matrix(), _assemble(u, v)))))
    if worst > SUBSTITUTION_TOLERANCE * scale:
        raise InternalConsistencyError(f"闭式解代回方程组的残差过大: {worst:.3g}")
    return v


def solve_dependent_generic(u: FreeSet) -> DependentSet:
    """独立的交叉核对路径：对 𝒱 列构成的 12x8 子系统做最小二乘"""
    m = build_matrix()
    a = m.as_array()
    free_cols = [PROBABILITY_NAMES.index(name) for name in FREE_NAMES]
    dep_cols = [PROBABILITY_NAMES.index(name) for name in DEPENDENT_NAMES]
    rhs = np.array(m.rhs, dtype=float) - a[:, free_cols] @ np.array(u.values())
    solution, _, matrix_rank, _ = np.linalg.lstsq(a[:, dep_cols], rhs, rcond=None)
    if matrix_rank != len(DEPENDENT_NAMES):
        raise InternalConsistencyError(f"𝒱 子矩阵秩为 {matrix_rank}，无法唯一确定 𝒱")
    return DependentSet(*(float(x) for x in solution))


def behavior_from_free_set(u: FreeSet) -> Behavior:
    """由 𝒰 组装出完整的 16 个概率"""
    return Behavior.from_flat(_assemble(u, solve_dependent(u)))


def _upper(name: str, value: float, bound: float, tol: float) -> ConstraintCheck:
    return ConstraintCheck(name, max(0.0, value - bound), tol, value)


def _lower(name: str, value: float, bound: float, tol: float) -> ConstraintCheck:
    return ConstraintCheck(name, max(0.0, bound - value), tol, value)


def check_feasible(u: FreeSet, tol: Optional[float] = None, exhaustive: bool = False) -> ConstraintReport:
    """对解出的 𝒱 做 0 <= pk <= 1 检查，以及 sigma_bound、p1_p8_bound、u_sum_bound、hardy_bound

    exhaustive=True 时额外检查 𝒱 中任意非空子集之和的非负性。
    """
    tol = resolve_tolerance(tol)
    outside = [name for name, x in u.as_dict().items() if not 0.0 <= x <= 1.0]
    if outside:
        raise PreconditionError(f"自由变量必须在 [0, 1] 内: {', '.join(outside)}")

    v = solve_dependent(u)
    p = {**u.as_dict(), **v.as_dict()}
    checks: List[ConstraintCheck] = []

    for name, value in v.as_dict().items():
        checks.append(ConstraintCheck(f"bound({name})", max(0.0, -value, value - 1.0), tol, value))

    sigma_bound = math.fsum([1.0, p["p4"], p["p5"], p["p9"], -p["p1"], -p["p8"], -p["p12"], -p["p14"], -p["p15"]])
    checks.append(_lower("sigma_bound", sigma_bound, 0.0, tol))
    checks.append(_upper("p1_p8_bound", p["p1"] + p["p8"], 1.0, tol))
    checks.append(_upper("u_sum_bound", math.fsum(u.values()), 4.0, tol))
    # 2 p13 - 1 <= p4 + p5 + p9，value 记录松弛量
    slack = math.fsum([p["p4"], p["p5"], p["p9"], 1.0, -2.0 * p["p13"]])
    checks.append(_lower("hardy_bound", slack, 0.0, tol))

    if exhaustive:
        for size in range(1, len(DEPENDENT_NAMES) + 1):
            for subset in itertools.combinations(DEPENDENT_NAMES, size):
                total = math.fsum(p[name] for name in subset)
                checks.append(_lower(f"sum({'+'.join(subset)})", total, 0.0, tol))

    report = ConstraintReport(tuple(checks))
    logger.debug("check_feasible: passed=%s", report.passed)
    return report

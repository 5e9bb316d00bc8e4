"""EPRB 行为（16 个联合概率）及其可观测量

概率按 (setting_a, setting_b, outcome_a, outcome_b) 存储，结果顺序为 (+1, -1)，
展平后正好是 p1..p16 的读取顺序：p1 = p(a1=+1, b1=+1)，p16 = p(a2=-1, b2=-1)。
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import settings
from .exceptions import BehaviorFormatError, NormalizationDefectError, PreconditionError

logger = logging.getLogger(__name__)

SETTINGS: Tuple[int, int] = (1, 2)
OUTCOMES: Tuple[int, int] = (1, -1)
SIDES: Tuple[str, str] = ("A", "B")

# 块顺序 (a1,b1), (a1,b2), (a2,b1), (a2,b2)
BLOCK_ORDER: Tuple[Tuple[int, int], ...] = ((1, 1), (1, 2), (2, 1), (2, 2))
# 块内结果对 ++, +-, -+, --
BLOCK_KEYS: Tuple[str, ...] = ("pp", "pm", "mp", "mm")

PROBABILITY_NAMES: Tuple[str, ...] = tuple(f"p{i}" for i in range(1, 17))
FREE_NAMES: Tuple[str, ...] = ("p1", "p4", "p5", "p8", "p9", "p12", "p14", "p15")
DEPENDENT_NAMES: Tuple[str, ...] = ("p2", "p3", "p6", "p7", "p10", "p11", "p13", "p16")

# Δ 的关联函数形式与自由变量形式的一致性容差
DELTA_FORMS_TOLERANCE = 1e-12


def _setting_index(setting: int) -> int:
    if setting not in SETTINGS:
        raise BehaviorFormatError(f"测量设置必须是 1 或 2，收到 {setting!r}")
    return setting - 1


def _outcome_index(outcome: int) -> int:
    if outcome not in OUTCOMES:
        raise BehaviorFormatError(f"测量结果必须是 +1 或 -1，收到 {outcome!r}")
    return 0 if outcome == 1 else 1


def flat_index(j: int, k: int, m: int, n: int) -> int:
    """(j, k, m, n) 对应的 0 起始展平下标"""
    return (
        8 * _setting_index(j)
        + 4 * _setting_index(k)
        + 2 * _outcome_index(m)
        + _outcome_index(n)
    )


def name_of(j: int, k: int, m: int, n: int) -> str:
    """(j, k, m, n) 对应的简写名 pN"""
    return PROBABILITY_NAMES[flat_index(j, k, m, n)]


def index_of_name(name: str) -> int:
    try:
        return PROBABILITY_NAMES.index(name)
    except ValueError:
        raise BehaviorFormatError(f"未知的概率名: {name!r}") from None


@dataclass(frozen=True, eq=False)
class Behavior:
    """16 个联合概率 p(a_j=m, b_k=n)

    只保存原始数值，不做截断或重新归一化，违反约束的情况交给 validate() 报告。
    """

    probabilities: np.ndarray

    def __post_init__(self):
        try:
            array = np.array(self.probabilities, dtype=float)
        except (TypeError, ValueError) as e:
            raise BehaviorFormatError(f"无法解析概率表: {e}") from e
        if array.size != 16:
            raise BehaviorFormatError(f"行为必须恰好包含 16 个概率，收到 {array.size} 个")
        if not np.all(np.isfinite(array)):
            raise BehaviorFormatError("概率表中含有非有限值")
        array = array.reshape(2, 2, 2, 2)
        array.setflags(write=False)
        object.__setattr__(self, "probabilities", array)

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "Behavior":
        """按 p1..p16 顺序构造"""
        return cls(np.asarray(values, dtype=float))

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "Behavior":
        """从 {"p1": x, ..., "p16": x} 构造"""
        missing = [name for name in PROBABILITY_NAMES if name not in values]
        if missing:
            raise BehaviorFormatError(f"缺少概率: {', '.join(missing)}")
        extra = sorted(set(values) - set(PROBABILITY_NAMES))
        if extra:
            raise BehaviorFormatError(f"未知的概率名: {', '.join(extra)}")
        return cls.from_flat([values[name] for name in PROBABILITY_NAMES])

    @classmethod
    def from_blocks(cls, blocks: Sequence[Mapping[str, float]]) -> "Behavior":
        """从按 BLOCK_ORDER 排列的 4 个 {"pp","pm","mp","mm"} 块构造"""
        if len(blocks) != 4:
            raise BehaviorFormatError(f"需要 4 个测量块，收到 {len(blocks)} 个")
        values: List[float] = []
        for position, block in enumerate(blocks):
            for key in BLOCK_KEYS:
                if key not in block:
                    raise BehaviorFormatError(f"第 {position + 1} 个块缺少 {key!r}")
                values.append(block[key])
        return cls.from_flat(values)

    @property
    def flat(self) -> np.ndarray:
        return self.probabilities.reshape(16)

    def p(self, j: int, k: int, m: int, n: int) -> float:
        return float(self.probabilities[_setting_index(j), _setting_index(k), _outcome_index(m), _outcome_index(n)])

    def __getitem__(self, name: str) -> float:
        return float(self.flat[index_of_name(name)])

    def block(self, j: int, k: int) -> np.ndarray:
        """测量块 (a_j, b_k)，形状 (2, 2)，行是 a 的结果，列是 b 的结果"""
        return self.probabilities[_setting_index(j), _setting_index(k)]

    def as_dict(self) -> Dict[str, float]:
        return {name: float(value) for name, value in zip(PROBABILITY_NAMES, self.flat)}

    def blocks(self) -> List[Dict[str, float]]:
        return [
            {key: float(value) for key, value in zip(BLOCK_KEYS, self.block(j, k).reshape(4))}
            for j, k in BLOCK_ORDER
        ]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Behavior):
            return NotImplemented
        return bool(np.array_equal(self.probabilities, other.probabilities))

    def __hash__(self) -> int:
        return hash(self.probabilities.tobytes())

    def __repr__(self) -> str:
        return "Behavior(" + ", ".join(f"{v:.6g}" for v in self.flat) + ")"


@dataclass(frozen=True)
class CorrelationVector:
    """四个关联函数 c(a_j, b_k)"""

    c11: float
    c12: float
    c21: float
    c22: float

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.c11, self.c12, self.c21, self.c22)

    @property
    def delta(self) -> float:
        """CHSH 和 c11 + c12 + c21 - c22"""
        return math.fsum((self.c11, self.c12, self.c21, -self.c22))


@dataclass(frozen=True)
class ConstraintCheck:
    """单项检查；residual 是违反的幅度，residual <= tolerance 即通过"""

    name: str
    residual: float
    tolerance: float
    value: Optional[float] = None

    def __post_init__(self):
        if not self.residual >= 0.0:
            raise ValueError(f"{self.name}: residual 必须非负，收到 {self.residual}")

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "status": self.status,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "value": self.value,
        }


@dataclass(frozen=True)
class ConstraintReport:
    """一组检查结果"""

    checks: Tuple[ConstraintCheck, ...] = field(default_factory=tuple)

    def __iter__(self) -> Iterator[ConstraintCheck]:
        return iter(self.checks)

    def __len__(self) -> int:
        return len(self.checks)

    def __getitem__(self, name: str) -> ConstraintCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def __contains__(self, name: object) -> bool:
        return any(check.name == name for check in self.checks)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> Tuple[ConstraintCheck, ...]:
        return tuple(check for check in self.checks if not check.passed)

    @property
    def max_residual(self) -> float:
        return max((check.residual for check in self.checks), default=0.0)

    def select(self, prefix: str) -> "ConstraintReport":
        return ConstraintReport(tuple(c for c in self.checks if c.name.startswith(prefix)))

    def to_dict(self) -> Dict[str, object]:
        return {
            "passed": self.passed,
            "max_residual": self.max_residual,
            "checks": [check.to_dict() for check in self.checks],
        }


def resolve_tolerance(tol: Optional[float]) -> float:
    tol = settings.tolerance if tol is None else float(tol)
    if not tol > 0:
        raise PreconditionError(f"容差必须为正，收到 {tol}")
    return tol


def marginal(b: Behavior, side: str, setting: int, outcome: int, via: int) -> float:
    """单边边缘概率，由另一边设置为 via 的测量块求和得到"""
    if side == "A":
        row = b.block(setting, via)[_outcome_index(outcome), :]
    elif side == "B":
        row = b.block(via, setting)[:, _outcome_index(outcome)]
    else:
        raise BehaviorFormatError(f"side 必须是 'A' 或 'B'，收到 {side!r}")
    return math.fsum(row)


def validate(b: Behavior, tol: Optional[float] = None) -> ConstraintReport:
    """检查正性、各测量块的归一化和两侧的无信号条件"""
    tol = resolve_tolerance(tol)
    checks: List[ConstraintCheck] = []

    for name, value in zip(PROBABILITY_NAMES, b.flat):
        value = float(value)
        checks.append(ConstraintCheck(f"positivity({name})", max(0.0, -value, value - 1.0), tol, value))

    for j, k in BLOCK_ORDER:
        total = math.fsum(b.block(j, k).reshape(4))
        checks.append(ConstraintCheck(f"normalization(a{j},b{k})", abs(total - 1.0), tol, total))

    for side in SIDES:
        label = side.lower()
        for setting in SETTINGS:
            residual = max(
                abs(marginal(b, side, setting, m, via=1) - marginal(b, side, setting, m, via=2))
                for m in OUTCOMES
            )
            checks.append(ConstraintCheck(f"no_signaling({label}{setting})", residual, tol))

    report = ConstraintReport(tuple(checks))
    logger.debug("validate: passed=%s max_residual=%.3g", report.passed, report.max_residual)
    return report


def ensure_valid(b: Behavior, tol: Optional[float] = None) -> ConstraintReport:
    """validate()，不通过时抛出 PreconditionError"""
    report = validate(b, tol)
    if not report.passed:
        names = ", ".join(check.name for check in report.failures)
        raise PreconditionError(f"行为未通过校验: {names}")
    return report


def correlation(b: Behavior, j: int, k: int) -> float:
    """c(a_j, b_k) = p(+,+) + p(-,-) - p(+,-) - p(-,+)"""
    (pp, pm), (mp, mm) = b.block(j, k)
    return math.fsum((pp, mm, -pm, -mp))


def correlations(b: Behavior) -> CorrelationVector:
    return CorrelationVector(*(correlation(b, j, k) for j, k in BLOCK_ORDER))


def u_sum(b: Behavior) -> float:
    """p1+p4+p5+p8+p9+p12+p14+p15"""
    return math.fsum(b[name] for name in FREE_NAMES)


def chsh_delta(b: Behavior, tol: float = DELTA_FORMS_TOLERANCE) -> float:
    """由关联函数计算 Δ，并与自由变量形式 2(Σ𝒰 - 2) 交叉核对"""
    delta = correlations(b).delta
    delta_free = 2.0 * (u_sum(b) - 2.0)
    if abs(delta - delta_free) > tol:
        raise NormalizationDefectError(
            f"Δ 的两种形式不一致: 关联形式={delta:.17g}, 自由变量形式={delta_free:.17g}"
        )
    return delta


@dataclass(frozen=True)
class ChshVariant:
    """sign * (c11 + c12 + c21 + c22 - 2 c_minus)"""

    minus: Tuple[int, int]
    sign: int
    value: float

    @property
    def label(self) -> str:
        terms = []
        for j, k in BLOCK_ORDER:
            op = "-" if (j, k) == self.minus else "+"
            terms.append(f"{op}c{j}{k}")
        body = "".join(terms).lstrip("+")
        return body if self.sign > 0 else f"-({body})"


def chsh_variants(b: Behavior) -> Tuple[ChshVariant, ...]:
    """8 个对称化的 CHSH 表达式；局域行为全部不超过 2"""
    corr = dict(zip(BLOCK_ORDER, correlations(b).as_tuple()))
    variants = []
    for minus in BLOCK_ORDER:
        body = math.fsum(c if key != minus else -c for key, c in corr.items())
        for sign in (1, -1):
            variants.append(ChshVariant(minus, sign, sign * body))
    return tuple(variants)


def mix(first: Behavior, second: Behavior, weight: float) -> Behavior:
    """凸组合 weight * first + (1 - weight) * second"""
    if not 0.0 <= weight <= 1.0:
        raise PreconditionError(f"混合权重必须在 [0, 1] 内，收到 {weight}")
    return Behavior(weight * first.probabilities + (1.0 - weight) * second.probabilities)

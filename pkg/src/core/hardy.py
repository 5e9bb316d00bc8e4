"""Hardy 型非局域性分析

每个闭式关系 (8x) 都可以写成 2 pV - 1 = (三个正号 𝒰 成员) - (五个负号 𝒰 成员)。
正号的三个概率是 "零目标"，左边的 pV 是见证概率。零目标全为 0 时：
|Δ| = 2 + 4 pV，Σ（五个负号成员之和）= 1 - 2 pV。
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .behavior import (
    FREE_NAMES,
    Behavior,
    ConstraintCheck,
    correlations,
    ensure_valid,
    resolve_tolerance,
)
from .config import settings
from .exceptions import BehaviorFormatError
from .linsys import CLOSED_FORMS, RELATION_LABELS

logger = logging.getLogger(__name__)

TAU = (1.0 + math.sqrt(5.0)) / 2.0
TAU_INV3 = TAU ** -3
TAU_INV4 = TAU ** -4
TAU_INV5 = TAU ** -5
# 零目标为 0 时量子力学允许的最大 |Δ| 和最小 Σ
HARDY_DELTA_MAX = 2.0 + 4.0 * TAU_INV5
SIGMA_QM_MIN = 1.0 - 2.0 * TAU_INV5
# 因果性允许的见证概率上限
WITNESS_CAUSAL_MAX = 0.5


class Classification(str, enum.Enum):
    QUANTUM_CONSISTENT = "quantum-consistent"
    GENERAL_PROBABILISTIC_ONLY = "general-probabilistic-only"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class HardySet:
    """关系 (8x) 对应的四个概率：三个零目标和一个见证"""

    relation: str
    witness: str
    zero_targets: Tuple[str, str, str]
    sigma_terms: Tuple[str, ...]

    @property
    def members(self) -> Tuple[str, ...]:
        return self.zero_targets + (self.witness,)

    @property
    def label(self) -> str:
        return f"({self.relation}) {{{','.join(self.zero_targets)} | {self.witness}}}"


def hardy_sets() -> Tuple[HardySet, ...]:
    """按 (8a)..(8h) 顺序返回 8 个 Hardy 集"""
    sets = []
    for witness, coeffs in CLOSED_FORMS.items():
        positive = tuple(name for name, c in zip(FREE_NAMES, coeffs) if c > 0)
        negative = tuple(name for name, c in zip(FREE_NAMES, coeffs) if c < 0)
        sets.append(HardySet(RELATION_LABELS[witness], witness, positive, negative))
    return tuple(sets)


def hardy_set(key: str) -> HardySet:
    """按关系编号（"8g"、"g"）或见证名（"p13"）查找"""
    key = key.strip().lower().strip("()")
    for hs in hardy_sets():
        if key in (hs.relation, hs.relation[-1], hs.witness):
            return hs
    raise BehaviorFormatError(f"未知的 Hardy 集: {key!r}")


def sigma(b: Behavior, hs: HardySet) -> float:
    """五个负号成员之和；(8g) 集即 p1+p8+p12+p14+p15"""
    return math.fsum(b[name] for name in hs.sigma_terms)


def ch_inequality(b: Behavior, hs: HardySet) -> float:
    """CH 型不等式 witness <= Σ零目标 的违反量（正值表示违反）"""
    return b[hs.witness] - math.fsum(b[name] for name in hs.zero_targets)


def normalized_chsh_violation(b: Behavior) -> float:
    """(|Δ| - 2) / 2"""
    return (abs(correlations(b).delta) - 2.0) / 2.0


def classify(witness: float, tol: float) -> Classification:
    if witness <= TAU_INV5 + tol:
        return Classification.QUANTUM_CONSISTENT
    if witness <= WITNESS_CAUSAL_MAX + tol:
        return Classification.GENERAL_PROBABILISTIC_ONLY
    return Classification.INFEASIBLE


@dataclass(frozen=True)
class HardyReport:
    """单个 Hardy 集的分析结果

    "quantum-consistent" 只说明满足量子力学的必要条件 Σ >= 1 - 2τ⁻⁵，
    并不判定该行为确实属于量子集合。
    """

    set: HardySet
    zero_residual: float
    witness: float
    premises_satisfied: bool
    causality: ConstraintCheck
    delta: float
    delta_identity_residual: float
    sigma: float
    sigma_identity_residual: float
    ch_violation: float
    classification: Optional[Classification]

    @property
    def delta_abs(self) -> float:
        return abs(self.delta)

    @property
    def status(self) -> str:
        return "ok" if self.premises_satisfied else "Hardy premises not satisfied"

    def to_dict(self) -> Dict[str, object]:
        return {
            "set": self.set.relation,
            "zero_targets": list(self.set.zero_targets),
            "witness_name": self.set.witness,
            "zero_residual": self.zero_residual,
            "witness": self.witness,
            "premises_satisfied": self.premises_satisfied,
            "status": self.status,
            "causality": self.causality.to_dict(),
            "delta": self.delta,
            "delta_abs": self.delta_abs,
            "delta_identity_residual": self.delta_identity_residual,
            "sigma": self.sigma,
            "sigma_identity_residual": self.sigma_identity_residual,
            "ch_violation": self.ch_violation,
            "classification": self.classification.value if self.classification else None,
        }


def analyze(
    b: Behavior,
    hs: HardySet,
    tol: Optional[float] = None,
    validation_tol: Optional[float] = None,
) -> HardyReport:
    """检查见证概率的因果窗口、|Δ| 恒等式和 Σ 恒等式，并给出分类

    tol 是 "p = 0" 前提的容差，validation_tol 是行为本身的校验容差。
    前提不满足时不做分类。
    """
    tol = settings.zero_tolerance if tol is None else resolve_tolerance(tol)
    ensure_valid(b, validation_tol)

    zero_residual = max(0.0, max(b[name] for name in hs.zero_targets))
    witness = b[hs.witness]
    delta = correlations(b).delta
    total = sigma(b, hs)

    premises_satisfied = zero_residual <= tol
    report = HardyReport(
        set=hs,
        zero_residual=zero_residual,
        witness=witness,
        premises_satisfied=premises_satisfied,
        causality=ConstraintCheck("witness_window", max(0.0, -witness, witness - WITNESS_CAUSAL_MAX), tol, witness),
        delta=delta,
        delta_identity_residual=abs(abs(delta) - (2.0 + 4.0 * witness)),
        sigma=total,
        sigma_identity_residual=abs(total - (1.0 - 2.0 * witness)),
        ch_violation=ch_inequality(b, hs),
        classification=classify(witness, tol) if premises_satisfied else None,
    )
    if not report.premises_satisfied:
        logger.info("Hardy 集 %s 的前提不满足 (zero_residual=%.3g)", hs.relation, zero_residual)
    return report


def analyze_all(
    b: Behavior,
    tol: Optional[float] = None,
    validation_tol: Optional[float] = None,
) -> Tuple[HardyReport, ...]:
    return tuple(analyze(b, hs, tol, validation_tol) for hs in hardy_sets())

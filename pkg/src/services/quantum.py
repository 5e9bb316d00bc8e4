"""双量子比特纯态 + 投影测量的 Born 规则概率

p(a_j=m, b_k=n) = <ψ| p_m(a_j) ⊗ p_n(b_k) |ψ>，投影算符取 (I ± n·σ)/2。
张量积构造下两边的投影算符自动对易，不需要额外的对易性处理。
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from ..core.behavior import OUTCOMES, SETTINGS, Behavior
from ..core.exceptions import BehaviorFormatError, InternalConsistencyError, PreconditionError

logger = logging.getLogger(__name__)

NUMERIC_TOLERANCE = 1e-12

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (PAULI_X, PAULI_Y, PAULI_Z)

UP = np.array([1.0, 0.0], dtype=complex)
DOWN = np.array([0.0, 1.0], dtype=complex)

SETTING_NAMES: Tuple[str, ...] = ("a1", "a2", "b1", "b2")


def _outcome_index(outcome: int) -> int:
    if outcome not in OUTCOMES:
        raise BehaviorFormatError(f"测量结果必须是 +1 或 -1，收到 {outcome!r}")
    return 0 if outcome == 1 else 1


@dataclass(frozen=True, eq=False)
class Projector:
    """2x2 厄米幂等矩阵"""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex).reshape(2, 2)
        if np.max(np.abs(matrix - matrix.conj().T)) > NUMERIC_TOLERANCE:
            raise InternalConsistencyError("投影算符不是厄米的")
        if np.max(np.abs(matrix @ matrix - matrix)) > NUMERIC_TOLERANCE:
            raise InternalConsistencyError("投影算符不满足 P² = P")
        if abs(np.trace(matrix) - 1.0) > NUMERIC_TOLERANCE:
            raise InternalConsistencyError("秩一投影算符的迹必须为 1")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)


def _unit_direction(direction: Sequence[float]) -> np.ndarray:
    vector = np.asarray(direction, dtype=float).reshape(-1)
    if vector.shape != (3,):
        raise BehaviorFormatError(f"测量方向必须是三维向量，收到 {direction!r}")
    if abs(np.linalg.norm(vector) - 1.0) > NUMERIC_TOLERANCE:
        raise PreconditionError(f"测量方向必须是单位向量，模长为 {np.linalg.norm(vector):.15g}")
    return vector


def spin_operator(direction: Sequence[float]) -> np.ndarray:
    """n·σ"""
    n = _unit_direction(direction)
    return sum(c * s for c, s in zip(n, PAULI))


def projector(direction: Sequence[float], outcome: int) -> Projector:
    """(I ± n·σ)/2"""
    sign = 1.0 if _outcome_index(outcome) == 0 else -1.0
    return Projector(0.5 * (IDENTITY + sign * spin_operator(direction)))


def bloch_direction(phi: float, azimuth: float = 0.0) -> Tuple[float, float, float]:
    """极角 phi、方位角 azimuth 的单位向量；azimuth=0 即 x-z 平面"""
    return (math.sin(phi) * math.cos(azimuth), math.sin(phi) * math.sin(azimuth), math.cos(phi))


def singlet_state() -> np.ndarray:
    """(|↑↓> - |↓↑>)/√2"""
    return (np.kron(UP, DOWN) - np.kron(DOWN, UP)) / math.sqrt(2.0)


def schmidt_state(theta: float) -> np.ndarray:
    """cosθ|00> + sinθ|11>"""
    return math.cos(theta) * np.kron(UP, UP) + math.sin(theta) * np.kron(DOWN, DOWN)


def product_state(first: Sequence[complex], second: Sequence[complex]) -> np.ndarray:
    a = np.asarray(first, dtype=complex)
    b = np.asarray(second, dtype=complex)
    return np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))


@dataclass(frozen=True, eq=False)
class QuantumModel:
    """纯态 |ψ>（乘积基 |00>,|01>,|10>,|11> 上的 4 个振幅）加四个测量方向"""

    state: np.ndarray
    settings: Mapping[str, Tuple[float, float, float]]
    _projectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        state = np.array(self.state, dtype=complex).reshape(-1)
        if state.shape != (4,):
            raise BehaviorFormatError(f"态矢量必须有 4 个振幅，收到 {state.size} 个")
        norm = float(np.linalg.norm(state))
        if abs(norm - 1.0) > NUMERIC_TOLERANCE:
            raise PreconditionError(f"态矢量必须归一化，模长为 {norm:.15g}")
        state.setflags(write=False)

        missing = [name for name in SETTING_NAMES if name not in self.settings]
        if missing:
            raise BehaviorFormatError(f"缺少测量方向: {', '.join(missing)}")
        directions = {name: tuple(float(x) for x in _unit_direction(self.settings[name])) for name in SETTING_NAMES}

        # (side, setting, outcome, 2, 2)
        stack = np.empty((2, 2, 2, 2, 2), dtype=complex)
        for s, side in enumerate("ab"):
            for j in SETTINGS:
                for m in OUTCOMES:
                    stack[s, j - 1, _outcome_index(m)] = projector(directions[f"{side}{j}"], m).matrix
        for s in range(2):
            for j in range(2):
                if np.max(np.abs(stack[s, j, 0] + stack[s, j, 1] - IDENTITY)) > NUMERIC_TOLERANCE:
                    raise InternalConsistencyError("同一测量的两个投影算符之和不是单位算符")
        stack.setflags(write=False)

        object.__setattr__(self, "state", state)
        object.__setattr__(self, "settings", directions)
        object.__setattr__(self, "_projectors", stack)

    def projector_matrix(self, side: str, setting: int, outcome: int) -> np.ndarray:
        s = {"A": 0, "B": 1}.get(side)
        if s is None or setting not in SETTINGS:
            raise BehaviorFormatError(f"无效的测量: side={side!r}, setting={setting!r}")
        return self._projectors[s, setting - 1, _outcome_index(outcome)]

    def to_dict(self) -> Dict[str, object]:
        return {
            "state": {"re": [float(z.real) for z in self.state], "im": [float(z.imag) for z in self.state]},
            "settings": {name: list(self.settings[name]) for name in SETTING_NAMES},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "QuantumModel":
        try:
            state = data["state"]
            re = np.asarray(state["re"], dtype=float)
            im = np.asarray(state["im"], dtype=float)
            settings = {name: tuple(data["settings"][name]) for name in SETTING_NAMES}
        except (KeyError, TypeError, ValueError) as e:
            raise BehaviorFormatError(f"无法解析量子模型: {e}") from e
        if re.shape != (4,) or im.shape != (4,):
            raise BehaviorFormatError("state.re 与 state.im 必须各有 4 个分量")
        return cls(re + 1j * im, settings)


def planar_model(theta: float, angles: Sequence[float]) -> QuantumModel:
    """Schmidt 态 cosθ|00> + sinθ|11>，四个测量方向在 x-z 平面，角度顺序 a1 a2 b1 b2"""
    if len(angles) != 4:
        raise BehaviorFormatError(f"需要 4 个测量角度，收到 {len(angles)} 个")
    return QuantumModel(
        schmidt_state(theta),
        {name: bloch_direction(phi) for name, phi in zip(SETTING_NAMES, angles)},
    )


def random_model(rng: np.random.Generator) -> QuantumModel:
    """随机纯态和随机三维测量方向"""
    state = rng.normal(size=4) + 1j * rng.normal(size=4)
    state /= np.linalg.norm(state)
    settings = {}
    for name in SETTING_NAMES:
        vector = rng.normal(size=3)
        settings[name] = tuple(vector / np.linalg.norm(vector))
    return QuantumModel(state, settings)


def _real_part(value: complex, what: str) -> float:
    if abs(value.imag) > NUMERIC_TOLERANCE:
        raise InternalConsistencyError(f"{what} 的虚部过大: {value.imag:.3g}")
    return float(value.real)


def joint_probability(model: QuantumModel, j: int, k: int, m: int, n: int) -> float:
    """<ψ| p_m(a_j) ⊗ p_n(b_k) |ψ>"""
    operator = np.kron(model.projector_matrix("A", j, m), model.projector_matrix("B", k, n))
    return _real_part(np.vdot(model.state, operator @ model.state), f"p(a{j}={m}, b{k}={n})")


def behavior_from_model(model: QuantumModel) -> Behavior:
    """对 16 个组合一次性计算 Born 概率"""
    psi = model.state.reshape(2, 2)
    proj_a, proj_b = model._projectors[0], model._projectors[1]
    table = np.einsum("ab,jmac,knbd,cd->jkmn", psi.conj(), proj_a, proj_b, psi)
    worst = float(np.max(np.abs(table.imag)))
    if worst > NUMERIC_TOLERANCE:
        raise InternalConsistencyError(f"Born 概率的虚部过大: {worst:.3g}")
    return Behavior(table.real)


def marginal_from_model(model: QuantumModel, side: str, setting: int, outcome: int) -> float:
    """<ψ| P ⊗ I |ψ>（或 I ⊗ P），与另一边选哪个测量无关"""
    p = model.projector_matrix(side, setting, outcome)
    operator = np.kron(p, IDENTITY) if side == "A" else np.kron(IDENTITY, p)
    return _real_part(np.vdot(model.state, operator @ model.state), f"p({side.lower()}{setting}={outcome})")


def correlation_from_model(model: QuantumModel, j: int, k: int) -> float:
    """<ψ| â_j ⊗ b̂_k |ψ>"""
    operator = np.kron(spin_operator(model.settings[f"a{j}"]), spin_operator(model.settings[f"b{k}"]))
    return _real_part(np.vdot(model.state, operator @ model.state), f"c(a{j}, b{k})")


def planar_table(theta: float, angles: Sequence[float]) -> np.ndarray:
    """planar_model 的快速路径：直接用本征矢量的振幅平方，返回 (2,2,2,2) 概率表

    优化器内循环使用；最终点仍通过 behavior_from_model 重新计算。
    """
    half = 0.5 * np.asarray(angles, dtype=float)
    c, s = np.cos(half), np.sin(half)
    # (setting, outcome, component)：|+> = (c, s)，|-> = (-s, c)
    vectors = np.stack([np.stack([c, s], axis=-1), np.stack([-s, c], axis=-1)], axis=1)
    alice, bob = vectors[:2], vectors[2:]
    weights = np.array([math.cos(theta), math.sin(theta)])
    # <e_a ⊗ e_b|ψ> = Σ_i w_i e_a[i] e_b[i]
    amplitudes = np.einsum("jmi,kni,i->jkmn", alice, bob, weights)
    return amplitudes * amplitudes

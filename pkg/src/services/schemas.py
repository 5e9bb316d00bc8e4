"""JSON 数据格式：行为、自由变量集、量子模型，以及接口的请求/响应模型"""
from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..core.behavior import PROBABILITY_NAMES, Behavior
from ..core.exceptions import BehaviorFormatError
from ..core.linsys import FreeSet
from .quantum import SETTING_NAMES, QuantumModel

PayloadT = TypeVar("PayloadT", bound=BaseModel)


class BlockPayload(BaseModel):
    """一个测量块的 4 个结果对 ++ +- -+ --"""

    model_config = ConfigDict(extra="forbid")

    pp: float
    pm: float
    mp: float
    mm: float


class BehaviorPayload(BaseModel):
    """块形式 {"blocks": [...]}；输入也接受展平形式 {"p1": x, ..., "p16": x}"""

    blocks: List[BlockPayload] = Field(min_length=4, max_length=4)
    # 输出时附带的展平回显，输入时忽略
    flat: Optional[Dict[str, float]] = None

    @model_validator(mode="before")
    @classmethod
    def _accept_flat_form(cls, data: Any) -> Any:
        if isinstance(data, Mapping) and "blocks" not in data and any(name in data for name in PROBABILITY_NAMES):
            try:
                behavior = Behavior.from_mapping(data)
            except BehaviorFormatError as e:
                raise ValueError(str(e)) from e
            return {"blocks": behavior.blocks()}
        return data

    @classmethod
    def from_behavior(cls, b: Behavior) -> "BehaviorPayload":
        return cls(blocks=b.blocks(), flat=b.as_dict())

    def to_behavior(self) -> Behavior:
        return Behavior.from_blocks([block.model_dump() for block in self.blocks])


class FreeSetPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p1: float
    p4: float
    p5: float
    p8: float
    p9: float
    p12: float
    p14: float
    p15: float

    def to_free_set(self) -> FreeSet:
        return FreeSet.from_mapping(self.model_dump())


class StatePayload(BaseModel):
    re: List[float] = Field(min_length=4, max_length=4)
    im: List[float] = Field(min_length=4, max_length=4)


class QuantumModelPayload(BaseModel):
    state: StatePayload
    settings: Dict[str, List[float]]

    @model_validator(mode="after")
    def _check_settings(self) -> "QuantumModelPayload":
        missing = [name for name in SETTING_NAMES if name not in self.settings]
        if missing:
            raise ValueError(f"缺少测量方向: {', '.join(missing)}")
        bad = [name for name, vector in self.settings.items() if len(vector) != 3]
        if bad:
            raise ValueError(f"测量方向必须是三维向量: {', '.join(bad)}")
        return self

    @classmethod
    def from_model(cls, model: QuantumModel) -> "QuantumModelPayload":
        return cls(**model.to_dict())

    def to_model(self) -> QuantumModel:
        return QuantumModel.from_dict(self.model_dump())


def parse_payload(payload_type: Type[PayloadT], data: Any) -> PayloadT:
    """pydantic 校验；结构错误统一转换为 BehaviorFormatError"""
    try:
        return payload_type.model_validate(data)
    except ValidationError as e:
        raise BehaviorFormatError(f"无效的 {payload_type.__name__}: {e.errors()[0]['msg']}") from e


def read_json(path: Union[str, Path]) -> Any:
    """读取 JSON 文件；"-" 表示标准输入"""
    try:
        if str(path) == "-":
            return json.load(sys.stdin)
        with open(path, "r", encoding="utf-8") as file:
            return json.load(file)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise BehaviorFormatError(f"无法解析 JSON ({path}): {e}") from e


def load_behavior(data: Any) -> Behavior:
    return parse_payload(BehaviorPayload, data).to_behavior()


def load_free_set(data: Any) -> FreeSet:
    return parse_payload(FreeSetPayload, data).to_free_set()


def load_model(data: Any) -> QuantumModel:
    return parse_payload(QuantumModelPayload, data).to_model()


def behavior_to_json(b: Behavior) -> Dict[str, Any]:
    return BehaviorPayload.from_behavior(b).model_dump()


def dumps(data: Any) -> str:
    """浮点数用 repr 的最短往返表示，重新解析后逐位相同"""
    return json.dumps(data, ensure_ascii=False, indent=2)


# 接口请求/响应模型

class CheckRequest(BaseModel):
    behavior: BehaviorPayload
    tol: Optional[float] = Field(default=None, gt=0)


class HardyRequest(CheckRequest):
    set: Optional[str] = None


class ConstraintCheckPayload(BaseModel):
    name: str
    status: str
    residual: float
    tolerance: float
    value: Optional[float] = None


class ReportPayload(BaseModel):
    passed: bool
    max_residual: float
    checks: List[ConstraintCheckPayload]


class WitnessPayload(BaseModel):
    expression: str
    value: float


class LocalityPayload(BaseModel):
    local: bool
    distance: float
    tolerance: float
    witness: WitnessPayload
    weights: Optional[List[float]] = None


class CheckResponse(BaseModel):
    validation: ReportPayload
    locality: Optional[LocalityPayload] = None
    hardy: List[Dict[str, Any]] = Field(default_factory=list)
    message: str


class ChshResponse(BaseModel):
    delta: float
    delta_abs: float
    correlations: Dict[str, float]
    u_sum: float
    variants: Dict[str, float]


class SolveRequest(BaseModel):
    free_set: FreeSetPayload
    tol: Optional[float] = Field(default=None, gt=0)
    exhaustive: bool = False


class SolveResponse(BaseModel):
    dependent: Dict[str, float]
    feasibility: ReportPayload
    behavior: Optional[BehaviorPayload] = None


class ModelRequest(BaseModel):
    model: QuantumModelPayload
    tol: Optional[float] = Field(default=None, gt=0)


class ModelResponse(BaseModel):
    model: QuantumModelPayload
    behavior: BehaviorPayload
    validation: ReportPayload


class OptimizeRequest(BaseModel):
    """优化配置（缺省项取全局设置）加各问题的可选参数"""

    model_config = ConfigDict(extra="forbid")

    restarts: Optional[int] = Field(default=None, ge=1)
    max_iters: Optional[int] = Field(default=None, ge=1)
    tol: Optional[float] = Field(default=None, gt=0)
    seed: Optional[int] = Field(default=None, ge=0)
    state_class: str = "any"
    theta: Optional[float] = None
    maxent: bool = False
    target: float = 0.5

    def config_overrides(self) -> Dict[str, Any]:
        fields = ("restarts", "max_iters", "tol", "seed")
        return {name: getattr(self, name) for name in fields if getattr(self, name) is not None}


class RankResponse(BaseModel):
    rank: int
    rows: int
    columns: int

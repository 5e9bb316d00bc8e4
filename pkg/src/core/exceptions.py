"""异常定义"""


class EPRBError(Exception):
    """所有领域异常的基类"""


class BehaviorFormatError(EPRBError):
    """结构性错误：缺少条目、形状不对、无法解析的输入"""


class PreconditionError(EPRBError):
    """输入在结构上完整，但不满足操作的前置条件"""


class NormalizationDefectError(EPRBError):
    """Δ 的两种计算形式不一致，说明输入未归一化"""


class InternalConsistencyError(EPRBError):
    """数值漂移超出容差（虚部、厄米性等）"""


class OptimizationError(EPRBError):
    """所有重启都没有得到有限的目标值"""

"""FastAPI服务主文件"""
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import ValidationError
import uvicorn

from .. import __version__
from ..core.behavior import chsh_delta, chsh_variants, correlations, u_sum, validate
from ..core.boxes import box_by_name, is_local
from ..core.config import settings
from ..core.exceptions import BehaviorFormatError, EPRBError
from ..core.hardy import analyze, analyze_all, hardy_set
from ..core.linsys import behavior_from_free_set, build_matrix, check_feasible, rank, solve_dependent
from ..services.optimizer import (
    OptimizationConfig,
    ghz_impossibility,
    maximize_chsh,
    maximize_hardy,
    maximize_hardy_maxent,
)
from ..services.quantum import behavior_from_model
from ..services.schemas import (
    BehaviorPayload,
    CheckRequest,
    CheckResponse,
    ChshResponse,
    HardyRequest,
    ModelRequest,
    ModelResponse,
    OptimizeRequest,
    QuantumModelPayload,
    RankResponse,
    SolveRequest,
    SolveResponse,
)


# 创建FastAPI应用
app = FastAPI(
    title="EPRB 约束分析服务",
    description="EPRB 实验的约束校验、CHSH、Hardy 分析与量子模型优化",
    version=__version__,
)

# 配置CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

OPTIMIZE_KINDS = ("chsh", "hardy", "ghz")


def _http_error(e: Exception) -> HTTPException:
    """名字或结构错误 → 400，数据不满足前置条件 → 422"""
    if isinstance(e, BehaviorFormatError):
        return HTTPException(status_code=400, detail=str(e))
    if isinstance(e, (EPRBError, ValidationError)):
        return HTTPException(status_code=422, detail=str(e))
    return HTTPException(status_code=500, detail=str(e))


# API路由
@app.get("/")
async def root():
    """健康检查"""
    return {
        "message": "EPRB 约束分析服务正在运行",
        "version": __version__,
        "status": "healthy",
    }


@app.get("/rank", response_model=RankResponse)
async def get_rank():
    """约束方程组系数矩阵的精确秩"""
    m = build_matrix()
    rows, columns = m.shape
    return RankResponse(rank=rank(m), rows=rows, columns=columns)


@app.get("/box/{name}", response_model=BehaviorPayload)
async def get_box(name: str):
    """按名字生成典型行为：pr, pr2, uniform, det:++--, qextremal, qextremal2"""
    try:
        return BehaviorPayload.from_behavior(box_by_name(name))
    except EPRBError as e:
        raise _http_error(e)


@app.post("/check", response_model=CheckResponse)
async def check(request: CheckRequest):
    """
    校验行为

    校验通过时附带局域性判定和 8 个 Hardy 集的分析。
    """
    try:
        b = request.behavior.to_behavior()
        report = validate(b, request.tol)
        if not report.passed:
            return CheckResponse(validation=report.to_dict(), message=f"{len(report.failures)} 项约束未通过")
        locality = is_local(b, request.tol)
        return CheckResponse(
            validation=report.to_dict(),
            locality=locality.to_dict(),
            hardy=[r.to_dict() for r in analyze_all(b, request.tol, validation_tol=request.tol)],
            message="局域" if locality.local else "非局域",
        )
    except EPRBError as e:
        raise _http_error(e)


@app.post("/chsh", response_model=ChshResponse)
async def chsh(request: CheckRequest):
    """Δ、关联函数和 8 个对称化 CHSH 表达式"""
    try:
        b = request.behavior.to_behavior()
        delta = chsh_delta(b)
        return ChshResponse(
            delta=delta,
            delta_abs=abs(delta),
            correlations=dict(zip(("c11", "c12", "c21", "c22"), correlations(b).as_tuple())),
            u_sum=u_sum(b),
            variants={v.label: v.value for v in chsh_variants(b)},
        )
    except EPRBError as e:
        raise _http_error(e)


@app.post("/hardy")
async def hardy(request: HardyRequest):
    """Hardy 集分析；不指定 set 时返回全部 8 个"""
    try:
        b = request.behavior.to_behavior()
        if request.set:
            return [analyze(b, hardy_set(request.set), request.tol, validation_tol=request.tol).to_dict()]
        return [r.to_dict() for r in analyze_all(b, request.tol, validation_tol=request.tol)]
    except EPRBError as e:
        raise _http_error(e)


@app.post("/solve", response_model=SolveResponse)
async def solve(request: SolveRequest):
    """由自由变量集解出依赖变量集并检查可行性"""
    try:
        u = request.free_set.to_free_set()
        report = check_feasible(u, request.tol, exhaustive=request.exhaustive)
        return SolveResponse(
            dependent=solve_dependent(u).as_dict(),
            feasibility=report.to_dict(),
            behavior=BehaviorPayload.from_behavior(behavior_from_free_set(u)),
        )
    except EPRBError as e:
        raise _http_error(e)


@app.post("/model", response_model=ModelResponse)
async def model(request: ModelRequest):
    """由双量子比特纯态和四个测量方向按 Born 规则生成行为"""
    try:
        quantum_model = request.model.to_model()
        b = behavior_from_model(quantum_model)
        return ModelResponse(
            model=QuantumModelPayload.from_model(quantum_model),
            behavior=BehaviorPayload.from_behavior(b),
            validation=validate(b, request.tol).to_dict(),
        )
    except EPRBError as e:
        raise _http_error(e)


@app.post("/optimize/{kind}")
def optimize(kind: str, request: OptimizeRequest):
    """
    量子模型上的数值最大化

    Args:
        kind: chsh | hardy | ghz
        request: 优化配置与问题参数
    """
    if kind not in OPTIMIZE_KINDS:
        raise HTTPException(status_code=400, detail=f"未知的优化问题: {kind}")
    try:
        cfg = OptimizationConfig(**request.config_overrides())
        if kind == "chsh":
            result = maximize_chsh(request.state_class, cfg)
        elif kind == "hardy":
            result = maximize_hardy_maxent(cfg) if request.maxent else maximize_hardy(cfg, theta=request.theta)
        else:
            result = ghz_impossibility(cfg, target=request.target)
        return result.to_dict()
    except ValueError as e:
        # 包括未知的 state_class 和 pydantic 的 ValidationError
        raise HTTPException(status_code=422, detail=str(e))
    except EPRBError as e:
        raise _http_error(e)


# 启动函数
def start_server():
    """启动服务器"""
    uvicorn.run(
        "src.api.main:app",
        host=settings.host,
        port=settings.port,
    )


if __name__ == "__main__":
    start_server()

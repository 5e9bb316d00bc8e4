"""配置管理模块"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用配置，可通过 EPRB_ 前缀的环境变量或 .env 文件覆盖"""

    model_config = SettingsConfigDict(
        env_prefix="EPRB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # 约束校验容差
    tolerance: float = 1e-9
    # Hardy 论证中 "p = 0" 前提的容差
    zero_tolerance: float = 1e-9

    # 优化器配置
    restarts: int = 32
    max_iters: int = 2000
    opt_tol: float = 1e-12
    seed: int = 20000924
    penalty_start: float = 1e3
    penalty_cap: float = 1e9
    workers: int = 1

    # 日志
    log_level: str = "WARNING"

    # 服务配置
    host: str = "0.0.0.0"
    port: int = 8000


# 创建全局配置实例
settings = Settings()

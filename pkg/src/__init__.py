"""EPRB 实验的约束、CHSH 与 Hardy 分析工具"""

__version__ = "1.0.0"
__author__ = "EPRB Constraints Team"
__description__ = "双方双设置双结果实验的无信号约束、CHSH 不等式与 Hardy 非局域性分析"

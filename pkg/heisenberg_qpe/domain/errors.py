"""异常层次

库函数直接抛出异常，命令处理层统一捕获、记录日志并映射为退出码。
"""


class QPEError(Exception):
    """本包所有异常的基类"""


class ConfigurationError(QPEError, ValueError):
    """配置不合法（退出码 2）"""


class InvalidSpectrumError(ConfigurationError):
    """谱不满足概率和为 1、概率为正、相位互异等约束"""


class SubroutineFailure(QPEError):
    """单阶提取子程序失败，自适应主循环会把它转换为失败模式"""


class NoGapError(SubroutineFailure):
    """保守提取时所有分箱都超过阈值，找不到空隙"""


class DegenerateSignalError(SubroutineFailure):
    """信号全为零，Hankel 矩阵最大奇异值为 0"""


class NoAdmissibleMultiplierError(QPEError):
    """禁区覆盖了整个乘子范围"""


class InsufficientDataError(QPEError):
    """拟合所需的非空分箱少于两个（退出码 3）"""

"""单相位 Heisenberg 基线算法与 Fisher 信息"""

import math
from typing import Sequence

from ..domain.errors import ConfigurationError
from ..utils.logger import logger
from .circle import reduce_phase, wrap_signed


def single_schedule(delta: float, alpha: int, gamma: int) -> list[tuple[int, int]]:
    """各阶 (k = 2^d, M_d = α + γ(d_f+1−d))，d_f = ⌈log₂(1/δ)⌉"""
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"需要 0 < δ < 1: {delta}")
    d_f = math.ceil(math.log2(1.0 / delta))
    return [(2**d, alpha + gamma * (d_f + 1 - d)) for d in range(d_f + 1)]


def run_single(delta: float, alpha: int, gamma: int, oracle) -> float:
    """逐阶倍增 k，用 Arg g̃(2^d) 细化单个相位

    第 d 阶的估计取 [φ̃^{(d−1)} − π/2^d, φ̃^{(d−1)} + π/2^d) 中满足
    2^d·φ̃ ≡ θ̃^{(d)} (mod 2π) 的唯一值。

    Args:
        delta: 目标误差
        alpha: 整数常数 α
        gamma: 整数常数 γ
        oracle: 单谱线预言机（A₁ = 1）

    Returns:
        float: [0, 2π) 内的相位估计
    """
    if oracle.n_phi != 1:
        raise ConfigurationError(f"基线算法只适用于单个相位，实际 n_φ={oracle.n_phi}")
    phi = 0.0
    for d, (k, shots) in enumerate(single_schedule(delta, alpha, gamma)):
        estimate = oracle.sample(float(k), shots)
        theta = math.atan2(estimate.im, estimate.re)
        if d == 0:
            phi = theta
        else:
            phi = phi + float(wrap_signed(theta - k * phi)) / k
    logger.debug(f"基线算法完成: 代价 {oracle.ledger.total:.6g}")
    return float(reduce_phase(phi))


def fisher_info(schedule: Sequence[tuple]) -> float:
    """I(φ) = Σ k²(M_r + M_i)

    Args:
        schedule: (k, M_r, M_i) 列表；输入全为整数时结果为精确整数
    """
    if len(schedule) == 0:
        raise ValueError("schedule 不能为空")
    return sum(k * k * (m_r + m_i) for k, m_r, m_i in schedule)


def quantum_cost(schedule: Sequence[tuple]) -> float:
    """T = Σ k(M_r + M_i)"""
    if len(schedule) == 0:
        raise ValueError("schedule 不能为空")
    return sum(k * (m_r + m_i) for k, m_r, m_i in schedule)


def dense_schedule(K: int, M: int) -> list[tuple[int, int, int]]:
    """k = 1..K，每个 k 两个基各 M 次"""
    return [(k, M, M) for k in range(1, K + 1)]


def cramer_rao_bound(schedule: Sequence[tuple]) -> float:
    return 1.0 / math.sqrt(fisher_info(schedule))

"""圆周上的相位运算：环绕距离、混叠候选、窗口条件和模 L 下标运算"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi
PHASE_TOL = 1e-12


def _scalar_or_array(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


def reduce_phase(x):
    """取模到 [0, 2π)，负数输入同样映射到该区间"""
    r = np.mod(np.asarray(x, dtype=float), TWO_PI)
    # 极小的负数取模后会舍入成 2π
    r = np.where(r >= TWO_PI, 0.0, r)
    return _scalar_or_array(r)


def wrap_signed(x):
    """代表元 Δ ∈ [−π, π)"""
    r = np.mod(np.asarray(x, dtype=float) + math.pi, TWO_PI)
    r = np.where(r >= TWO_PI, 0.0, r)
    return _scalar_or_array(r - math.pi)


def wrap_dist(x):
    """环绕距离 |x|_T ∈ [0, π]

    Args:
        x: 弧度，标量或数组

    Returns:
        与输入同形状的距离，x ≡ π 时恰好返回 π
    """
    return _scalar_or_array(np.abs(wrap_signed(x)))


def phase_dist(a, b):
    return wrap_dist(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def _check_k(k: float):
    if not k > 1.0:
        raise ValueError(f"k 必须大于 1，实际为 {k}")


def alias_set(theta: float, k: float) -> np.ndarray:
    """U^k 的本征相位 θ 对应的 ⌊k⌋ 个候选 φ = (θ + 2πn)/k

    Args:
        theta: 本征相位
        k: 幂次，要求 k > 1

    Returns:
        np.ndarray: 归约到 [0, 2π) 的候选，按 n 升序排列
    """
    _check_k(k)
    n = np.arange(math.floor(k))
    return reduce_phase((theta + TWO_PI * n) / k)


def lifted_dist(phi: float, theta: float, k: float) -> float:
    """min over alias_set(θ, k) of |φ − alias|_T"""
    return float(np.min(phase_dist(phi, alias_set(theta, k))))


def in_alias_window(phi: float, k: float) -> bool:
    """π/k ≤ φ ≤ π(2⌊k⌋−1)/k 时混叠最小距离可化为 |kφ − θ|_T / k"""
    _check_k(k)
    return bool(math.pi / k <= phi <= math.pi * (2 * math.floor(k) - 1) / k)


def window_bounds(k: float) -> tuple[float, float]:
    _check_k(k)
    return math.pi / k, math.pi * (2 * math.floor(k) - 1) / k


def bin_add(l: int, m: int, L: int) -> int:
    """+_L"""
    if L < 1:
        raise ValueError("L 必须 ≥ 1")
    return (l + m) % L


def bin_sub(l: int, m: int, L: int) -> int:
    """−_L，(0 −_L 1) = L − 1"""
    if L < 1:
        raise ValueError("L 必须 ≥ 1")
    return (l - m) % L

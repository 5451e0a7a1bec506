"""分箱特征值估计（QEEP）子程序

在 L 个互相重叠的分箱上用光滑 bump 函数做近似指示函数，
由采样得到的 g(k) 估计分箱权重 b_l，再按阈值 A/3 做保守提取。
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from ..domain.errors import ConfigurationError, NoGapError
from ..domain.vo import BinEstimates, Spectrum
from ..utils.logger import logger
from .circle import TWO_PI, wrap_signed, bin_sub

DEFAULT_NODES = 8192
NOMINAL_NORMALIZATION = 2.252
_CHUNK = 256


def bin_count(epsilon: float) -> int:
    """L = ⌈2π/ε⌉，扣除浮点舍入，避免 2π/(2π/300) 得到 301"""
    if not 0.0 < epsilon < TWO_PI:
        raise ConfigurationError(f"ε 必须位于 (0, 2π): {epsilon}")
    return max(2, math.ceil(TWO_PI / epsilon - 1e-9))


def shot_plan(epsilon: float, p_d: float) -> tuple[int, int]:
    """信号长度 K = ⌈0.1·L·ln²L⌉，每个 k 的测量次数 M = ⌈|ln(1−p_d)|·ε⁻⁴⌉

    Args:
        epsilon: 误差参数 ε
        p_d: 置信度，(0, 1)

    Returns:
        tuple[int, int]: (K, M)
    """
    if not 0.0 < p_d < 1.0:
        raise ConfigurationError(f"置信度 p_d 必须位于 (0, 1): {p_d}")
    L = bin_count(epsilon)
    K = max(1, math.ceil(0.1 * L * math.log(L) ** 2))
    M = max(1, math.ceil(abs(math.log1p(-p_d)) * epsilon ** -4))
    return K, M


def _bump_profile(t: np.ndarray) -> np.ndarray:
    """exp(−1/(1−t²))，|t| ≥ 1 时为 0"""
    out = np.zeros_like(t, dtype=float)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def _midpoint_nodes(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    # 开型中点公式，端点处被积函数的本性奇点不会被取到
    t = -1.0 + (np.arange(nodes) + 0.5) * (2.0 / nodes)
    return t, _bump_profile(t) * (2.0 / nodes)


def _profile_transform(ks: np.ndarray, width: float, nodes: int) -> np.ndarray:
    """ψ̂(k) = (w/2)∫_{−1}^{1} e^{−1/(1−t²)} cos(kwt/2) dt"""
    t, weighted = _midpoint_nodes(nodes)
    out = np.empty(len(ks))
    for start in range(0, len(ks), _CHUNK):
        block = ks[start : start + _CHUNK]
        out[start : start + _CHUNK] = np.cos(np.outer(block, t) * (width / 2.0)) @ weighted
    return out * (width / 2.0)


@dataclass(frozen=True)
class BumpBasis:
    """L 个平移的 bump 函数 f^l 及其傅里叶系数表

    分箱间距取 w = 2π/L（不超过请求的 ε），使分箱恰好铺满圆周；
    f^l 支撑于 [(l−1)w, (l+1)w]。系数表只存 f̃^0(𝗄)，𝗄 = 0..K，
    它是实的偶函数，f̃^l 由平移性质得到。
    """

    epsilon: float
    width: float
    L: int
    K: int
    a: float
    fourier0: np.ndarray

    @classmethod
    def build(cls, epsilon: float, K: int, nodes: int = DEFAULT_NODES) -> "BumpBasis":
        return _build_basis(float(epsilon), int(K), int(nodes))


@lru_cache(maxsize=64)
def _build_basis(epsilon: float, K: int, nodes: int) -> BumpBasis:
    if K < 0:
        raise ValueError(f"K 不能为负: {K}")
    L = bin_count(epsilon)
    width = TWO_PI / L
    _, weighted = _midpoint_nodes(nodes)
    # 单位划分要求 a·∫_{−1}^{1} e^{−1/(1−t²)} dt = 1
    a = 1.0 / float(np.sum(weighted))
    if abs(a - NOMINAL_NORMALIZATION) > 0.01 * NOMINAL_NORMALIZATION:
        logger.warning(f"bump 归一化常数 a={a:.6f} 偏离 {NOMINAL_NORMALIZATION} 超过 1%")
    ks = np.arange(K + 1, dtype=float)
    sinc = np.sinc(ks * width / (2.0 * math.pi))
    fourier0 = (a / math.pi) * sinc * _profile_transform(ks, width, nodes)
    logger.debug(f"构建 bump 基: ε={epsilon:.6g} L={L} K={K} a={a:.6f}")
    return BumpBasis(epsilon=epsilon, width=width, L=L, K=K, a=a, fourier0=fourier0)


def bump_value(basis: BumpBasis, l: int, phi: float) -> float:
    """f^l(φ) = (2a/w)∫_{lw−w/2}^{lw+w/2} exp{−[1 − (4/w²)(φ−φ′)²]^{−1}} dφ′

    φ−φ′ 在圆周上取代表元，支撑集外返回 0。
    """
    w = basis.width
    d = float(wrap_signed(phi - (l % basis.L) * w))
    if abs(d) >= w:
        return 0.0
    half = w / 2.0

    def integrand(s: float) -> float:
        u = 1.0 - 4.0 * (d - s) ** 2 / (w * w)
        return math.exp(-1.0 / u) if u > 0.0 else 0.0

    lo, hi = max(-half, d - half), min(half, d + half)
    value, _ = integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
    return 2.0 * basis.a / w * value


def bump_fourier(basis: BumpBasis, l: int, k: int) -> complex:
    """f̃^l(k) = f̃^0(k)·e^{−iklw}"""
    if abs(k) > basis.K:
        raise ValueError(f"|k|={abs(k)} 超出系数表范围 K={basis.K}")
    return complex(basis.fourier0[abs(k)] * np.exp(-1j * k * (l % basis.L) * basis.width))


def _bin_weights(basis: BumpBasis, values: np.ndarray) -> np.ndarray:
    """b_l = Σ_{𝗄=−K}^{K} g(𝗄) f̃^l(𝗄)，利用 g(−𝗄) = g(𝗄)* 只用非负 𝗄"""
    coeff = np.asarray(values, dtype=complex) * basis.fourier0
    coeff[1:] *= 2.0
    ks = np.arange(basis.K + 1)
    phase = np.exp(-1j * np.outer(np.arange(basis.L), ks) * basis.width)
    return np.real(phase @ coeff)


def estimate_bins(oracle, k_d: float, basis: BumpBasis, shots: int) -> BinEstimates:
    """采样 g̃(k_d·𝗄)，𝗄 = 0..K，并估计全部 L 个分箱权重

    Args:
        oracle: SpectrumOracle，随机数流和账本由它持有
        k_d: 当前阶数
        basis: bump 基
        shots: 每个 𝗄 的测量次数 M

    Returns:
        BinEstimates: 可能含有由噪声造成的小负值
    """
    values = oracle.sample_series(k_d, basis.K, shots)
    b = _bin_weights(basis, values)
    return BinEstimates(
        b=b,
        epsilon=basis.width,
        provenance={"K": basis.K, "M": shots, "k_d": k_d, "requested_epsilon": basis.epsilon},
    )


def exact_bins(basis: BumpBasis, spectrum: Spectrum) -> BinEstimates:
    """按定义 b_l = Σ_j A_j f^l(φ_j) 用数值积分计算分箱权重"""
    b = np.zeros(basis.L)
    for line in spectrum.lines:
        center = int(round(line.phase / basis.width)) % basis.L
        for l in {(center + s) % basis.L for s in (-1, 0, 1)}:
            b[l] += line.prob * bump_value(basis, l, line.phase)
    return BinEstimates(b=b, epsilon=basis.width, provenance={"exact": True})


def truncation_error_bound(basis: BumpBasis, extend: int = 8, nodes: int = DEFAULT_NODES) -> float:
    """截断在 K 处带来的 b_l 误差上界 2Σ_{𝗄>K}|f̃^0(𝗄)|（只累加到 extend·K）"""
    longer = BumpBasis.build(basis.epsilon, extend * max(basis.K, 1), nodes)
    return 2.0 * float(np.sum(np.abs(longer.fourier0[basis.K + 1 :])))


def conservative_extract(bins: BinEstimates, A: float) -> list[float]:
    """保守提取：阈值 A/3 以上的分箱，去掉与前一分箱相邻的重复报告

    Args:
        bins: 分箱权重
        A: 概率下界

    Returns:
        list[float]: 升序的相位估计 l·w

    Raises:
        ConfigurationError: ε ≥ A/3
        NoGapError: 所有分箱都超过阈值
    """
    if bins.epsilon >= A / 3.0:
        raise ConfigurationError(f"保守提取要求 ε < A/3，实际 ε={bins.epsilon:.6g}, A={A:.6g}")
    L = bins.L
    selected = set(int(l) for l in np.flatnonzero(np.asarray(bins.b) >= A / 3.0))
    if len(selected) == L:
        raise NoGapError(f"{L} 个分箱全部超过阈值 A/3={A / 3.0:.6g}")
    l_min = min(set(range(L)) - selected)
    # 顺序删除：判断时看的是当前集合
    for i in range(L):
        l = (l_min + i) % L
        if l in selected and bin_sub(l, 1, L) in selected:
            selected.remove(l)
    return [l * bins.epsilon for l in sorted(selected)]


def bin_rows(bins: BinEstimates) -> list[list]:
    """CSV 行 `l,b`"""
    return [[l, repr(float(b))] for l, b in enumerate(bins.b)]

"""模拟的单控制比特相位函数预言机

持有隐藏谱，给出精确 g(k)，按测量分布模拟有限 shot 噪声，支持谱平移并记录量子代价。
"""

import numpy as np

from ..domain.vo import Spectrum, SpectralLine, GEstimate, CostLedger, LedgerEntry
from ..utils.logger import logger
from .circle import reduce_phase

DEFAULT_BINOMIAL_EXACT_MAX = 1_000_000


def exact_g(spec: Spectrum, k):
    """g(k) = Σ_j A_j e^{ikφ_j}

    Args:
        spec: 谱
        k: 标量或数组

    Returns:
        complex 或复数数组
    """
    ks = np.asarray(k, dtype=float)
    values = np.exp(1j * np.multiply.outer(ks, spec.phases)) @ spec.probs
    return complex(values) if ks.ndim == 0 else values


def outcome_probabilities(spec: Spectrum, k) -> tuple[np.ndarray, np.ndarray]:
    """控制比特在 X、Y 基下测得 +1 的概率 (P^r, P^i)"""
    ks = np.asarray(k, dtype=float)
    angles = np.multiply.outer(ks, spec.phases)
    p_r = 0.5 * ((1.0 + np.cos(angles)) @ spec.probs)
    p_i = 0.5 * ((1.0 - np.sin(angles)) @ spec.probs)
    return np.clip(p_r, 0.0, 1.0), np.clip(p_i, 0.0, 1.0)


def draw_counts(
    rng: np.random.Generator,
    shots: int,
    p,
    exact_max: int = DEFAULT_BINOMIAL_EXACT_MAX,
) -> np.ndarray:
    """以计数形式聚合 shots 次伯努利试验

    shots ≤ exact_max 时精确抽样，否则使用带连续性修正的正态近似。
    """
    p = np.asarray(p, dtype=float)
    if shots <= exact_max:
        return rng.binomial(shots, p)
    mean = shots * p
    std = np.sqrt(shots * p * (1.0 - p))
    z = rng.standard_normal(p.shape)
    return np.clip(np.floor(mean + std * z + 0.5), 0, shots).astype(np.int64)


def charge(ledger: CostLedger, k: float, shots: int) -> CostLedger:
    """记一次查询的代价 2·M·k，k 为绝对演化长度 k_d·𝗄"""
    if k < 0:
        raise ValueError(f"k 不能为负: {k}")
    if shots < 1:
        raise ValueError(f"shots 必须 ≥ 1: {shots}")
    cost = 2.0 * shots * k
    ledger.entries.append(LedgerEntry(k=float(k), shots=int(shots), cost=cost))
    ledger.total += cost
    return ledger


def sample_g(
    spec: Spectrum,
    k: float,
    shots: int,
    rng: np.random.Generator,
    ledger: CostLedger | None = None,
    binomial_exact_max: int = DEFAULT_BINOMIAL_EXACT_MAX,
) -> GEstimate:
    """用 shots 次 X 基和 shots 次 Y 基测量估计 g(k)"""
    if shots < 1:
        raise ValueError(f"shots 必须 ≥ 1: {shots}")
    if k < 0:
        raise ValueError(f"k 不能为负: {k}")
    p_r, p_i = outcome_probabilities(spec, k)
    c_r = int(draw_counts(rng, shots, p_r, binomial_exact_max))
    c_i = int(draw_counts(rng, shots, p_i, binomial_exact_max))
    if ledger is not None:
        charge(ledger, k, shots)
    return GEstimate(
        k=float(k),
        re=2.0 * c_r / shots - 1.0,
        im=1.0 - 2.0 * c_i / shots,
        shots=shots,
    )


def shift_spectrum(spec: Spectrum, chi: float) -> Spectrum:
    """φ → (φ − χ) mod 2π，相当于 g(k) 乘以 e^{−ikχ}"""
    return Spectrum(
        lines=tuple(
            SpectralLine(phase=reduce_phase(line.phase - chi), prob=line.prob)
            for line in spec.lines
        )
    )


class SpectrumOracle:
    """
    一次运行所用的预言机句柄：谱 + 随机数流 + 代价账本。

    使用工厂方法创建实例：
        oracle = SpectrumOracle.create(spectrum, seed)
    """

    def __init__(
        self,
        spectrum: Spectrum,
        rng: np.random.Generator,
        ledger: CostLedger | None = None,
        noiseless: bool = False,
        binomial_exact_max: int = DEFAULT_BINOMIAL_EXACT_MAX,
    ):
        self.spectrum = spectrum
        self.rng = rng
        self.ledger = ledger if ledger is not None else CostLedger()
        self.noiseless = noiseless
        self.binomial_exact_max = binomial_exact_max

    @classmethod
    def create(
        cls,
        spectrum: Spectrum,
        seed: int | np.random.SeedSequence | None = None,
        noiseless: bool = False,
        binomial_exact_max: int = DEFAULT_BINOMIAL_EXACT_MAX,
    ) -> "SpectrumOracle":
        """
        工厂方法：创建拥有独立随机数流和空账本的预言机

        Args:
            spectrum: 隐藏谱
            seed: 64 位种子或 SeedSequence
            noiseless: 为 True 时返回精确 g(k)，但照常记代价
            binomial_exact_max: 精确二项抽样的 shot 上限

        Returns:
            初始化完成的 SpectrumOracle 实例
        """
        return cls(
            spectrum,
            np.random.default_rng(seed),
            CostLedger(),
            noiseless=noiseless,
            binomial_exact_max=binomial_exact_max,
        )

    @property
    def n_phi(self) -> int:
        return self.spectrum.n_phi

    def exact(self, k):
        return exact_g(self.spectrum, k)

    def sample(self, k: float, shots: int) -> GEstimate:
        if self.noiseless:
            g = self.exact(k)
            charge(self.ledger, k, shots)
            return GEstimate(k=float(k), re=g.real, im=g.imag, shots=shots)
        return sample_g(
            self.spectrum, k, shots, self.rng, self.ledger, self.binomial_exact_max
        )

    def sample_series(self, k_d: float, K: int, shots: int) -> np.ndarray:
        """采样 g̃(k_d·𝗄)，𝗄 = 0..K，每点 shots 次，逐点记代价

        g(0) = 1 是先验已知的，不做测量。

        Returns:
            np.ndarray: 长度 K+1 的复数数组
        """
        if K < 0:
            raise ValueError(f"K 不能为负: {K}")
        if shots < 1:
            raise ValueError(f"shots 必须 ≥ 1: {shots}")
        ks = k_d * np.arange(1, K + 1)
        if self.noiseless:
            values = exact_g(self.spectrum, ks)
        else:
            p_r, p_i = outcome_probabilities(self.spectrum, ks)
            c_r = draw_counts(self.rng, shots, p_r, self.binomial_exact_max)
            c_i = draw_counts(self.rng, shots, p_i, self.binomial_exact_max)
            values = (2.0 * c_r / shots - 1.0) + 1j * (1.0 - 2.0 * c_i / shots)
        for k in [0.0, *ks]:
            charge(self.ledger, float(k), shots)
        logger.debug(
            f"采样 k_d={k_d:.6g} K={K} M={shots}，累计代价 {self.ledger.total:.6g}"
        )
        return np.concatenate([[1.0 + 0.0j], np.asarray(values, dtype=complex)])

    def shifted(self, chi: float) -> "SpectrumOracle":
        """模拟 U·e^{−iχ}：共享账本和随机数流"""
        return SpectrumOracle(
            shift_spectrum(self.spectrum, chi),
            self.rng,
            self.ledger,
            noiseless=self.noiseless,
            binomial_exact_max=self.binomial_exact_max,
        )

    def series_estimates(self, k_d: float, values: np.ndarray, shots: int) -> list[GEstimate]:
        """把 sample_series 的结果包装为 GEstimate 列表"""
        return [
            GEstimate(k=float(k_d * i), re=float(v.real), im=float(v.imag), shots=shots)
            for i, v in enumerate(values)
        ]


"""单阶提取子程序的统一封装

自适应主循环只依赖 `extractor(oracle, k_d, eps, K, M) -> list[float]` 这一调用约定，
返回工作谱在 U^{k_d} 下的本征相位估计 θ̃（升序）。
"""

from abc import ABC, abstractmethod

import numpy as np

from ..domain.status import Subroutine
from ..domain.vo import AdaptiveConfig
from .circle import reduce_phase
from .pencil import pencil_extract
from .qeep import BumpBasis, conservative_extract, estimate_bins


class PhaseExtractor(ABC):
    def __init__(self, A: float):
        self.A = A

    @abstractmethod
    def __call__(self, oracle, k_d: float, eps: float, K: int, M: int) -> list[float]:
        ...


class QeepExtractor(PhaseExtractor):
    """bump 分箱 + 保守提取"""

    def __call__(self, oracle, k_d, eps, K, M):
        basis = BumpBasis.build(eps, K)
        bins = estimate_bins(oracle, k_d, basis, M)
        return conservative_extract(bins, self.A)


class PencilExtractor(PhaseExtractor):
    def __init__(self, A: float, rtol: float = 1e-8):
        super().__init__(A)
        self.rtol = rtol

    def __call__(self, oracle, k_d, eps, K, M):
        rtol = None if oracle.noiseless else self.rtol
        return pencil_extract(oracle, k_d, K, M, self.A, rtol)


class ExactExtractor(PhaseExtractor):
    """理想子程序：直接读取工作谱，返回 {k_dφ_j mod 2π}，不采样也不记代价

    只用于预演（标定 ε）和运行不变量的检验。
    """

    def __init__(self, A: float = 0.0):
        super().__init__(A)

    def __call__(self, oracle, k_d, eps, K, M):
        spectrum = oracle.spectrum
        kept = spectrum.phases[spectrum.probs > self.A]
        return sorted(float(t) for t in np.atleast_1d(reduce_phase(k_d * kept)))


def make_extractor(config: AdaptiveConfig) -> PhaseExtractor:
    if config.subroutine is Subroutine.QEEP:
        return QeepExtractor(config.A)
    return PencilExtractor(config.A, config.pencil_rtol)

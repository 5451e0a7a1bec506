"""矩阵束（matrix pencil）稠密信号子程序

Hankel 矩阵对 → 最小二乘平移矩阵 → 特征值相位 → 振幅拟合 → 按概率下界筛选。
"""

from typing import Sequence

import numpy as np
from scipy import linalg

from ..domain.errors import DegenerateSignalError
from ..domain.vo import GEstimate, HankelPair, PencilEstimate
from ..utils.logger import logger
from .circle import reduce_phase

NOISELESS_RTOL = 1e-12
NOISY_RTOL = 1e-8
# |λ|^K 超过该数量级的列在振幅拟合中会溢出
_MAX_LOG10_POWER = 300.0


def series_values(samples: Sequence[GEstimate], k_unit: float | None = None) -> np.ndarray:
    """把 𝗄 = 0..K 的采样整理为复数数组，缺点或乱序时报错"""
    if len(samples) == 0:
        raise ValueError("采样为空")
    if k_unit is None:
        k_unit = samples[1].k if len(samples) > 1 else 1.0
    if k_unit <= 0:
        raise ValueError(f"k 的步长必须为正: {k_unit}")
    for i, s in enumerate(samples):
        if abs(s.k - i * k_unit) > 1e-9 * max(1.0, abs(s.k)):
            raise ValueError(f"第 {i} 个采样的 k={s.k} 不等于 {i}·{k_unit}，缺少采样点")
    return np.array([s.value for s in samples], dtype=complex)


def hankel_from_values(values: np.ndarray) -> HankelPair:
    """G^{(a)}_{i,j} = g(i+j+a−K)，负的 𝗄 由 g(−𝗄) = g(𝗄)* 补全"""
    values = np.asarray(values, dtype=complex)
    K = len(values) - 1
    if K < 1:
        raise ValueError("至少需要 𝗄 = 0, 1 两个采样点")
    L_K = (K + 1) // 2
    cols = 2 * K - L_K + 1
    # full[m] = g(m − K)，m = 0..2K
    full = np.concatenate([np.conj(values[:0:-1]), values])
    G0 = linalg.hankel(full[0:L_K], full[L_K - 1 : L_K - 1 + cols])
    G1 = linalg.hankel(full[1 : L_K + 1], full[L_K : L_K + cols])
    return HankelPair(G0=G0, G1=G1, K=K)


def build_hankel(samples: Sequence[GEstimate], k_unit: float | None = None) -> HankelPair:
    return hankel_from_values(series_values(samples, k_unit))


def _truncated_pinv(G0: np.ndarray, rtol: float) -> tuple[np.ndarray, int]:
    U, s, Vh = linalg.svd(G0, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise DegenerateSignalError("Hankel 矩阵全为零")
    rank = int(np.sum(s > rtol * s[0]))
    pinv = (Vh[:rank].conj().T / s[:rank]) @ U[:, :rank].conj().T
    return pinv, rank


def solve_shift_ranked(pair: HankelPair, rtol: float = NOISELESS_RTOL) -> tuple[np.ndarray, int]:
    """同 solve_shift，另返回截断后的数值秩 r

    T 的秩不超过 r，其余 L_K − r 个特征值是截断产生的零点，不对应谱线。
    """
    pinv, rank = _truncated_pinv(pair.G0, rtol)
    return pair.G1 @ pinv, rank


def solve_shift(pair: HankelPair, rtol: float = NOISELESS_RTOL) -> np.ndarray:
    """T = G1·pinv(G0)，伪逆截断 σ < rtol·σ_max

    Raises:
        DegenerateSignalError: σ_max = 0
    """
    return solve_shift_ranked(pair, rtol)[0]


def fit_amplitudes(
    lambdas: np.ndarray, values: np.ndarray, rtol: float | None = None
) -> tuple[np.ndarray, float]:
    """最小二乘 ‖BA − g‖，B_{𝗄,j} = λ_j^𝗄

    Args:
        rtol: 给出时 B 的奇异值低于 rtol·σ_max 的方向不参与求解

    Returns:
        tuple: (振幅实部, 虚部最大模)
    """
    lambdas = np.asarray(lambdas, dtype=complex)
    if lambdas.size == 0:
        raise ValueError("特征值列表为空")
    values = np.asarray(values, dtype=complex)
    K = len(values) - 1
    with np.errstate(divide="ignore"):
        log_power = K * np.log10(np.abs(lambdas))
    usable = log_power < _MAX_LOG10_POWER
    if not np.all(usable):
        logger.warning(f"{int(np.sum(~usable))} 个特征值模过大，振幅记为 0")
    amps = np.zeros(lambdas.size, dtype=complex)
    if np.any(usable):
        B = np.vander(lambdas[usable], K + 1, increasing=True).T
        solution, *_ = linalg.lstsq(B, values, cond=rtol)
        amps[usable] = solution
    residue = float(np.max(np.abs(amps.imag)))
    return amps.real, residue


def pencil_estimate(values: np.ndarray, rtol: float = NOISELESS_RTOL) -> PencilEstimate:
    """对 𝗄 = 0..K 的 g 样本执行矩阵束全部步骤，结果按相位升序

    只有模最大的 r 个特征值（r 为 G0 的截断秩）参与振幅拟合，
    其余特征值保留在输出中，振幅记为 0。
    """
    pair = hankel_from_values(values)
    shift, rank = solve_shift_ranked(pair, rtol)
    lambdas = linalg.eigvals(shift)
    thetas = np.asarray(reduce_phase(np.angle(lambdas)), dtype=float).reshape(-1)
    order = np.argsort(thetas, kind="stable")
    lambdas, thetas = lambdas[order], thetas[order]

    fitted = np.zeros(lambdas.size, dtype=bool)
    fitted[np.argsort(-np.abs(lambdas), kind="stable")[:rank]] = True
    amps = np.zeros(lambdas.size, dtype=float)
    fitted_amps, residue = fit_amplitudes(lambdas[fitted], values, rtol)
    amps[fitted] = fitted_amps
    if rank < lambdas.size:
        logger.debug(f"截断秩 {rank}，{lambdas.size - rank} 个零特征值不参与振幅拟合")
    if residue > 1e-6:
        logger.debug(f"振幅拟合虚部残差 {residue:.3g}")
    return PencilEstimate(lambdas=lambdas, thetas=thetas, amps=amps, residue=residue, rank=rank)


def select_phases(estimate: PencilEstimate, A: float) -> list[float]:
    """保留 Ã_j ≥ A 的相位"""
    return [float(t) for t, a in zip(estimate.thetas, estimate.amps) if a >= A]


def pencil_extract(
    oracle,
    k_d: float,
    K: int,
    shots: int,
    A: float,
    rtol: float | None = None,
) -> list[float]:
    """采样 g̃(k_d·𝗄)，𝗄 = 0..K，返回 Ã_j ≥ A 的相位（升序）

    Args:
        oracle: SpectrumOracle
        k_d: 当前阶数
        K: 信号长度
        shots: 每个 𝗄 的测量次数 M
        A: 概率下界
        rtol: 伪逆截断阈值；为空时无噪声取 1e-12，否则 1e-8

    Raises:
        DegenerateSignalError: 信号退化
    """
    if K < 1 or shots < 1:
        raise ValueError(f"需要 K ≥ 1 且 M ≥ 1，实际 K={K}, M={shots}")
    if rtol is None:
        rtol = NOISELESS_RTOL if oracle.noiseless else NOISY_RTOL
    values = oracle.sample_series(k_d, K, shots)
    estimate = pencil_estimate(values, rtol)
    phases = select_phases(estimate, A)
    logger.debug(
        f"矩阵束 k_d={k_d:.6g}: {len(estimate.thetas)} 个特征值，保留 {len(phases)} 个"
    )
    return phases


def sample_rows(values: np.ndarray) -> list[list]:
    """CSV 行 `k,re,im`，k 为整数下标 𝗄"""
    return [[i, repr(float(v.real)), repr(float(v.imag))] for i, v in enumerate(values)]


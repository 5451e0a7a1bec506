"""实验框架：场景扫描、ε 标定、RMS 分箱与幂律拟合、Fisher 极限表"""

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Sequence

import numpy as np

from ..domain.errors import ConfigurationError, InsufficientDataError
from ..domain.status import FailureMode, Subroutine
from ..domain.vo import (
    AdaptiveConfig,
    FitBin,
    FitResult,
    LimitRow,
    PhaseErrorRow,
    ScenarioConfig,
    Spectrum,
    TrialRecord,
)
from ..utils.logger import logger
from .adaptive import eps_crit, run_adaptive
from .circle import TWO_PI, phase_dist
from .extraction import ExactExtractor
from .oracle import SpectrumOracle
from .single import cramer_rao_bound, dense_schedule, fisher_info, quantum_cost

# 相位集合与运行噪声使用不同的派生键，同一 seed 在各 δ_c 下共享相位
_PHASE_STREAM = 0
_RUN_STREAM = 1
# 宽松模式下 κ_max = π/(2ε) − 1 ≥ 2 要求 ε ≤ π/6
_RELAXED_EPS_MAX = math.pi / 6.0


def derive_seed(master_seed: int, *key: int) -> np.random.SeedSequence:
    """计数式派生：新增试验不会扰动已有试验的随机数流"""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))


def draw_phases(n_phi: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, TWO_PI, size=n_phi)


def closest_errors(true_phases: Sequence[float], estimates: Sequence[float]) -> list[PhaseErrorRow]:
    """每个真实相位独立取最近的估计，一个估计可以对应多个相位"""
    ests = np.asarray(estimates, dtype=float)
    rows = []
    for j, phi in enumerate(true_phases):
        dist = np.atleast_1d(phase_dist(phi, ests))
        best = int(np.argmin(dist))
        rows.append(
            PhaseErrorRow(
                phase_index=j,
                true_phase=float(phi),
                estimate=float(ests[best]),
                error=float(dist[best]),
            )
        )
    return rows


def adaptive_config(
    scenario: ScenarioConfig, delta_c: float, eps0: float, eps: float
) -> AdaptiveConfig:
    return AdaptiveConfig(
        delta_c=delta_c,
        A=scenario.amplitude_bound,
        n_phi=scenario.n_phi,
        eps0=eps0,
        eps=eps,
        alpha=scenario.alpha,
        gamma=scenario.gamma,
        subroutine=scenario.subroutine,
        strict_bounds=scenario.strict_eps,
        kappa_search=scenario.kappa_search,
        cap_final_multiplier=scenario.cap_final_multiplier,
        pencil_rtol=scenario.pencil_rtol,
    )


def _dry_run_ok(
    scenario: ScenarioConfig, eps: float, delta_c: float, trials: int, master_seed: int
) -> bool:
    cfg = adaptive_config(scenario, delta_c, eps, eps)
    cfg.cap_final_multiplier = False
    cfg.subroutine = Subroutine.PENCIL
    extractor = ExactExtractor()
    for t in range(trials):
        rng = np.random.default_rng(derive_seed(master_seed, _PHASE_STREAM, t))
        spectrum = Spectrum.equal_weight(draw_phases(scenario.n_phi, rng))
        oracle = SpectrumOracle.create(spectrum, derive_seed(master_seed, _RUN_STREAM, 0, t), noiseless=True)
        try:
            result = run_adaptive(cfg, oracle, extractor=extractor)
        except ConfigurationError as e:
            logger.debug(f"ε={eps:.6g} 不可用: {e}")
            return False
        if result.failure.failed:
            return False
        if any(r.kappa <= 2.0 for r in result.trace if r.d >= 2):
            return False
    return True


def calibrate_epsilon(
    scenario: ScenarioConfig,
    grid: Iterable[float] | None = None,
    trials: int | None = None,
) -> float:
    """宽松模式的 ε：网格上最大的、使所有预演都能找到 κ > 2 且不触发失败模式的值

    预演使用理想提取子程序，只检验乘子选择和匹配逻辑。QEEP 另需 ε < A/3。

    Raises:
        ConfigurationError: 网格上没有合格的 ε
    """
    grid = sorted(grid if grid is not None else np.geomspace(_RELAXED_EPS_MAX, 1e-3, 40), reverse=True)
    trials = trials if trials is not None else scenario.calibration_trials
    delta_c = min(scenario.delta_c)
    limit = _RELAXED_EPS_MAX
    if scenario.subroutine is Subroutine.QEEP:
        limit = min(limit, scenario.amplitude_bound / 3.0 * (1.0 - 1e-6))
    for eps in grid:
        eps = min(float(eps), limit)
        if _dry_run_ok(scenario, eps, delta_c, trials, scenario.master_seed):
            logger.info(f"标定得到 ε = {eps:.6g}（n_φ={scenario.n_phi}, {trials} 次预演）")
            return eps
    raise ConfigurationError("标定失败：网格上没有满足条件的 ε")


def resolve_epsilons(scenario: ScenarioConfig) -> tuple[float, float]:
    """确定 (ε₀, ε)：严格模式默认取上界，宽松模式未给出时自动标定"""
    if scenario.strict_eps:
        eps = scenario.eps if scenario.eps is not None else eps_crit(scenario.n_phi)
        eps0 = scenario.eps0 if scenario.eps0 is not None else eps_crit(scenario.n_phi, first_round=True)
        return eps0, eps
    eps = scenario.eps if scenario.eps is not None else calibrate_epsilon(scenario)
    eps0 = scenario.eps0 if scenario.eps0 is not None else eps
    return eps0, eps


def run_trial(
    scenario: ScenarioConfig, eps0: float, eps: float, delta_index: int, seed_index: int
) -> TrialRecord:
    """单次试验：抽取等权相位，运行自适应估计，记录最近估计误差"""
    delta_c = scenario.delta_c[delta_index]
    rng = np.random.default_rng(derive_seed(scenario.master_seed, _PHASE_STREAM, seed_index))
    phases = draw_phases(scenario.n_phi, rng)
    oracle = SpectrumOracle.create(
        Spectrum.equal_weight(phases),
        derive_seed(scenario.master_seed, _RUN_STREAM, delta_index, seed_index),
        binomial_exact_max=scenario.binomial_exact_max,
    )
    result = run_adaptive(adaptive_config(scenario, delta_c, eps0, eps), oracle)
    return TrialRecord(
        seed=seed_index,
        delta_c=delta_c,
        subroutine=scenario.subroutine,
        n_phi=scenario.n_phi,
        total_cost=result.total_cost,
        rows=closest_errors(phases, result.final_estimates),
        failure=result.failure,
    )


def _trial_task(args) -> TrialRecord:
    return run_trial(*args)


def run_sweep(scenario: ScenarioConfig) -> list[TrialRecord]:
    """对每个 (δ_c, seed) 运行一次试验，结果按 (δ_c, seed) 排序

    Args:
        scenario: 场景配置

    Returns:
        list[TrialRecord]: 失败模式作为数据记录，不抛出
    """
    eps0, eps = resolve_epsilons(scenario)
    tasks = [
        (scenario, eps0, eps, i, s)
        for i in range(len(scenario.delta_c))
        for s in range(scenario.seeds)
    ]
    logger.info(
        f"开始扫描: {len(scenario.delta_c)} 个 δ_c × {scenario.seeds} 个种子，"
        f"ε₀={eps0:.6g}, ε={eps:.6g}, 子程序 {scenario.subroutine.cn}"
    )
    if scenario.workers > 1:
        with ProcessPoolExecutor(max_workers=scenario.workers) as pool:
            records = list(pool.map(_trial_task, tasks, chunksize=4))
    else:
        records = [_trial_task(t) for t in tasks]
    failures = sum(r.failure is not FailureMode.NONE for r in records)
    logger.info(f"扫描完成: {len(records)} 次试验，其中 {failures} 次以失败模式结束")
    return sorted(records, key=lambda r: (r.delta_c, r.seed))


def bin_and_fit(records: Sequence[TrialRecord], n_bins: int) -> FitResult:
    """在代价 T 上做对数分箱，拟合 log rms_error = exponent·log rms_T + log prefactor

    Raises:
        InsufficientDataError: 非空分箱少于两个
    """
    if n_bins < 1:
        raise ConfigurationError(f"n_bins 必须 ≥ 1: {n_bins}")
    costs = np.array([r.total_cost for r in records for _ in r.rows], dtype=float)
    errors = np.array([row.error for r in records for row in r.rows], dtype=float)
    keep = costs > 0
    costs, errors = costs[keep], errors[keep]
    if costs.size == 0 or costs.min() == costs.max():
        raise InsufficientDataError("代价取值不足以分出两个分箱")
    edges = np.geomspace(costs.min(), costs.max(), n_bins + 1)
    index = np.clip(np.searchsorted(edges, costs, side="right") - 1, 0, n_bins - 1)

    bins = []
    for b in range(n_bins):
        mask = index == b
        count = int(np.sum(mask))
        if count == 0:
            continue
        rms_error = float(np.sqrt(np.mean(errors[mask] ** 2)))
        if rms_error == 0.0:
            logger.warning(f"第 {b} 个分箱误差全为 0，无法取对数，已跳过")
            continue
        bins.append(
            FitBin(
                rms_T=float(np.sqrt(np.mean(costs[mask] ** 2))),
                rms_error=rms_error,
                stderr=float(np.std(errors[mask]) / math.sqrt(count)),
                count=count,
            )
        )
    if len(bins) < 2:
        raise InsufficientDataError(f"只有 {len(bins)} 个非空分箱，无法拟合")
    x = np.log([b.rms_T for b in bins])
    y = np.log([b.rms_error for b in bins])
    slope, intercept = np.polyfit(x, y, 1)
    return FitResult(exponent=float(slope), prefactor=float(math.exp(intercept)), bins=bins)


def limits_report(K: int, M: int) -> list[LimitRow]:
    """三种测量策略下的 Fisher 信息、代价与 Cramér-Rao 界"""
    if K < 1 or M < 1:
        raise ConfigurationError(f"需要 K ≥ 1 且 M ≥ 1，实际 K={K}, M={M}")
    rows = []

    sampling = [(1, M, M)]
    T = quantum_cost(sampling)
    rows.append(LimitRow("sampling", fisher_info(sampling), T, cramer_rao_bound(sampling), T**-0.5))

    dense = dense_schedule(K, M)
    T = quantum_cost(dense)
    rows.append(
        LimitRow(
            "dense",
            fisher_info(dense),
            T,
            cramer_rao_bound(dense),
            math.sqrt(1.5) * M**0.25 * T**-0.75,
        )
    )

    single = [(K, M, M)]
    T = quantum_cost(single)
    # I = K²·M_K = T²/M_K，M_K 为该 k 上的总测量次数
    rows.append(
        LimitRow("heisenberg", fisher_info(single), T, cramer_rao_bound(single), math.sqrt(2 * M) / T)
    )
    return rows

"""自适应多阶相位估计

首轮在 k = 1 上用误差参数 ε₀ 提取全部相位，平移谱使估计远离分支切口，
之后每一阶选择乘子 κ 使 k_{d+1} = κ·k_d，在 U^{k_{d+1}} 上提取本征相位，
再与上一阶估计匹配以消除混叠。各一致性检查失败时按失败模式返回较低阶的估计。
"""

import math
from itertools import combinations

import numpy as np

from ..domain.errors import (
    ConfigurationError,
    NoAdmissibleMultiplierError,
    SubroutineFailure,
)
from ..domain.status import FailureMode, KappaSearch, Subroutine
from ..domain.vo import AdaptiveConfig, RoundRecord, RunResult
from ..utils.logger import logger
from .circle import (
    PHASE_TOL,
    TWO_PI,
    in_alias_window,
    lifted_dist,
    reduce_phase,
    wrap_dist,
)
from .extraction import PhaseExtractor, make_extractor
from .qeep import shot_plan

# 候选乘子放在禁区左端点以下的相对距离
_BOUNDARY_MARGIN = 1e-9
# 最后一阶落在目标值以下的相对余量
_CAP_MARGIN = 1e-12


def eps_crit(n_phi: int, first_round: bool = False) -> float:
    """严格模式下 ε 的上界：首轮 2π/(300n⁴)，之后 2π/(300n²)"""
    power = 4 if first_round else 2
    return TWO_PI / (300.0 * n_phi**power)


def kappa_max(config: AdaptiveConfig) -> float:
    if config.strict_bounds:
        return 3.0
    return math.pi / (2.0 * config.eps) - 1.0


def check_config(config: AdaptiveConfig) -> None:
    """校验配置，不合法时抛出 ConfigurationError"""
    if config.n_phi < 1:
        raise ConfigurationError(f"n_phi 必须 ≥ 1: {config.n_phi}")
    if not config.alpha > 0:
        raise ConfigurationError(f"需要 α > 0: {config.alpha}")
    if not config.gamma > 2:
        raise ConfigurationError(f"需要 γ > 2: {config.gamma}")
    if not 0.0 < config.A < 1.0:
        raise ConfigurationError(f"需要 0 < A < 1: {config.A}")
    if not config.delta_c > 0:
        raise ConfigurationError(f"需要 δ_c > 0: {config.delta_c}")
    if not (0.0 < config.eps0 and 0.0 < config.eps):
        raise ConfigurationError("ε₀ 和 ε 必须为正")
    if config.strict_bounds:
        if config.eps0 > eps_crit(config.n_phi, first_round=True) * (1 + 1e-12):
            raise ConfigurationError(
                f"严格模式要求 ε₀ ≤ {eps_crit(config.n_phi, True):.6g}，实际 {config.eps0:.6g}"
            )
        if config.eps > eps_crit(config.n_phi) * (1 + 1e-12):
            raise ConfigurationError(
                f"严格模式要求 ε ≤ {eps_crit(config.n_phi):.6g}，实际 {config.eps:.6g}"
            )
    elif kappa_max(config) < 2.0:
        raise ConfigurationError(f"ε={config.eps:.6g} 过大，κ_max = π/(2ε) − 1 < 2")
    if config.subroutine is Subroutine.QEEP:
        if max(config.eps0, config.eps) >= config.A / 3.0:
            raise ConfigurationError("QEEP 子程序要求 ε₀、ε < A/3")
    if config.eps0 > config.eps:
        logger.warning(f"ε₀={config.eps0:.6g} 大于 ε={config.eps:.6g}，误差保证不再成立")


def confidence(k_d: float, delta_c: float, alpha: float, gamma: float) -> float:
    """p_d = 1 − e^{−α}(k_d·δ_c/π)^γ

    Raises:
        ConfigurationError: p_d ≤ 0
    """
    p_d = 1.0 - math.exp(-alpha) * (k_d * delta_c / math.pi) ** gamma
    if p_d <= 0.0:
        raise ConfigurationError(
            f"置信度 p_d={p_d:.6g} ≤ 0（k_d={k_d:.6g}, δ_c={delta_c:.6g}），请检查配置"
        )
    return p_d


def choose_shift(estimates, eps0: float) -> tuple[float, float, float]:
    """取最大圆周空隙的中点 ζ，半宽 d_ζ，平移量 χ = ζ + d_ζ/2 − 8ε₀

    等长空隙取起点相位最小者。
    """
    points = np.sort(np.atleast_1d(reduce_phase(np.asarray(estimates, dtype=float))))
    if points.size == 0:
        raise ValueError("估计为空，无法选择平移")
    gaps = np.append(np.diff(points), points[0] + TWO_PI - points[-1])
    best = int(np.flatnonzero(gaps >= gaps.max() - PHASE_TOL)[0])
    d_zeta = gaps[best] / 2.0
    zeta = reduce_phase(points[best] + d_zeta)
    chi = reduce_phase(zeta + d_zeta / 2.0 - 8.0 * eps0)
    return float(zeta), float(d_zeta), float(chi)


def merge_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def forbidden_regions(
    delta: float,
    k_d: float,
    eps: float,
    kappa_range: tuple[float, float],
    first_round: bool = False,
) -> list[tuple[float, float]]:
    """一对估计在乘子范围内的禁区

    分离条件 |k_dκΔ|_T > 4ε(1+κ) 在区间
    R^{(n)} = [(2πn − 4ε)/(k_dΔ + 4ε), (2πn + 4ε)/(k_dΔ − 4ε)] 上失效；
    接近条件只在 κ 低于下界时成立，因此禁区还要与 [下界, κ_max] 相交。

    Args:
        delta: 两个估计之差的绝对值 |Δ|（不取环绕）
        k_d: 当前阶数
        eps: 误差参数
        kappa_range: (lo, hi)
        first_round: 首轮的接近条件为 |Δ|_T < π/κ

    Returns:
        已合并、升序的闭区间列表
    """
    lo, hi = kappa_range
    dist = float(wrap_dist(delta))
    if first_round:
        bound = math.pi / dist if dist > 0.0 else math.inf
    else:
        bound = (math.pi - 2.0 * eps) / (k_d * dist + 2.0 * eps)
    lo = max(lo, bound)
    if lo > hi:
        return []
    kd = k_d * abs(delta)
    if kd <= 4.0 * eps:
        # n = 0 的区间向右无界
        return [(lo, hi)]
    n_lo = max(0, math.floor((lo * (kd - 4.0 * eps) - 4.0 * eps) / TWO_PI))
    n_hi = math.ceil((hi * (kd + 4.0 * eps) + 4.0 * eps) / TWO_PI)
    n = np.arange(n_lo, n_hi + 1, dtype=float)
    left = (TWO_PI * n - 4.0 * eps) / (kd + 4.0 * eps)
    right = (TWO_PI * n + 4.0 * eps) / (kd - 4.0 * eps)
    keep = (right >= lo) & (left <= hi)
    return merge_intervals(
        [(max(a, lo), min(b, hi)) for a, b in zip(left[keep], right[keep])]
    )


def is_admissible(estimates, k_d: float, eps: float, kappa: float, first_round: bool = False) -> bool:
    """直接检验每一对估计满足分离条件或接近条件"""
    for a, b in combinations(estimates, 2):
        delta = a - b
        dist = float(wrap_dist(delta))
        if dist <= PHASE_TOL:
            continue
        separated = float(wrap_dist(k_d * kappa * delta)) > 4.0 * eps * (1.0 + kappa)
        if first_round:
            close = dist < math.pi / kappa
        else:
            close = dist < (math.pi - 2.0 * eps * (1.0 + kappa)) / (k_d * kappa)
        if not (separated or close):
            return False
    return True


def multiplier_range(
    n_phi: int, first_round: bool, kappa_top: float, cap: float | None = None
) -> tuple[float, float]:
    lo, hi = (3.0 * n_phi, 3.0 * n_phi + 1.0) if first_round else (2.0, kappa_top)
    if cap is not None and cap >= lo:
        hi = min(hi, cap)
    return lo, hi


def choose_multiplier(
    estimates,
    k_d: float,
    eps: float,
    first_round: bool,
    n_phi: int,
    kappa_top: float = 3.0,
    cap: float | None = None,
    search: KappaSearch = KappaSearch.LARGEST,
    rng: np.random.Generator | None = None,
    draws: int = 1000,
) -> float:
    """选择下一阶乘子 κ

    Args:
        estimates: 当前（已平移的）估计
        k_d: 当前阶数
        eps: 本轮误差参数（首轮为 ε₀）
        first_round: 首轮范围为 [3n_φ, 3n_φ+1]
        n_phi: 相位个数
        kappa_top: 后续轮次的 κ_max
        cap: 范围上端额外的截断（落在目标值附近）
        search: LARGEST 从上往下沿禁区边界搜索；RANDOM 均匀抽样
        rng: RANDOM 策略所用随机数流
        draws: RANDOM 策略的最大抽样次数

    Raises:
        NoAdmissibleMultiplierError: 禁区覆盖了整个范围
    """
    lo, hi = multiplier_range(n_phi, first_round, kappa_top, cap)
    ests = [float(e) for e in estimates]
    if search is KappaSearch.RANDOM:
        rng = rng if rng is not None else np.random.default_rng()
        for _ in range(draws):
            kappa = float(rng.uniform(lo, hi))
            if is_admissible(ests, k_d, eps, kappa, first_round):
                return kappa
        raise NoAdmissibleMultiplierError(f"{draws} 次随机抽样均未找到可用乘子")

    regions = []
    for a, b in combinations(ests, 2):
        if float(wrap_dist(a - b)) > PHASE_TOL:
            regions.extend(forbidden_regions(abs(a - b), k_d, eps, (lo, hi), first_round))
    merged = merge_intervals(regions)
    candidates = [hi] + [a - _BOUNDARY_MARGIN * max(1.0, a) for a, _ in reversed(merged)]
    for kappa in candidates:
        if lo <= kappa <= hi and is_admissible(ests, k_d, eps, kappa, first_round):
            return kappa
    raise NoAdmissibleMultiplierError(f"禁区覆盖了 [{lo:.6g}, {hi:.6g}]")


def match_orders(
    prev,
    thetas,
    k_d: float,
    kappa_d: float,
    eps: float,
    n_phi: int | None = None,
) -> tuple[list[float], FailureMode]:
    """把 U^{k_d} 的本征相位与上一阶估计匹配，得到新一阶估计

    Returns:
        tuple: (新估计（升序），失败模式)；失败时新估计为空列表
    """
    prev = [float(p) for p in prev]
    thetas = [float(t) for t in thetas]
    if not thetas or (n_phi is not None and len(thetas) > n_phi):
        return [], FailureMode.STEP_C_MISMATCH
    tol = 2.0 * eps * (1.0 + kappa_d) / k_d
    lifted = np.array([[lifted_dist(p, t, k_d) for t in thetas] for p in prev])
    if np.any(lifted.min(axis=1) > tol) or np.any(lifted.min(axis=0) > tol):
        return [], FailureMode.STEP_C_MISMATCH

    n = np.arange(math.ceil(k_d))
    prev_arr = np.asarray(prev)
    new = []
    for theta in thetas:
        candidates = (theta + TWO_PI * n) / k_d
        dist = np.asarray(wrap_dist(prev_arr[:, None] - candidates[None, :]))
        # argmin 取第一个最小值：j 最小，其次 n 最小
        _, best_n = np.unravel_index(int(np.argmin(dist)), dist.shape)
        new.append(float(reduce_phase(candidates[best_n])))

    if not all(in_alias_window(phi, k_d) for phi in new):
        return [], FailureMode.STEP_E_WINDOW
    return sorted(new), FailureMode.NONE


class AdaptiveEstimator:
    """一次自适应估计运行的状态机，阶与阶之间顺序执行"""

    def __init__(
        self,
        config: AdaptiveConfig,
        oracle,
        rng: np.random.Generator | None = None,
        extractor: PhaseExtractor | None = None,
    ):
        check_config(config)
        self.config = config
        self.oracle = oracle
        self.rng = rng if rng is not None else oracle.rng
        self.extractor = extractor if extractor is not None else make_extractor(config)
        self.trace: list[RoundRecord] = []

    def _plan(self, k_d: float, eps: float) -> tuple[float, int, int]:
        cfg = self.config
        p_d = confidence(k_d, cfg.delta_c, cfg.alpha, cfg.gamma)
        K, M = shot_plan(eps, p_d)
        return p_d, K, M

    def _extract(self, oracle, k_d: float, eps: float, K: int, M: int) -> list[float]:
        try:
            return list(self.extractor(oracle, k_d, eps, K, M))
        except SubroutineFailure as e:
            logger.warning(f"k_d={k_d:.6g} 的提取子程序失败: {e}")
            return []

    def _multiplier(self, estimates, k_d, eps, first_round, top, cap) -> float:
        """先在截断后的范围内搜索，截断范围全被禁止时退回完整范围"""
        cfg = self.config

        def search(upper_cap):
            return choose_multiplier(
                estimates,
                k_d,
                eps,
                first_round,
                cfg.n_phi,
                kappa_top=top,
                cap=upper_cap,
                search=cfg.kappa_search,
                rng=self.rng,
                draws=cfg.random_kappa_draws,
            )

        if cap is None:
            return search(None)
        try:
            return search(cap)
        except NoAdmissibleMultiplierError:
            logger.debug(f"截断范围 κ ≤ {cap:.6g} 内无可用乘子，改用完整范围")
            return search(None)

    def _record(self, d, k_d, kappa, p_d, M, K, estimates):
        self.trace.append(
            RoundRecord(
                d=d,
                k_d=k_d,
                kappa=kappa,
                p_d=p_d,
                M_d=M,
                K=K,
                estimates=[float(e) for e in estimates],
                cost_so_far=self.oracle.ledger.total,
            )
        )

    def _result(self, estimates, failure, d_f, chi) -> RunResult:
        final = sorted(float(reduce_phase(e + chi)) for e in estimates)
        if failure.failed:
            logger.info(f"运行在第 {d_f + 1} 阶以失败模式结束: {failure.cn}")
        return RunResult(
            final_estimates=final,
            total_cost=self.oracle.ledger.total,
            failure=failure,
            d_f=d_f,
            shift=chi,
            trace=list(self.trace),
        )

    def run(self) -> RunResult:
        cfg = self.config
        # 第 0 阶
        p0, K0, M0 = self._plan(1.0, cfg.eps0)
        thetas0 = self._extract(self.oracle, 1.0, cfg.eps0, K0, M0)
        if not thetas0 or len(thetas0) > cfg.n_phi:
            logger.info(f"首轮得到 {len(thetas0)} 个估计，返回 {{0}}")
            return RunResult(
                final_estimates=[0.0],
                total_cost=self.oracle.ledger.total,
                failure=FailureMode.STEP1_EMPTY_OR_OVERFULL,
                d_f=0,
                shift=0.0,
                trace=list(self.trace),
            )
        _, _, chi = choose_shift(thetas0, cfg.eps0)
        working = self.oracle.shifted(chi)
        estimates = sorted(float(reduce_phase(t - chi)) for t in thetas0)
        # 轨迹中各阶估计统一记录在平移后的坐标系
        self._record(0, 1.0, 1.0, p0, M0, K0, estimates)
        target = 2.0 * cfg.eps / cfg.delta_c
        top = kappa_max(cfg)

        k_d, d = 1.0, 0
        while True:
            first_round = d == 0
            eps_round = cfg.eps0 if first_round else cfg.eps
            lo, _ = multiplier_range(cfg.n_phi, first_round, top)
            if not k_d * lo < target:
                break
            cap = target / k_d * (1.0 - _CAP_MARGIN) if cfg.cap_final_multiplier else None
            try:
                kappa = self._multiplier(estimates, k_d, eps_round, first_round, top, cap)
            except NoAdmissibleMultiplierError as e:
                logger.warning(f"第 {d + 1} 阶找不到可用乘子: {e}")
                return self._result(estimates, FailureMode.NO_MULTIPLIER, d, chi)
            if not k_d * kappa < target:
                break

            k_next = k_d * kappa
            p_d, K, M = self._plan(k_next, cfg.eps)
            thetas = self._extract(working, k_next, cfg.eps, K, M)
            new, failure = match_orders(estimates, thetas, k_next, kappa, cfg.eps, cfg.n_phi)
            if failure.failed:
                return self._result(estimates, failure, d, chi)
            d, k_d, estimates = d + 1, k_next, new
            self._record(d, k_d, kappa, p_d, M, K, estimates)
            logger.debug(f"完成第 {d} 阶: k_d={k_d:.6g} κ={kappa:.6g} K={K} M={M}")

        logger.debug(f"运行完成: d_f={d}, T={self.oracle.ledger.total:.6g}")
        return self._result(estimates, FailureMode.NONE, d, chi)


def run_adaptive(
    config: AdaptiveConfig,
    oracle,
    rng: np.random.Generator | None = None,
    extractor: PhaseExtractor | None = None,
) -> RunResult:
    """执行一次完整的自适应多阶估计"""
    return AdaptiveEstimator(config, oracle, rng, extractor).run()


def heisenberg_mse_bound(delta_c: float, alpha: float, gamma: float) -> float:
    """RMS 误差上界 δ_c·sqrt(π^{1−γ}e^{−α}δ_c^{γ−2} + 0.15·2^{4−γ}/(2^γ−4) + 4)"""
    if not gamma > 2:
        raise ConfigurationError(f"需要 γ > 2: {gamma}")
    mse = (
        math.pi ** (1.0 - gamma) * math.exp(-alpha) * delta_c ** (gamma - 2.0)
        + 0.15 * 2.0 ** (4.0 - gamma) / (2.0**gamma - 4.0)
        + 4.0
    )
    return delta_c * math.sqrt(mse)


def failure_error_bound(eps: float, k_prev: float) -> float:
    """单次失败后继续运行的最终误差上界 14ε/k_{d₀−1}"""
    return 14.0 * eps / k_prev

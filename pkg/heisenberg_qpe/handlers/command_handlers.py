"""命令处理器类"""

from argparse import Namespace

import numpy as np

from ..domain.errors import ConfigurationError
from ..domain.status import Subroutine
from ..domain.vo import LimitRow, RunResult, Spectrum, TrialRecord
from ..engine.adaptive import heisenberg_mse_bound, run_adaptive
from ..engine.analysis import (
    adaptive_config,
    bin_and_fit,
    closest_errors,
    derive_seed,
    draw_phases,
    limits_report,
    resolve_epsilons,
    run_sweep,
)
from ..engine.oracle import SpectrumOracle
from ..engine.pencil import NOISELESS_RTOL, pencil_estimate, sample_rows, select_phases
from ..engine.qeep import BumpBasis, bin_rows, conservative_extract, estimate_bins, shot_plan
from ..utils.config_manager import ConfigManager
from ..utils.file_utils import FileUtils
from ..utils.logger import logger


class CommandHandlers:
    """命令处理器类，每个子命令一个方法，返回进程退出码"""

    def __init__(self, file_utils: FileUtils):
        self.file_utils = file_utils

    @staticmethod
    def _config(args: Namespace) -> ConfigManager:
        """配置文件 + 通用命令行参数"""
        manager = ConfigManager(getattr(args, "config", None))
        delta_c = getattr(args, "delta_c", None)
        manager.override(
            master_seed=getattr(args, "seed", None),
            subroutine=getattr(args, "subroutine", None),
            strict_eps=True if getattr(args, "strict_eps", False) else None,
            n_phi=getattr(args, "nphi", None),
            delta_c=[float(x) for x in delta_c.split(",")] if delta_c else None,
            seeds=getattr(args, "seeds", None),
            workers=getattr(args, "workers", None),
            eps=getattr(args, "eps", None),
        )
        return manager

    def _oracle(self, args: Namespace, spectrum: Spectrum, seed: int) -> SpectrumOracle:
        return SpectrumOracle.create(
            spectrum, derive_seed(seed, 1, 0, 0), noiseless=getattr(args, "noiseless", False)
        )

    def run(self, args: Namespace) -> int:
        """单次试验，输出 JSON 运行轨迹"""
        manager = self._config(args)
        if args.spectrum:
            spectrum = self.file_utils.load_spectrum(args.spectrum)
            manager.override(n_phi=spectrum.n_phi)
        scenario = manager.scenario()
        if not args.spectrum:
            rng = np.random.default_rng(derive_seed(scenario.master_seed, 0, 0))
            spectrum = Spectrum.equal_weight(draw_phases(scenario.n_phi, rng))
        delta_c = scenario.delta_c[0]
        eps0, eps = resolve_epsilons(scenario)
        config = adaptive_config(scenario, delta_c, eps0, eps)
        oracle = self._oracle(args, spectrum, scenario.master_seed)
        result = run_adaptive(config, oracle)
        logger.info(f"\n{RunResult.format_result(result)}")

        summary = result.to_dict()
        summary["errors"] = [
            row.__dict__ for row in closest_errors(spectrum.phases, result.final_estimates)
        ]
        summary["rmse_bound"] = heisenberg_mse_bound(delta_c, config.alpha, config.gamma)
        self.file_utils.write_json(
            args.out,
            {
                "config": config.to_dict(),
                "spectrum": spectrum.to_dict(),
                "rounds": [r.to_dict() for r in result.trace],
                "result": summary,
            },
        )
        return 0

    def sweep(self, args: Namespace) -> int:
        scenario = self._config(args).scenario()
        records = run_sweep(scenario)
        rows = [row for record in records for row in record.to_rows()]
        self.file_utils.write_csv(args.out, TrialRecord.CSV_HEADER, rows)
        return 0

    def fit(self, args: Namespace) -> int:
        manager = self._config(args)
        n_bins = args.bins if args.bins is not None else int(manager.get("n_bins", 8))
        rows = self.file_utils.read_csv(args.csv, TrialRecord.CSV_HEADER)
        try:
            records = TrialRecord.from_rows(rows)
        except (ValueError, KeyError) as e:
            raise ConfigurationError(f"{args.csv} 中的记录无法解析: {e}") from e
        result = bin_and_fit(records, n_bins)
        logger.info(f"拟合指数 {result.exponent:.4f}，前因子 {result.prefactor:.4g}")
        self.file_utils.write_json(args.out, result.to_dict())
        return 0

    def limits(self, args: Namespace) -> int:
        rows = limits_report(args.K, args.M)
        if args.json:
            self.file_utils.write_json(args.out, {"rows": [r.to_dict() for r in rows]})
        else:
            print(LimitRow.format_limits(rows))
        return 0

    def pencil(self, args: Namespace) -> int:
        """在谱文件上单独运行矩阵束子程序"""
        spectrum = self.file_utils.load_spectrum(args.spectrum)
        A = args.A if args.A is not None else 1.0 / (2 * spectrum.n_phi)
        oracle = self._oracle(args, spectrum, args.seed or 0)
        values = oracle.sample_series(args.k_d, args.K, args.M)
        if args.dump:
            self.file_utils.write_csv(args.dump, ["k", "re", "im"], sample_rows(values))
        rtol = NOISELESS_RTOL if oracle.noiseless else args.rtol
        estimate = pencil_estimate(values, rtol)
        self.file_utils.write_json(
            args.out,
            {
                "estimate": estimate.to_dict(),
                "selected": select_phases(estimate, A),
                "A": A,
                "total_cost": oracle.ledger.total,
            },
        )
        return 0

    def qeep_bins(self, args: Namespace) -> int:
        """在谱文件上单独估计 QEEP 分箱权重，输出 `l,b`"""
        spectrum = self.file_utils.load_spectrum(args.spectrum)
        K, M = shot_plan(args.eps, args.p)
        K = args.K if args.K is not None else K
        M = args.M if args.M is not None else M
        basis = BumpBasis.build(args.eps, K)
        oracle = self._oracle(args, spectrum, args.seed or 0)
        bins = estimate_bins(oracle, args.k_d, basis, M)
        self.file_utils.write_csv(args.out, ["l", "b"], bin_rows(bins))

        A = args.A if args.A is not None else 1.0 / (2 * spectrum.n_phi)
        if bins.epsilon < A / 3.0:
            phases = conservative_extract(bins, A)
            logger.info(f"保守提取得到 {len(phases)} 个相位: {phases}")
        else:
            logger.warning(f"ε={bins.epsilon:.4g} ≥ A/3，跳过保守提取")
        logger.info(f"子程序 {Subroutine.QEEP.cn}: L={bins.L} K={K} M={M} T={oracle.ledger.total:.6g}")
        return 0

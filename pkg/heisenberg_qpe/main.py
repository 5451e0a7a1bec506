"""命令行入口：run / sweep / fit / limits / pencil / qeep-bins"""

import argparse
import sys
from pathlib import Path

import yaml

from .domain.errors import ConfigurationError, InsufficientDataError, QPEError
from .handlers.command_handlers import CommandHandlers
from .utils.file_utils import FileUtils
from .utils.logger import logger, set_level

METADATA_FILE = Path(__file__).resolve().parents[1] / "metadata.yaml"


def read_version() -> str:
    """从 metadata.yaml 读取版本号"""
    try:
        with open(METADATA_FILE, "r", encoding="utf-8") as f:
            meta = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError):
        return "unknown"
    return f"{meta.get('name', 'heisenberg_qpe')} {meta.get('version', 'unknown')}"


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON 场景配置文件")
    parser.add_argument("--seed", type=int, help="主随机种子")
    parser.add_argument("--out", help="输出文件，缺省写到 stdout")
    parser.add_argument("--subroutine", choices=["qeep", "pencil"])
    parser.add_argument("--strict-eps", action="store_true", help="使用理论上的 ε 上界")
    parser.add_argument("--nphi", type=int, help="相位个数")
    parser.add_argument("--delta-c", help="逗号分隔的目标精度列表")
    parser.add_argument("--log-level", default=None, help="DEBUG / INFO / WARNING / ERROR")


def _subroutine_args(parser: argparse.ArgumentParser):
    parser.add_argument("--spectrum", required=True, help="谱文件 (JSON)")
    parser.add_argument("--k-d", type=float, default=1.0, help="阶数 k_d")
    parser.add_argument("--A", type=float, default=None, help="振幅下界，缺省 1/(2n_φ)")
    parser.add_argument("--noiseless", action="store_true", help="使用精确相位函数")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heisenberg_qpe", description="多相位 Heisenberg 极限估计模拟器")
    parser.add_argument("--version", action="version", version=read_version())
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="单次试验，输出 JSON 轨迹")
    _common(run)
    run.add_argument("--spectrum", help="谱文件，缺省随机抽取等权相位")
    run.add_argument("--eps", type=float, help="ε，缺省自动标定")
    run.add_argument("--noiseless", action="store_true")

    sweep = sub.add_parser("sweep", help="扫描 (δ_c, seed)，输出 CSV")
    _common(sweep)
    sweep.add_argument("--seeds", type=int, help="每个 δ_c 的种子数")
    sweep.add_argument("--workers", type=int, help="并行进程数")
    sweep.add_argument("--eps", type=float, help="ε，缺省自动标定")

    fit = sub.add_parser("fit", help="读取扫描 CSV，拟合误差-代价幂律")
    _common(fit)
    fit.add_argument("csv", help="sweep 输出的 CSV")
    fit.add_argument("--bins", type=int, default=None, help="对数分箱数")

    limits = sub.add_parser("limits", help="Fisher 信息与 Cramér-Rao 极限表")
    _common(limits)
    limits.add_argument("--K", type=int, default=100)
    limits.add_argument("--M", type=int, default=100)
    limits.add_argument("--json", action="store_true", help="输出 JSON 而非文本表")

    pencil = sub.add_parser("pencil", help="在谱文件上运行矩阵束子程序")
    _common(pencil)
    _subroutine_args(pencil)
    pencil.add_argument("--K", type=int, required=True, help="信号长度")
    pencil.add_argument("--M", type=int, default=1000, help="每个 k 的测量次数")
    pencil.add_argument("--rtol", type=float, default=1e-8, help="伪逆截断阈值")
    pencil.add_argument("--dump", help="把 k,re,im 样本写入该 CSV")

    qeep = sub.add_parser("qeep-bins", help="在谱文件上估计 QEEP 分箱权重")
    _common(qeep)
    _subroutine_args(qeep)
    qeep.add_argument("--eps", type=float, required=True, help="分辨率 ε")
    qeep.add_argument("--p", type=float, default=0.9, help="成功概率 p_d")
    qeep.add_argument("--K", type=int, default=None, help="覆盖 K")
    qeep.add_argument("--M", type=int, default=None, help="覆盖 M")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    handlers = CommandHandlers(FileUtils())
    dispatch = {
        "run": handlers.run,
        "sweep": handlers.sweep,
        "fit": handlers.fit,
        "limits": handlers.limits,
        "pencil": handlers.pencil,
        "qeep-bins": handlers.qeep_bins,
    }
    try:
        return dispatch[args.command](args)
    except ConfigurationError as e:
        logger.error(f"配置错误: {e}")
        return 2
    except ValueError as e:
        # 参数取值非法（如 K = 0、数字解析失败），与配置错误同样处理
        logger.error(f"配置错误: {e}")
        return 2
    except InsufficientDataError as e:
        logger.error(f"数据不足: {e}")
        return 3
    except QPEError as e:
        logger.error(f"运行失败: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())

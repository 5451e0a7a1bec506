from dataclasses import dataclass, asdict, field
from typing import Optional, List, Dict, Any
import math

import numpy as np

from ..domain.errors import InvalidSpectrumError
from ..domain.status import Subroutine, FailureMode, KappaSearch

TWO_PI = 2.0 * math.pi
PROB_SUM_TOL = 1e-12


def _reduce_phase(value: float) -> float:
    """把相位归约到 [0, 2π)"""
    r = math.fmod(float(value), TWO_PI)
    if r < 0.0:
        r += TWO_PI
    # fmod 对 -1e-17 一类输入会得到 2π 本身
    return 0.0 if r >= TWO_PI else r


def _complex_pairs(values) -> List[List[float]]:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


@dataclass(frozen=True)
class SpectralLine:
    phase: float
    prob: float

    @staticmethod
    def from_dict(data: dict) -> "SpectralLine":
        return SpectralLine(phase=float(data["phase"]), prob=float(data["prob"]))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Spectrum:
    """隐藏的真实谱：若干 (相位, 概率) 对，构造后不可变"""

    lines: tuple = ()

    def __post_init__(self):
        lines = tuple(
            SpectralLine(phase=_reduce_phase(line.phase), prob=float(line.prob))
            for line in self.lines
        )
        if not lines:
            raise InvalidSpectrumError("谱不能为空")
        probs = np.array([line.prob for line in lines])
        if np.any(probs <= 0.0) or np.any(probs > 1.0):
            raise InvalidSpectrumError(f"概率必须位于 (0, 1]: {probs.tolist()}")
        if abs(float(np.sum(probs)) - 1.0) > PROB_SUM_TOL:
            raise InvalidSpectrumError(f"概率之和必须为 1，实际为 {float(np.sum(probs))!r}")
        phases = np.sort([line.phase for line in lines])
        if len(phases) > 1:
            gaps = np.append(np.diff(phases), phases[0] + TWO_PI - phases[-1])
            if np.any(gaps <= PROB_SUM_TOL):
                raise InvalidSpectrumError("谱中存在重复相位")
        object.__setattr__(self, "lines", lines)

    @property
    def phases(self) -> np.ndarray:
        return np.array([line.phase for line in self.lines])

    @property
    def probs(self) -> np.ndarray:
        return np.array([line.prob for line in self.lines])

    @property
    def n_phi(self) -> int:
        return len(self.lines)

    @staticmethod
    def equal_weight(phases) -> "Spectrum":
        """等权谱，A_j = 1/n"""
        n = len(phases)
        return Spectrum(lines=tuple(SpectralLine(p, 1.0 / n) for p in phases))

    @staticmethod
    def from_pairs(pairs) -> "Spectrum":
        return Spectrum(lines=tuple(SpectralLine(p, a) for p, a in pairs))

    @staticmethod
    def from_dict(data: dict) -> "Spectrum":
        return Spectrum(lines=tuple(SpectralLine.from_dict(d) for d in data["lines"]))

    def to_dict(self) -> dict:
        return {"lines": [line.to_dict() for line in self.lines]}

    @staticmethod
    def format_spectrum(spectrum: "Spectrum") -> str:
        """将谱格式化为可读文本"""
        return "\n".join(
            f"φ = {line.phase:.12f}  A = {line.prob:.6f}" for line in spectrum.lines
        )


@dataclass
class GEstimate:
    """g(k) 的一次采样估计"""

    k: float
    re: float
    im: float
    shots: int

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LedgerEntry:
    k: float
    shots: int
    cost: float


@dataclass
class CostLedger:
    """量子代价账本，total 只增不减"""

    total: float = 0.0
    entries: List[LedgerEntry] = field(default_factory=list)

    @property
    def queries(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        return {"total": self.total, "queries": self.queries}


@dataclass
class BinEstimates:
    b: np.ndarray
    epsilon: float
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def L(self) -> int:
        return len(self.b)

    def to_dict(self) -> dict:
        return {
            "b": [float(x) for x in self.b],
            "epsilon": self.epsilon,
            "provenance": dict(self.provenance),
        }


@dataclass
class HankelPair:
    G0: np.ndarray
    G1: np.ndarray
    K: int

    @property
    def L_K(self) -> int:
        return (self.K + 1) // 2


@dataclass
class PencilEstimate:
    lambdas: np.ndarray
    thetas: np.ndarray
    amps: np.ndarray
    # 振幅最小二乘解虚部的最大模，作为诊断量
    residue: float = 0.0
    # G0 截断秩，只有模最大的 rank 个特征值参与振幅拟合
    rank: int = 0

    def to_dict(self) -> dict:
        return {
            "lambdas": _complex_pairs(self.lambdas),
            "thetas": [float(t) for t in self.thetas],
            "amps": [float(a) for a in self.amps],
            "residue": self.residue,
            "rank": self.rank,
        }


@dataclass
class AdaptiveConfig:
    delta_c: float
    A: float
    n_phi: int
    eps0: float
    eps: float
    alpha: float = 2.0
    gamma: float = 2.1
    subroutine: Subroutine = field(default_factory=lambda: Subroutine.PENCIL)
    strict_bounds: bool = False
    kappa_search: KappaSearch = field(default_factory=lambda: KappaSearch.LARGEST)
    random_kappa_draws: int = 1000
    cap_final_multiplier: bool = True
    pencil_rtol: float = 1e-8

    @staticmethod
    def from_dict(data: dict) -> "AdaptiveConfig":
        return AdaptiveConfig(
            delta_c=float(data["delta_c"]),
            A=float(data["A"]),
            n_phi=int(data["n_phi"]),
            eps0=float(data["eps0"]),
            eps=float(data["eps"]),
            alpha=float(data.get("alpha", 2.0)),
            gamma=float(data.get("gamma", 2.1)),
            subroutine=Subroutine(data.get("subroutine", "pencil")),
            strict_bounds=bool(data.get("strict_bounds", False)),
            kappa_search=KappaSearch(data.get("kappa_search", "largest")),
            random_kappa_draws=int(data.get("random_kappa_draws", 1000)),
            cap_final_multiplier=bool(data.get("cap_final_multiplier", True)),
            pencil_rtol=float(data.get("pencil_rtol", 1e-8)),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["subroutine"] = self.subroutine.value
        d["kappa_search"] = self.kappa_search.value
        return d


@dataclass
class RoundRecord:
    d: int
    k_d: float
    kappa: float
    p_d: float
    M_d: int
    K: int
    estimates: List[float] = field(default_factory=list)
    cost_so_far: float = 0.0

    @staticmethod
    def from_dict(data: dict) -> "RoundRecord":
        return RoundRecord(
            d=int(data["d"]),
            k_d=float(data["k_d"]),
            kappa=float(data["kappa"]),
            p_d=float(data["p_d"]),
            M_d=int(data["M_d"]),
            K=int(data["K"]),
            estimates=[float(x) for x in data.get("estimates", [])],
            cost_so_far=float(data.get("cost_so_far", 0.0)),
        )

    @staticmethod
    def from_list(datas: List[dict]) -> List["RoundRecord"]:
        return [RoundRecord.from_dict(d) for d in datas]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    final_estimates: List[float]
    total_cost: float
    failure: FailureMode = field(default_factory=lambda: FailureMode.NONE)
    d_f: int = 0
    # 施加在工作酉算子上的平移 χ
    shift: float = 0.0
    trace: List[RoundRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "final_estimates": list(self.final_estimates),
            "total_cost": self.total_cost,
            "failure": self.failure.value,
            "d_f": self.d_f,
            "shift": self.shift,
        }

    @staticmethod
    def format_result(result: "RunResult") -> str:
        lines = [
            f"状态: {result.failure.cn}",
            f"完成阶数: {result.d_f}",
            f"总代价 T: {result.total_cost:.6g}",
        ]
        for i, phi in enumerate(result.final_estimates):
            lines.append(f"  φ̃[{i}] = {phi:.12f}")
        return "\n".join(lines)


@dataclass
class ScenarioConfig:
    n_phi: int = 2
    delta_c: List[float] = field(default_factory=lambda: [1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
    subroutine: Subroutine = field(default_factory=lambda: Subroutine.PENCIL)
    seeds: int = 50
    alpha: float = 2.0
    gamma: float = 2.1
    strict_eps: bool = False
    eps: Optional[float] = None
    eps0: Optional[float] = None
    A: Optional[float] = None
    master_seed: int = 0
    kappa_search: KappaSearch = field(default_factory=lambda: KappaSearch.LARGEST)
    cap_final_multiplier: bool = True
    pencil_rtol: float = 1e-8
    binomial_exact_max: int = 1_000_000
    calibration_trials: int = 20
    workers: int = 1
    n_bins: int = 8

    @property
    def amplitude_bound(self) -> float:
        """等权场景下 A 默认取 1/(2n_φ)"""
        return self.A if self.A is not None else 1.0 / (2 * self.n_phi)

    @staticmethod
    def from_dict(data: dict) -> "ScenarioConfig":
        delta_c = data.get("delta_c", [1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
        if isinstance(delta_c, (int, float)):
            delta_c = [delta_c]
        return ScenarioConfig(
            n_phi=int(data.get("n_phi", 2)),
            delta_c=[float(x) for x in delta_c],
            subroutine=Subroutine(data.get("subroutine", "pencil")),
            seeds=int(data.get("seeds", 50)),
            alpha=float(data.get("alpha", 2.0)),
            gamma=float(data.get("gamma", 2.1)),
            strict_eps=bool(data.get("strict_eps", False)),
            eps=None if data.get("eps") is None else float(data["eps"]),
            eps0=None if data.get("eps0") is None else float(data["eps0"]),
            A=None if data.get("A") is None else float(data["A"]),
            master_seed=int(data.get("master_seed", 0)),
            kappa_search=KappaSearch(data.get("kappa_search", "largest")),
            cap_final_multiplier=bool(data.get("cap_final_multiplier", True)),
            pencil_rtol=float(data.get("pencil_rtol", 1e-8)),
            binomial_exact_max=int(data.get("binomial_exact_max", 1_000_000)),
            calibration_trials=int(data.get("calibration_trials", 20)),
            workers=int(data.get("workers", 1)),
            n_bins=int(data.get("n_bins", 8)),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["subroutine"] = self.subroutine.value
        d["kappa_search"] = self.kappa_search.value
        return d


@dataclass
class PhaseErrorRow:
    phase_index: int
    true_phase: float
    estimate: float
    error: float


@dataclass
class TrialRecord:
    seed: int
    delta_c: float
    subroutine: Subroutine
    n_phi: int
    total_cost: float
    rows: List[PhaseErrorRow] = field(default_factory=list)
    failure: FailureMode = field(default_factory=lambda: FailureMode.NONE)

    CSV_HEADER = [
        "seed",
        "delta_c",
        "subroutine",
        "n_phi",
        "T",
        "phase_index",
        "true_phase",
        "estimate",
        "error",
        "failure",
    ]

    def to_rows(self) -> List[list]:
        """展开为 CSV 行，每个真实相位一行"""
        return [
            [
                self.seed,
                repr(self.delta_c),
                self.subroutine.value,
                self.n_phi,
                repr(self.total_cost),
                row.phase_index,
                repr(row.true_phase),
                repr(row.estimate),
                repr(row.error),
                self.failure.value,
            ]
            for row in self.rows
        ]

    @staticmethod
    def from_rows(rows: List[dict]) -> List["TrialRecord"]:
        """从 CSV 字典行重新组装记录，按 (delta_c, seed) 分组"""
        records: Dict[tuple, TrialRecord] = {}
        for r in rows:
            key = (float(r["delta_c"]), int(r["seed"]), r["subroutine"])
            if key not in records:
                records[key] = TrialRecord(
                    seed=int(r["seed"]),
                    delta_c=float(r["delta_c"]),
                    subroutine=Subroutine(r["subroutine"]),
                    n_phi=int(r["n_phi"]),
                    total_cost=float(r["T"]),
                    failure=FailureMode(r["failure"]),
                )
            records[key].rows.append(
                PhaseErrorRow(
                    phase_index=int(r["phase_index"]),
                    true_phase=float(r["true_phase"]),
                    estimate=float(r["estimate"]),
                    error=float(r["error"]),
                )
            )
        return list(records.values())


@dataclass
class FitBin:
    rms_T: float
    rms_error: float
    stderr: float
    count: int


@dataclass
class FitResult:
    exponent: float
    prefactor: float
    bins: List[FitBin] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LimitRow:
    strategy: str
    fisher: float
    cost: float
    # Cramér-Rao 界 I^{-1/2}
    bound: float
    # 闭式（领头阶）表达式
    asymptotic: float

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def format_limits(rows: List["LimitRow"]) -> str:
        """将极限表格式化为可读文本"""
        header = f"{'strategy':<12}{'fisher':>16}{'cost':>16}{'bound':>16}{'closed form':>16}"
        lines = [header]
        for row in rows:
            lines.append(
                f"{row.strategy:<12}{row.fisher:>16.6g}{row.cost:>16.6g}"
                f"{row.bound:>16.6g}{row.asymptotic:>16.6g}"
            )
        return "\n".join(lines)
